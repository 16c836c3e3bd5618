/* Copyright 2026 The mvsemi Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
        limitations under the License.
==============================================================================*/

#include "mvsemi/checkpoint.hpp"

#include "mvsemi/dataset_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef MVSEMI_CODE_VERSION
#define MVSEMI_CODE_VERSION "unknown"
#endif

namespace mvsemi {

namespace {

const char *kManifestFile = "manifest.json";
const char *kParamsFile = "params.bin";

std::vector<const ParameterSet *> parameter_sets(const MethodRun &run)
{
    if (run.kind == BaselineKind::base) {
        const auto *m = dynamic_cast<const BaseModel *>(run.classifier.get());
        if (!m)
            throw std::invalid_argument("checkpoint: base run without a base classifier");
        return {&m->parameters()};
    }
    if (run.kind == BaselineKind::mvae) {
        auto *m = dynamic_cast<MvaePipeline *>(run.classifier.get());
        if (!m)
            throw std::invalid_argument("checkpoint: mvae run without a pipeline");
        return {&m->model().parameters(), &m->head().parameters()};
    }
    const auto *m = dynamic_cast<const OwnedModel *>(run.classifier.get());
    if (!m)
        throw std::invalid_argument("checkpoint: run without a model");
    return {&m->model().parameters()};
}

std::vector<ParameterSet *> mutable_sets(MethodRun &run)
{
    std::vector<ParameterSet *> out;
    for (const auto *p : parameter_sets(run))
        out.push_back(const_cast<ParameterSet *>(p));
    return out;
}

} // namespace

std::string code_version() { return MVSEMI_CODE_VERSION; }

void to_json(nlohmann::json &j, const CheckpointManifest &m)
{
    j = {{"format_version", m.format_version},
         {"method", to_string(m.method)},
         {"schema", m.schema},
         {"model", m.model},
         {"train", m.train},
         {"mvae", {{"head_hidden", m.mvae.head_hidden}}},
         {"seed", m.seed},
         {"code_version", m.code_version},
         {"base_trained", m.base_trained},
         {"metrics", m.metrics},
         {"data", m.data},
         {"params_sha256", m.params_sha256},
         {"params_fingerprint", m.params_fingerprint}};
}

void from_json(const nlohmann::json &j, CheckpointManifest &m)
{
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1)
        throw MalformedInput("checkpoint: unsupported format_version " + std::to_string(m.format_version));
    m.method = parse_baseline_kind(j.at("method").get<std::string>());
    m.schema = j.at("schema").get<DatasetSchema>();
    m.model = j.at("model").get<ModelConfig>();
    m.train = j.at("train").get<TrainConfig>();
    m.mvae.head_hidden = j.at("mvae").at("head_hidden").get<std::vector<int>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.code_version = j.at("code_version").get<std::string>();
    m.base_trained = j.at("base_trained").get<std::vector<bool>>();
    m.metrics = j.at("metrics");
    m.data = j.value("data", nlohmann::json::object());
    m.params_sha256 = j.at("params_sha256").get<std::string>();
    m.params_fingerprint = j.at("params_fingerprint").get<std::uint64_t>();
}

void save_checkpoint(const std::filesystem::path &dir, const MethodRun &run, CheckpointManifest manifest)
{
    std::filesystem::create_directories(dir);
    const auto sets = parameter_sets(run);
    {
        std::ofstream out(dir / kParamsFile, std::ios::binary);
        if (!out)
            throw std::runtime_error("checkpoint: cannot write " + (dir / kParamsFile).string());
        for (const auto *s : sets)
            s->save(out);
    }
    manifest.method = run.kind;
    manifest.code_version = code_version();
    manifest.params_sha256 = sha256_file(dir / kParamsFile);
    manifest.params_fingerprint = sets.front()->fingerprint();
    if (run.kind == BaselineKind::base) {
        const auto *m = dynamic_cast<const BaseModel *>(run.classifier.get());
        manifest.base_trained.clear();
        for (int v = 0; v < m->schema().num_views; ++v)
            manifest.base_trained.push_back(m->trained(v));
    }
    std::ofstream out(dir / kManifestFile);
    out << nlohmann::json(manifest).dump(2) << '\n';
}

CheckpointManifest read_checkpoint_manifest(const std::filesystem::path &dir)
{
    std::ifstream in(dir / kManifestFile);
    if (!in)
        throw MalformedInput("checkpoint: missing " + (dir / kManifestFile).string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw MalformedInput("checkpoint: invalid manifest: " + std::string(e.what()));
    }
    return j.get<CheckpointManifest>();
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path &dir)
{
    LoadedCheckpoint lc;
    lc.manifest = read_checkpoint_manifest(dir);
    const auto &m = lc.manifest;
    if (sha256_file(dir / kParamsFile) != m.params_sha256)
        throw IntegrityError("checkpoint: params.bin does not match its recorded checksum");
    MethodRun &run = lc.run;
    run.kind = m.method;
    switch (m.method) {
    case BaselineKind::base: {
        auto b = std::make_unique<BaseModel>(m.schema, m.model);
        for (std::size_t v = 0; v < m.base_trained.size(); ++v)
            b->set_trained(static_cast<int>(v), m.base_trained[v]);
        run.classifier = std::move(b);
        break;
    }
    case BaselineKind::mvae: {
        ModelConfig cfg = m.model;
        cfg.gamma = 0.0;
        cfg.alpha = 0.0;
        auto p = std::make_unique<MvaePipeline>(
            MultiViewModel(m.schema, cfg),
            FeatureClassifier(cfg.latent_dim, m.mvae.head_hidden, m.schema.num_classes, cfg.seed));
        run.generative = &p->model();
        run.classifier = std::move(p);
        break;
    }
    default: {
        ModelConfig cfg = m.model;
        if (m.method == BaselineKind::ours_no_cvmi)
            cfg.alpha = 0.0;
        auto p = std::make_unique<OwnedModel>(MultiViewModel(m.schema, cfg));
        run.generative = &p->model();
        run.classifier = std::move(p);
        break;
    }
    }
    std::ifstream in(dir / kParamsFile, std::ios::binary);
    for (auto *s : mutable_sets(run))
        s->load(in);
    return lc;
}

} // namespace mvsemi
