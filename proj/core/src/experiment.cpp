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

#include "mvsemi/experiment.hpp"

#include "mvsemi/dataset_io.hpp"

#include <fstream>

namespace mvsemi {

namespace {

constexpr std::uint64_t kMissingStream = 0x6d697373ULL;
constexpr std::uint64_t kLabelStream = 0x6c6162656cULL;
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;

ImputeMode parse_impute_mode(const std::string &s)
{
    if (s == "mean")
        return ImputeMode::mean;
    if (s == "sample")
        return ImputeMode::sample;
    throw ConfigError("impute_mode: expected 'mean' or 'sample', got '" + s + "'");
}

} // namespace

PreparedData prepare_data(const DatasetTriplet &raw, const DataPrep &prep)
{
    PreparedData out;
    out.calibration = raw.calibration;
    const Dataset *splits[3] = {&raw.train, &raw.val, &raw.test};
    Dataset dropped[3];
    for (int i = 0; i < 3; ++i) {
        MissingnessStats stats;
        dropped[i] = inject_missingness(*splits[i], prep.drop_rate,
                                        derive_seed(prep.seed, kMissingStream, static_cast<std::uint64_t>(i)), &stats);
        out.missingness.push_back(std::move(stats));
    }
    Dataset complete[3] = {raw.train, raw.val, raw.test};
    if (prep.standardize) {
        const Standardizer st = Standardizer::fit(dropped[0]);
        out.standardizer = st.to_json();
        for (int i = 0; i < 3; ++i) {
            dropped[i] = st.apply(dropped[i]);
            complete[i] = st.apply(complete[i]);
        }
    }
    out.labels = reduce_labels(dropped[0], prep.keep_fraction, derive_seed(prep.seed, kLabelStream));
    out.splits = {out.labels.dataset, std::move(dropped[1]), std::move(dropped[2])};
    out.complete = {std::move(complete[0]), std::move(complete[1]), std::move(complete[2])};
    return out;
}

void ExperimentConfig::validate() const
{
    const int sources = (generator ? 1 : 0) + (dataset_dir ? 1 : 0) + (csv ? 1 : 0);
    if (sources != 1)
        throw ConfigError("data: exactly one of 'generator', 'dataset_dir' or 'csv' must be given");
    if (generator) {
        try {
            generator->validate();
        } catch (const std::invalid_argument &e) {
            throw ConfigError(std::string("data.generator: ") + e.what());
        }
    }
    try {
        model.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    try {
        train.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    if (!(drop_rate >= 0.0 && drop_rate < 1.0))
        throw ConfigError("drop_rate: must lie in [0, 1)");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw ConfigError("keep_fraction: must lie in (0, 1]");
    if (seeds.empty())
        throw ConfigError("seeds: at least one seed is required");
    if (output_dir.empty())
        throw ConfigError("output_dir: must not be empty");
    if (sweep_axis != "alpha" && sweep_axis != "gamma")
        throw ConfigError("sweep.axis: expected 'alpha' or 'gamma'");
    if (sweep_grid.empty())
        throw ConfigError("sweep.grid: must not be empty");
}

void to_json(nlohmann::json &j, const ExperimentConfig &c)
{
    nlohmann::json data = nlohmann::json::object();
    if (c.generator)
        data["generator"] = *c.generator;
    if (c.dataset_dir)
        data["dataset_dir"] = c.dataset_dir->string();
    if (c.csv) {
        std::vector<std::string> views;
        for (const auto &p : c.csv->views)
            views.push_back(p.string());
        data["csv"] = {{"views", views}, {"schema", c.csv->schema}};
        if (c.csv->labels)
            data["csv"]["labels"] = c.csv->labels->string();
    }
    j = {{"data", data},
         {"model", c.model},
         {"train", c.train},
         {"method", to_string(c.method)},
         {"drop_rate", c.drop_rate},
         {"keep_fraction", c.keep_fraction},
         {"standardize", c.standardize},
         {"seeds", c.seeds},
         {"output_dir", c.output_dir},
         {"impute_mode", c.impute_mode == ImputeMode::mean ? "mean" : "sample"},
         {"sweep", {{"axis", c.sweep_axis}, {"grid", c.sweep_grid}}}};
}

void from_json(const nlohmann::json &j, ExperimentConfig &c)
{
    if (!j.is_object())
        throw ConfigError("config: top level must be a JSON object");
    reject_unknown_keys(j,
                        {"data", "model", "train", "method", "drop_rate", "keep_fraction", "standardize", "seeds",
                         "output_dir", "impute_mode", "sweep"},
                        "config");
    if (!j.contains("data"))
        throw ConfigError("config: missing required field 'data'");
    const auto &data = j.at("data");
    reject_unknown_keys(data, {"generator", "dataset_dir", "csv"}, "data");
    if (data.contains("generator")) {
        const auto &g = data.at("generator");
        GeneratorConfig gc = g.value("kind", std::string("tabular")) == "glyph" ? GeneratorConfig::glyph_defaults()
                                                                                 : GeneratorConfig::tabular_defaults();
        from_json(g, gc);
        c.generator = gc;
    }
    if (data.contains("dataset_dir"))
        c.dataset_dir = data.at("dataset_dir").get<std::string>();
    if (data.contains("csv")) {
        const auto &s = data.at("csv");
        reject_unknown_keys(s, {"views", "labels", "schema"}, "data.csv");
        CsvSource src;
        for (const auto &p : s.at("views"))
            src.views.emplace_back(p.get<std::string>());
        if (s.contains("labels"))
            src.labels = s.at("labels").get<std::string>();
        src.schema = s.at("schema").get<DatasetSchema>();
        c.csv = std::move(src);
    }
    if (j.contains("model"))
        from_json(j.at("model"), c.model);
    if (j.contains("train"))
        from_json(j.at("train"), c.train);
    if (j.contains("method"))
        c.method = parse_baseline_kind(j.at("method").get<std::string>());
    c.drop_rate = j.value("drop_rate", c.drop_rate);
    c.keep_fraction = j.value("keep_fraction", c.keep_fraction);
    c.standardize = j.value("standardize", c.standardize);
    c.seeds = j.value("seeds", c.seeds);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("impute_mode"))
        c.impute_mode = parse_impute_mode(j.at("impute_mode").get<std::string>());
    if (j.contains("sweep")) {
        const auto &s = j.at("sweep");
        reject_unknown_keys(s, {"axis", "grid"}, "sweep");
        c.sweep_axis = s.value("axis", c.sweep_axis);
        c.sweep_grid = s.value("grid", c.sweep_grid);
    }
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    ExperimentConfig c;
    try {
        c = j.get<ExperimentConfig>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("config: wrong value type: ") + e.what());
    }
    c.validate();
    return c;
}

PreparedData load_experiment_data(const ExperimentConfig &config)
{
    DataPrep prep{config.drop_rate, config.keep_fraction, config.standardize, 0};
    if (config.generator) {
        prep.seed = config.generator->seed;
        return prepare_data(generate(*config.generator), prep);
    }
    if (config.csv) {
        Dataset all = load_tabular_csv(config.csv->views, config.csv->labels, config.csv->schema);
        DatasetSplits s = split_dataset(all, {0.64, 0.16, 0.20}, true, derive_seed(0, kSplitStream));
        DatasetTriplet raw{std::move(s.train), std::move(s.val), std::move(s.test), nlohmann::json::object()};
        return prepare_data(raw, prep);
    }
    return read_prepared_data(*config.dataset_dir);
}

void write_prepared_data(const PreparedData &data, const std::filesystem::path &dir, const nlohmann::json &extra)
{
    nlohmann::json ex = extra;
    ex["calibration"] = data.calibration;
    ex["standardizer_fitted"] = !data.standardizer.is_null();
    nlohmann::json kept = data.labels.kept_per_class;
    ex["labels_kept_per_class"] = kept;
    ex["label_warnings"] = data.labels.warnings;
    write_dataset_dir(data.splits.train, dir / "train", ex);
    write_dataset_dir(data.splits.val, dir / "val", ex);
    write_dataset_dir(data.splits.test, dir / "test", ex);
    bool any_dropped = false;
    for (const auto &m : data.missingness)
        for (auto d : m.dropped)
            any_dropped = any_dropped || d > 0;
    if (any_dropped) {
        write_dataset_dir(data.complete.train, dir / "complete" / "train", ex);
        write_dataset_dir(data.complete.val, dir / "complete" / "val", ex);
        write_dataset_dir(data.complete.test, dir / "complete" / "test", ex);
    }
}

PreparedData read_prepared_data(const std::filesystem::path &dir, bool verify)
{
    PreparedData out;
    out.splits.train = read_dataset_dir(dir / "train", verify);
    out.splits.val = read_dataset_dir(dir / "val", verify);
    out.splits.test = read_dataset_dir(dir / "test", verify);
    if (std::filesystem::exists(dir / "complete" / "test")) {
        out.complete.train = read_dataset_dir(dir / "complete" / "train", verify);
        out.complete.val = read_dataset_dir(dir / "complete" / "val", verify);
        out.complete.test = read_dataset_dir(dir / "complete" / "test", verify);
    } else {
        out.complete = out.splits;
    }
    out.labels.dataset = out.splits.train;
    const auto m = read_manifest(dir / "train");
    if (m.contains("calibration"))
        out.calibration = m.at("calibration");
    return out;
}

} // namespace mvsemi
