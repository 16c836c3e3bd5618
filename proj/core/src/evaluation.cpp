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

#include "mvsemi/evaluation.hpp"

#include "mvsemi/metrics.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

namespace mvsemi {

void to_json(nlohmann::json &j, const MetricsReport &r)
{
    j = {{"auroc", r.auroc},
         {"accuracy", r.accuracy},
         {"split", to_string(r.split)},
         {"n_samples", r.n_samples},
         {"seed", r.seed},
         {"method", r.method},
         {"hyperparameters",
          {{"alpha", r.alpha},
           {"gamma", r.gamma},
           {"beta", r.beta},
           {"keep_fraction", r.keep_fraction},
           {"drop_rate", r.drop_rate}}},
         {"skipped_classes", r.skipped_classes}};
}

void from_json(const nlohmann::json &j, MetricsReport &r)
{
    r.auroc = j.at("auroc").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.split = parse_split_tag(j.at("split").get<std::string>());
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.method = j.at("method").get<std::string>();
    const auto &h = j.at("hyperparameters");
    r.alpha = h.at("alpha").get<double>();
    r.gamma = h.at("gamma").get<double>();
    r.beta = h.at("beta").get<double>();
    r.keep_fraction = h.at("keep_fraction").get<double>();
    r.drop_rate = h.at("drop_rate").get<double>();
    r.skipped_classes = j.value("skipped_classes", std::vector<int>{});
}

MetricsReport evaluate_prediction(const Classifier &classifier, const Dataset &dataset, MetricsReport context)
{
    const Dataset labeled = dataset.labeled_only();
    if (labeled.samples.empty())
        throw std::invalid_argument("evaluate_prediction: split has no labels");
    std::vector<int> labels;
    for (const auto &s : labeled.samples)
        labels.push_back(*s.label);
    const Matrix proba = classifier.predict_proba(labeled);
    const AurocResult a = auroc(proba, labels);
    context.auroc = a.value;
    context.skipped_classes = a.skipped_classes;
    context.accuracy = accuracy(proba, labels);
    context.split = dataset.split;
    context.n_samples = labeled.samples.size();
    return context;
}

MeanStd mean_std(const std::vector<double> &values)
{
    MeanStd m;
    if (values.empty())
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    for (double v : values)
        m.mean += v;
    m.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - m.mean) * (v - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

std::string format_mean_std(const MeanStd &m, int digits)
{
    return fmt::format("{:.{}f} ± {:.{}f}", m.mean, digits, m.std, digits);
}

std::vector<SeedRun> run_seeds(BaselineKind kind, const DatasetSplits &data, const ModelConfig &model_config,
                               const TrainConfig &train_config, const std::vector<std::uint64_t> &seeds,
                               const MetricsReport &context)
{
    std::vector<SeedRun> out;
    for (auto seed : seeds) {
        ModelConfig mc = model_config;
        TrainConfig tc = train_config;
        mc.seed = seed;
        tc.seed = seed;
        MethodRun run = run_method(kind, data.train, &data.val, mc, tc);
        MetricsReport ctx = context;
        ctx.seed = seed;
        ctx.method = to_string(kind);
        ctx.alpha = kind == BaselineKind::ours ? mc.alpha : 0.0;
        ctx.gamma = kind == BaselineKind::mvae ? 0.0 : (kind == BaselineKind::deepimv_style ? 1.0 : mc.gamma);
        ctx.beta = mc.beta;
        SeedRun sr;
        sr.seed = seed;
        sr.val = evaluate_prediction(*run.classifier, data.val, ctx);
        sr.test = evaluate_prediction(*run.classifier, data.test, ctx);
        out.push_back(std::move(sr));
    }
    return out;
}

MethodSummary summarize(BaselineKind kind, const std::vector<MetricsReport> &reports)
{
    std::vector<double> a, c;
    for (const auto &r : reports) {
        a.push_back(r.auroc);
        c.push_back(r.accuracy);
    }
    return {kind, mean_std(a), mean_std(c)};
}

std::string method_label(BaselineKind kind)
{
    switch (kind) {
    case BaselineKind::base: return "Base";
    case BaselineKind::mvae: return "MVAE";
    case BaselineKind::deepimv_style: return "DeepIMV";
    case BaselineKind::ours_no_cvmi: return "Ours -L_cvmi";
    case BaselineKind::ours: return "Ours";
    }
    return "?";
}

std::string render_table(const std::string &title, const std::vector<MethodSummary> &rows)
{
    std::string out = title + "\n";
    out += fmt::format("{:<14} {:>17} {:>17}\n", "Method", "AUROC", "Accuracy");
    for (auto kind : all_baseline_kinds())
        for (const auto &r : rows)
            if (r.kind == kind)
                out += fmt::format("{:<14} {:>17} {:>17}\n", method_label(kind), format_mean_std(r.auroc),
                                   format_mean_std(r.accuracy));
    return out;
}

double imputation_mse(const Dataset &imputed, const Dataset &with_missing, const Dataset &truth)
{
    if (imputed.samples.size() != with_missing.samples.size() || truth.samples.size() != with_missing.samples.size())
        throw std::invalid_argument("imputation_mse: datasets differ in size");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < with_missing.samples.size(); ++i) {
        const auto &m = with_missing.samples[i];
        const auto &t = truth.samples[i];
        const auto &p = imputed.samples[i];
        if (m.sample_id != t.sample_id || m.sample_id != p.sample_id)
            throw std::invalid_argument("imputation_mse: sample order differs");
        for (std::size_t v = 0; v < m.views.size(); ++v) {
            if (m.views[v] || !t.views[v])
                continue;
            if (!p.views[v])
                throw std::invalid_argument("imputation_mse: view left absent after imputation");
            const auto &a = *p.views[v];
            const auto &b = *t.views[v];
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
                sum += d * d;
            }
            count += a.size();
        }
    }
    if (count == 0)
        return 0.0;
    return sum / static_cast<double>(count);
}

Dataset mean_impute(const Dataset &dataset, const std::vector<Features> &means)
{
    Dataset out = dataset;
    for (auto &s : out.samples)
        for (std::size_t v = 0; v < s.views.size(); ++v)
            if (!s.views[v])
                s.views[v] = means.at(v);
    return out;
}

namespace {

void check_provenance(const DatasetSplits &d)
{
    if (d.train.split != SplitTag::train || d.val.split != SplitTag::val || d.test.split != SplitTag::test)
        throw std::invalid_argument("imputation: split tags do not match their roles");
    std::set<std::int64_t> seen;
    for (const auto *ds : {&d.train, &d.val, &d.test})
        for (const auto &s : ds->samples)
            if (!seen.insert(s.sample_id).second)
                throw std::invalid_argument("imputation: sample " + std::to_string(s.sample_id) +
                                            " appears in more than one split");
}

} // namespace

std::vector<ImputationCondition> evaluate_imputation(const DatasetSplits &with_missing, const Dataset *test_truth,
                                                     const std::vector<NamedGenerator> &generators,
                                                     const ModelConfig &base_model_config,
                                                     const TrainConfig &base_train_config, ImputeMode mode)
{
    check_provenance(with_missing);
    std::vector<ImputationCondition> out;
    auto run_condition = [&](const std::string &name, DatasetSplits imputed) {
        check_provenance(imputed);
        BaseModel base = base_train(imputed.train, &imputed.val, base_model_config, base_train_config);
        ImputationCondition c;
        c.name = name;
        MetricsReport ctx;
        ctx.method = "base+" + name;
        ctx.seed = base_model_config.seed;
        c.val = evaluate_prediction(base, imputed.val, ctx);
        c.test = evaluate_prediction(base, imputed.test, ctx);
        c.mse = test_truth ? imputation_mse(imputed.test, with_missing.test, *test_truth)
                           : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(c));
    };

    const auto means = present_feature_means(with_missing.train);
    run_condition("mean", {mean_impute(with_missing.train, means), mean_impute(with_missing.val, means),
                           mean_impute(with_missing.test, means)});
    for (const auto &g : generators) {
        if (!g.model)
            throw std::invalid_argument("imputation: generator '" + g.name + "' is null");
        const std::uint64_t seed = base_model_config.seed;
        run_condition(g.name, {g.model->impute_dataset(with_missing.train, mode, seed),
                               g.model->impute_dataset(with_missing.val, mode, seed),
                               g.model->impute_dataset(with_missing.test, mode, seed)});
    }
    return out;
}

std::string to_string(SweepAxis a) { return a == SweepAxis::alpha ? "alpha" : "gamma"; }

SweepAxis parse_sweep_axis(const std::string &s)
{
    if (s == "alpha")
        return SweepAxis::alpha;
    if (s == "gamma")
        return SweepAxis::gamma;
    throw ConfigError("sweep axis: expected 'alpha' or 'gamma', got '" + s + "'");
}

std::vector<SweepPoint> sensitivity_sweep(SweepAxis axis, const std::vector<double> &grid, const Dataset &train_set,
                                          const Dataset &val_set, const ModelConfig &model_config,
                                          const TrainConfig &train_config, const std::vector<std::uint64_t> &seeds)
{
    if (grid.empty())
        throw std::invalid_argument("sweep: empty grid");
    if (seeds.empty())
        throw std::invalid_argument("sweep: no seeds");
    const SelectionMetric metric = resolve_metric(train_config.selection_metric, train_set.schema.num_classes);
    std::vector<SweepPoint> out;
    for (double value : grid) {
        SweepPoint p;
        p.value = value;
        try {
            for (auto seed : seeds) {
                ModelConfig mc = model_config;
                (axis == SweepAxis::alpha ? mc.alpha : mc.gamma) = value;
                mc.seed = seed;
                TrainConfig tc = train_config;
                tc.seed = seed;
                ModelResult r = ours_train(train_set, &val_set, mc, tc);
                const MetricsReport rep = evaluate_prediction(r.model, val_set);
                p.per_seed.push_back(metric == SelectionMetric::accuracy ? rep.accuracy : rep.auroc);
            }
            p.metric = mean_std(p.per_seed).mean;
        } catch (const std::exception &e) {
            p.metric = std::numeric_limits<double>::quiet_NaN();
            p.note = e.what();
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_sweep_csv(const std::filesystem::path &path, const std::vector<SweepPoint> &points)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("sweep: cannot write " + path.string());
    out << "value,metric\n";
    for (const auto &p : points) {
        out << fmt::format("{},", p.value);
        if (std::isnan(p.metric))
            out << "nan\n";
        else
            out << fmt::format("{:.6f}\n", p.metric);
    }
}

} // namespace mvsemi
