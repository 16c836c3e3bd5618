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

// Prediction metrics, multi-seed summaries, the impute-then-retrain
// protocol, hyperparameter sweeps and plain-text report tables.

#ifndef MVSEMI_EVALUATION_HPP_
#define MVSEMI_EVALUATION_HPP_

#include "mvsemi/baselines.hpp"
#include "mvsemi/data.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mvsemi {

struct MetricsReport {
    double auroc = 0.0;
    double accuracy = 0.0;
    SplitTag split = SplitTag::test;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::string method;
    double alpha = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double keep_fraction = 1.0;
    double drop_rate = 0.0;
    std::vector<int> skipped_classes;
};

void to_json(nlohmann::json &j, const MetricsReport &r);
void from_json(const nlohmann::json &j, MetricsReport &r);

/// Fills metrics from the classifier's predictions on the labeled samples.
MetricsReport evaluate_prediction(const Classifier &classifier, const Dataset &dataset, MetricsReport context = {});

struct MeanStd {
    double mean = 0.0;
    /// Sample standard deviation (n - 1); zero for a single value.
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double> &values);
/// "0.7419 ± 0.0105"
std::string format_mean_std(const MeanStd &m, int digits = 4);

struct SeedRun {
    std::uint64_t seed = 0;
    MetricsReport val;
    MetricsReport test;
};

/// Trains one method per seed (model init and batching reseeded, data
/// fixed) and reports validation and test metrics for each.
std::vector<SeedRun> run_seeds(BaselineKind kind, const DatasetSplits &data, const ModelConfig &model_config,
                               const TrainConfig &train_config, const std::vector<std::uint64_t> &seeds,
                               const MetricsReport &context = {});

struct MethodSummary {
    BaselineKind kind = BaselineKind::ours;
    MeanStd auroc;
    MeanStd accuracy;
};

MethodSummary summarize(BaselineKind kind, const std::vector<MetricsReport> &reports);

std::string method_label(BaselineKind kind);
/// Method x {AUROC, Accuracy} table in the fixed method order; methods
/// absent from rows are skipped.
std::string render_table(const std::string &title, const std::vector<MethodSummary> &rows);

/// Mean squared error between imputed and ground-truth values over the
/// (sample, view) slots absent in `with_missing` but present in `truth`.
double imputation_mse(const Dataset &imputed, const Dataset &with_missing, const Dataset &truth);

/// Replaces absent views with the given per-view feature means.
Dataset mean_impute(const Dataset &dataset, const std::vector<Features> &means);

struct ImputationCondition {
    std::string name;
    MetricsReport val;
    MetricsReport test;
    /// On the test split; NaN when no ground truth was supplied.
    double mse = 0.0;
};

struct NamedGenerator {
    std::string name;
    const MultiViewModel *model = nullptr;
};

/// Mean imputation plus one condition per generator: each imputes
/// train/val/test, trains Base on the labeled imputed train split, and
/// scores it. Split tags are checked so test labels never reach training.
std::vector<ImputationCondition> evaluate_imputation(const DatasetSplits &with_missing, const Dataset *test_truth,
                                                     const std::vector<NamedGenerator> &generators,
                                                     const ModelConfig &base_model_config,
                                                     const TrainConfig &base_train_config,
                                                     ImputeMode mode = ImputeMode::mean);

enum class SweepAxis { alpha, gamma };
std::string to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string &s);

struct SweepPoint {
    double value = 0.0;
    /// Mean validation metric over seeds; NaN when the point failed.
    double metric = 0.0;
    std::vector<double> per_seed;
    std::string note;
};

std::vector<SweepPoint> sensitivity_sweep(SweepAxis axis, const std::vector<double> &grid, const Dataset &train_set,
                                          const Dataset &val_set, const ModelConfig &model_config,
                                          const TrainConfig &train_config, const std::vector<std::uint64_t> &seeds);

/// Two columns, "value,metric"; failed points carry nan.
void write_sweep_csv(const std::filesystem::path &path, const std::vector<SweepPoint> &points);

} // namespace mvsemi

#endif // MVSEMI_EVALUATION_HPP_
