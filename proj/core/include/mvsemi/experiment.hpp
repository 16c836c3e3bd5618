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

// Declarative experiment description shared by the command-line tool and the
// test suites, plus the standard data preparation pipeline:
// generate or load, drop views, standardize, reduce training labels.

#ifndef MVSEMI_EXPERIMENT_HPP_
#define MVSEMI_EXPERIMENT_HPP_

#include "mvsemi/baselines.hpp"
#include "mvsemi/data.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvsemi {

struct DataPrep {
    double drop_rate = 0.0;
    double keep_fraction = 1.0;
    bool standardize = true;
    std::uint64_t seed = 0;
};

struct PreparedData {
    /// Views dropped, standardized, train labels reduced.
    DatasetSplits splits;
    /// Same samples, standardized identically, before any view was dropped.
    DatasetSplits complete;
    std::vector<MissingnessStats> missingness;
    LabelReduction labels;
    nlohmann::json standardizer;
    nlohmann::json calibration;
};

PreparedData prepare_data(const DatasetTriplet &raw, const DataPrep &prep);

struct CsvSource {
    std::vector<std::filesystem::path> views;
    std::optional<std::filesystem::path> labels;
    DatasetSchema schema;
};

struct ExperimentConfig {
    std::optional<GeneratorConfig> generator;
    /// Directory written by gen-data (train/, val/, test/).
    std::optional<std::filesystem::path> dataset_dir;
    std::optional<CsvSource> csv;

    ModelConfig model;
    TrainConfig train;
    BaselineKind method = BaselineKind::ours;
    double drop_rate = 0.0;
    double keep_fraction = 1.0;
    bool standardize = true;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir = "runs";
    ImputeMode impute_mode = ImputeMode::mean;
    std::string sweep_axis = "alpha";
    std::vector<double> sweep_grid{0.0, 0.1, 1.0, 10.0, 100.0};

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

void to_json(nlohmann::json &j, const ExperimentConfig &c);
void from_json(const nlohmann::json &j, ExperimentConfig &c);
ExperimentConfig load_experiment_config(const std::filesystem::path &path);

/// Resolves the configured data source into prepared splits. Generator and
/// CSV sources run prepare_data; a dataset directory is read as written.
PreparedData load_experiment_data(const ExperimentConfig &config);

/// Writes train/, val/, test/ and, when views were dropped, complete/<split>.
void write_prepared_data(const PreparedData &data, const std::filesystem::path &dir, const nlohmann::json &extra);
/// Reads what write_prepared_data wrote; complete splits are loaded when present.
PreparedData read_prepared_data(const std::filesystem::path &dir, bool verify = true);

} // namespace mvsemi

#endif // MVSEMI_EXPERIMENT_HPP_
