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

// Mini-batch optimization of the combined objective with validation-based
// model selection and early stopping.

#ifndef MVSEMI_TRAINING_HPP_
#define MVSEMI_TRAINING_HPP_

#include "mvsemi/losses.hpp"
#include "mvsemi/model.hpp"
#include "mvsemi/nn.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsemi {

enum class SelectionMetric { automatic, auroc, accuracy, none };

std::string to_string(SelectionMetric m);
std::string to_string(OptimizerKind k);

struct TrainConfig {
    int batch_size = 128;
    int max_epochs = 50;
    /// Stop after this many optimizer steps; 0 means no step limit.
    long max_steps = 0;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adaptive_moment;
    /// Evaluations without improvement before stopping.
    int patience = 10;
    /// automatic picks AUROC for two classes and accuracy otherwise.
    SelectionMetric selection_metric = SelectionMetric::automatic;
    int eval_every = 1;
    std::uint64_t seed = 0;
    /// Check every parameter for non-finite values after each update.
    bool check_finite = true;

    void validate() const;
};

void to_json(nlohmann::json &j, const TrainConfig &c);
void from_json(const nlohmann::json &j, TrainConfig &c);

struct EvalPoint {
    int epoch = 0;
    long step = 0;
    double auroc = 0.0;
    double accuracy = 0.0;
    double metric = 0.0;
};

void to_json(nlohmann::json &j, const EvalPoint &p);

struct TrainHistory {
    std::vector<LossBreakdown> steps;
    std::vector<EvalPoint> evals;
    /// Index into evals of the retained parameters; -1 when the last
    /// parameters were kept.
    int best_eval = -1;
    int epochs_run = 0;
    bool stopped_early = false;
};

/// Thrown when a loss or parameter turns non-finite; what() carries the
/// offending batch and the loss breakdown.
class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shuffled by (seed, epoch); the final short batch is kept.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, std::uint64_t seed, int epoch);

struct TrainHooks {
    std::function<void(const LossBreakdown &)> on_step;
    std::function<void(const EvalPoint &)> on_eval;
};

SelectionMetric resolve_metric(SelectionMetric m, int num_classes);

/// Optimizes the model in place. When val is given and selection is not
/// none, the parameters with the best validation metric are restored.
TrainHistory train(MultiViewModel &model, const Dataset &train_set, const Dataset *val_set,
                   const TrainConfig &config, const LossOptions &options, const TrainHooks &hooks = {});
TrainHistory train(MultiViewModel &model, const Dataset &train_set, const Dataset *val_set,
                   const TrainConfig &config, const TrainHooks &hooks = {});

/// AUROC and accuracy of any classifier on the labeled samples of a dataset.
EvalPoint score_classifier(const Classifier &classifier, const Dataset &dataset);

} // namespace mvsemi

#endif // MVSEMI_TRAINING_HPP_
