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

// Comparison systems sharing the main model's data and evaluation harness:
// per-view logit averaging (base), two-stage unsupervised then classifier
// (mvae), supervised-only PoE training (deepimv_style), and the ablations.

#ifndef MVSEMI_BASELINES_HPP_
#define MVSEMI_BASELINES_HPP_

#include "mvsemi/model.hpp"
#include "mvsemi/training.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mvsemi {

enum class BaselineKind { base, mvae, deepimv_style, ours_no_cvmi, ours };

std::string to_string(BaselineKind k);
BaselineKind parse_baseline_kind(const std::string &s);
/// Row order used in report tables.
const std::vector<BaselineKind> &all_baseline_kinds();

/// One deterministic classifier per view; prediction averages the logits of
/// present, trained views.
class BaseModel final : public Classifier {
  public:
    BaseModel(DatasetSchema schema, const ModelConfig &config);
    BaseModel(BaseModel &&) = default;
    BaseModel &operator=(BaseModel &&) = default;

    const DatasetSchema &schema() const { return schema_; }
    ParameterSet &parameters() { return params_; }
    const ParameterSet &parameters() const { return params_; }
    bool trained(int v) const { return trained_.at(static_cast<std::size_t>(v)); }
    void set_trained(int v, bool t) { trained_.at(static_cast<std::size_t>(v)) = t; }

    ad::Var view_logits(ad::Tape &tape, int v, const ad::Var &x) const;
    /// Mean of present-view logits, then softmax.
    Vector predict_sample(const MultiViewSample &sample) const;
    Vector predict_from_logits(const std::vector<std::optional<Vector>> &view_logits) const;
    Matrix predict_proba(const Dataset &dataset) const override;

  private:
    DatasetSchema schema_;
    ParameterSet params_;
    std::vector<ConvTrunk> trunk_;
    std::vector<Mlp> head_;
    std::vector<bool> trained_;
};

/// Fails when no labeled sample exists. Views without any labeled present
/// sample are left untrained and ignored at inference.
BaseModel base_train(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                     const TrainConfig &train_config);

/// Dense classifier on fixed feature vectors.
class FeatureClassifier {
  public:
    FeatureClassifier(int in, const std::vector<int> &hidden, int num_classes, std::uint64_t seed);
    FeatureClassifier(FeatureClassifier &&) = default;
    FeatureClassifier &operator=(FeatureClassifier &&) = default;

    ParameterSet &parameters() { return params_; }
    ad::Var logits(ad::Tape &tape, const ad::Var &x) const { return mlp_(tape, x); }
    Matrix predict_proba(const Matrix &features) const;

  private:
    ParameterSet params_;
    Mlp mlp_;
};

struct MvaeConfig {
    std::vector<int> head_hidden{128, 128};
};

/// Frozen generative model plus a classifier on fused posterior means.
class MvaePipeline final : public Classifier {
  public:
    MvaePipeline(MultiViewModel model, FeatureClassifier head)
        : model_(std::move(model)), head_(std::move(head))
    {
    }
    const MultiViewModel &model() const { return model_; }
    MultiViewModel &model() { return model_; }
    FeatureClassifier &head() { return head_; }
    Matrix predict_proba(const Dataset &dataset) const override;

  private:
    MultiViewModel model_;
    FeatureClassifier head_;
};

struct MvaeResult {
    MvaePipeline pipeline;
    TrainHistory stage1;
    /// Encoder/decoder fingerprint before and after stage 2.
    std::uint64_t fingerprint_before_head = 0;
    std::uint64_t fingerprint_after_head = 0;
};

MvaeResult mvae_pipeline(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                         const TrainConfig &train_config, const MvaeConfig &mvae_config = {});

/// Loss options of the supervised-only configuration.
LossOptions deepimv_style_options(const ModelConfig &config);

struct ModelResult {
    MultiViewModel model;
    TrainHistory history;
};

/// Trains on the labeled samples only, with the supervised term alone.
ModelResult deepimv_style_train(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                                const TrainConfig &train_config);
ModelResult ours_train(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                       const TrainConfig &train_config);
/// ours with alpha forced to zero.
ModelResult ours_no_cvmi_train(const Dataset &train_set, const Dataset *val_set, ModelConfig model_config,
                               const TrainConfig &train_config);

/// Stretches epochs and eval interval so a run on n_subset samples takes
/// about as many optimizer steps as one on n_full samples.
TrainConfig step_matched(const TrainConfig &config, std::size_t n_full, std::size_t n_subset);

struct MethodRun {
    BaselineKind kind = BaselineKind::ours;
    std::unique_ptr<Classifier> classifier;
    /// Set for the methods built on MultiViewModel (mvae, deepimv_style,
    /// ours_no_cvmi, ours); points into classifier.
    const MultiViewModel *generative = nullptr;
    TrainHistory history;
};

MethodRun run_method(BaselineKind kind, const Dataset &train_set, const Dataset *val_set,
                     const ModelConfig &model_config, const TrainConfig &train_config,
                     const MvaeConfig &mvae_config = {});

/// Wraps a trained MultiViewModel as a Classifier with ownership.
class OwnedModel final : public Classifier {
  public:
    explicit OwnedModel(MultiViewModel model) : model_(std::move(model)) {}
    const MultiViewModel &model() const { return model_; }
    Matrix predict_proba(const Dataset &dataset) const override { return model_.predict_proba(dataset); }

  private:
    MultiViewModel model_;
};

} // namespace mvsemi

#endif // MVSEMI_BASELINES_HPP_
