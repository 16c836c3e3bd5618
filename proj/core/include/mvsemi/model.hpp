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

// The multi-view network: one encoder and one decoder per view, product of
// experts fusion of the present views with a standard normal prior, and a
// predictor head on the fused latent.

#ifndef MVSEMI_MODEL_HPP_
#define MVSEMI_MODEL_HPP_

#include "mvsemi/autodiff.hpp"
#include "mvsemi/data.hpp"
#include "mvsemi/gaussian.hpp"
#include "mvsemi/nn.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mvsemi {

enum class EncoderFamily { mlp, conv };

struct ModelConfig {
    int latent_dim = 32;
    std::vector<int> encoder_hidden{128};
    std::vector<int> decoder_hidden{128};
    std::vector<int> predictor_hidden{64};
    /// Used for image views when encoder_family is conv.
    std::vector<ConvLayerSpec> conv_layers{{8, 1}, {16, 2}};
    EncoderFamily encoder_family = EncoderFamily::mlp;

    double beta = 0.1;
    double gamma = 1.0;
    double alpha = 1.0;
    /// Divides cosine affinities in the contrastive term.
    double temperature = 1.0;
    /// Apply the unsupervised term to labeled samples as well.
    bool unsup_on_labeled = true;
    /// Also add the per-view KL terms to the unsupervised objective.
    bool per_view_kl_in_unsup = false;
    /// Permit fusing with zero present views (prior only).
    bool allow_prior_only_fusion = false;

    std::uint64_t seed = 0;

    void validate() const;
};

void to_json(nlohmann::json &j, const ModelConfig &c);
void from_json(const nlohmann::json &j, ModelConfig &c);

/// Samples routed for one forward pass. Row r of the batch is samples[r];
/// view v only carries rows where it is present.
struct Batch {
    int size = 0;
    std::vector<std::vector<int>> present_rows;
    std::vector<Matrix> inputs;
    std::vector<int> labeled_rows;
    std::vector<int> labels;
    std::vector<std::int64_t> sample_ids;

    static Batch from_dataset(const Dataset &dataset, std::span<const std::size_t> indices);
    static Batch from_samples(const DatasetSchema &schema, std::span<const MultiViewSample *const> samples);
    int num_views() const { return static_cast<int>(present_rows.size()); }
};

/// Standard normal noise for one forward pass: one fused draw per sample and
/// one per (sample, present view).
struct LatentNoise {
    Matrix fused;
    std::vector<Matrix> per_view;

    static LatentNoise draw(const Batch &batch, int latent_dim, Rng &rng);
    static LatentNoise zeros(const Batch &batch, int latent_dim);
};

struct ForwardPass {
    std::vector<ad::Var> view_mean;
    std::vector<ad::Var> view_log_variance;
    std::vector<ad::Var> view_z;
    ad::Var fused_mean;
    ad::Var fused_log_variance;
    ad::Var z;
};

/// Anything that maps a dataset to class probabilities.
class Classifier {
  public:
    virtual ~Classifier() = default;
    /// N x num_classes, rows sum to 1.
    virtual Matrix predict_proba(const Dataset &dataset) const = 0;
};

struct PredictMode {
    enum class Kind { posterior_mean, monte_carlo };
    Kind kind = Kind::posterior_mean;
    int samples = 1;
    std::uint64_t seed = 0;

    static PredictMode posterior_mean() { return {}; }
    static PredictMode monte_carlo(int k, std::uint64_t seed = 0) { return {Kind::monte_carlo, k, seed}; }
};

enum class ImputeMode { mean, sample };

class MultiViewModel final : public Classifier {
  public:
    MultiViewModel(DatasetSchema schema, ModelConfig config);
    MultiViewModel(const MultiViewModel &) = delete;
    MultiViewModel &operator=(const MultiViewModel &) = delete;
    MultiViewModel(MultiViewModel &&) = default;
    MultiViewModel &operator=(MultiViewModel &&) = default;

    const DatasetSchema &schema() const { return schema_; }
    const ModelConfig &config() const { return config_; }
    ModelConfig &mutable_config() { return config_; }
    ParameterSet &parameters() { return params_; }
    const ParameterSet &parameters() const { return params_; }
    /// Parameter name prefixes, for masking checks and freezing.
    static std::string encoder_prefix(int v) { return "enc" + std::to_string(v) + "."; }
    static std::string decoder_prefix(int v) { return "dec" + std::to_string(v) + "."; }
    static std::string predictor_prefix() { return "pred."; }

    // Batched graph construction.
    struct Posterior {
        ad::Var mean;
        ad::Var log_variance;
    };
    Posterior encode(ad::Tape &tape, int v, const ad::Var &x) const;
    /// Gaussian views: per-element mean. Bernoulli views: logits.
    ad::Var decode(ad::Tape &tape, int v, const ad::Var &z) const;
    ad::Var logits(ad::Tape &tape, const ad::Var &z) const;
    /// Fuses per-view posteriors (rows routed by present_rows) with the prior.
    Posterior fuse(const std::vector<Posterior> &views, const std::vector<std::vector<int>> &present_rows,
                   int batch_size) const;
    ForwardPass forward(ad::Tape &tape, const Batch &batch, const LatentNoise &noise) const;

    // Per-sample operations.
    DiagGaussian encode_view(int v, std::span<const float> x) const;
    DiagGaussian fuse_present(std::span<const DiagGaussian> posteriors, const std::vector<bool> &mask) const;
    /// Per-element mean (gaussian) or probability (bernoulli).
    Vector decode_view(int v, const Vector &z) const;
    Vector predict(const Vector &z) const;
    Vector predict_sample(const MultiViewSample &sample, const PredictMode &mode = {}) const;
    /// Averages predict() over the rows of noise (k x latent_dim).
    Vector predict_sample_with_noise(const MultiViewSample &sample, const Matrix &noise) const;
    /// Reconstructions for every absent view; present views are untouched.
    std::map<int, Features> impute_missing(const MultiViewSample &sample, ImputeMode mode = ImputeMode::mean,
                                           std::uint64_t seed = 0) const;

    // Dataset-level helpers.
    Matrix predict_proba(const Dataset &dataset) const override;
    Matrix predict_proba(const Dataset &dataset, const PredictMode &mode) const;
    /// Fused posterior means, N x latent_dim.
    Matrix fused_means(const Dataset &dataset) const;
    Dataset impute_dataset(const Dataset &dataset, ImputeMode mode = ImputeMode::mean, std::uint64_t seed = 0) const;

  private:
    DiagGaussian fused_posterior(const MultiViewSample &sample) const;

    DatasetSchema schema_;
    ModelConfig config_;
    ParameterSet params_;
    std::vector<Mlp> encoder_mlp_;
    std::vector<ConvTrunk> encoder_conv_;
    std::vector<Linear> mean_head_;
    std::vector<Linear> log_variance_head_;
    std::vector<Mlp> decoder_;
    Mlp predictor_;
};

/// Row-wise softmax.
Matrix softmax_rows(const Matrix &logits);

/// Snapshot of parameter values, for best-checkpoint retention.
std::vector<Matrix> snapshot(const ParameterSet &params);
void restore(ParameterSet &params, const std::vector<Matrix> &values);

} // namespace mvsemi

#endif // MVSEMI_MODEL_HPP_
