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

// Loss terms for a forward pass: supervised information bottleneck,
// unsupervised ELBO over present views, and the cross-view contrastive term.
// Every function returns a 1x1 Var on the pass's tape, so the combined
// objective is differentiated in one backward sweep.

#ifndef MVSEMI_LOSSES_HPP_
#define MVSEMI_LOSSES_HPP_

#include "mvsemi/autodiff.hpp"
#include "mvsemi/model.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace mvsemi {

struct LossBreakdown {
    long step = 0;
    /// Mean negative log-likelihood contribution of each view per sample in
    /// the unsupervised term.
    std::vector<double> recon;
    double kl_joint = 0.0;
    std::vector<double> kl_view;
    double ce = 0.0;
    double cvmi = 0.0;
    double unsup = 0.0;
    double sup = 0.0;
    double total = 0.0;
    int n_labeled = 0;
    int n_unlabeled = 0;
    /// View pairs that had at least two aligned samples.
    int n_pairs = 0;
};

void to_json(nlohmann::json &j, const LossBreakdown &b);

struct LossOptions {
    double beta = 0.1;
    double gamma = 1.0;
    double alpha = 1.0;
    double temperature = 1.0;
    bool unsup_on_labeled = true;
    bool per_view_kl_in_unsup = false;
    /// Drop the unsupervised term entirely (supervised-only training).
    bool include_unsup = true;

    static LossOptions from(const ModelConfig &config);
};

struct LossTerms {
    ad::Var unsup;
    ad::Var sup;
    ad::Var cvmi;
    ad::Var total;
    LossBreakdown breakdown;
};

/// Symmetrized contrastive estimate between aligned rows of z_i and z_j.
/// Returns nullopt when fewer than two rows are available.
std::optional<ad::Var> infonce_pair(const ad::Var &z_i, const ad::Var &z_j, double temperature = 1.0);
std::optional<double> infonce_pair(const Matrix &z_i, const Matrix &z_j, double temperature = 1.0);

/// Negative mean contrastive estimate over unordered view pairs with enough
/// aligned samples. view_z[v] holds one row per entry of present_rows[v].
ad::Var cvmi_loss(ad::Tape &tape, const std::vector<ad::Var> &view_z, const std::vector<std::vector<int>> &present_rows,
                  double temperature, int *n_pairs = nullptr);
/// Convenience overload for property checks on plain matrices.
double cvmi_loss(const std::vector<Matrix> &view_z, const std::vector<std::vector<int>> &present_rows,
                 double temperature = 1.0, int *n_pairs = nullptr);

ad::Var supervised_ib_loss(const MultiViewModel &model, ad::Tape &tape, const Batch &batch, const ForwardPass &fp,
                           const LossOptions &options, LossBreakdown *breakdown = nullptr);
ad::Var unsupervised_elbo_loss(const MultiViewModel &model, ad::Tape &tape, const Batch &batch,
                               const ForwardPass &fp, const LossOptions &options,
                               LossBreakdown *breakdown = nullptr);
/// unsup + gamma * sup + alpha * cvmi on one shared forward pass.
LossTerms total_loss(const MultiViewModel &model, ad::Tape &tape, const Batch &batch, const ForwardPass &fp,
                     const LossOptions &options);

/// Per-row log-likelihood of observed x under decoder output (mean or logits).
ad::Var view_log_likelihood(const ad::Var &decoded, const Matrix &x, ViewLikelihood likelihood);
/// Per-row KL of N(mean, exp(log_variance)) to the standard normal.
ad::Var kl_rows(const ad::Var &mean, const ad::Var &log_variance);

} // namespace mvsemi

#endif // MVSEMI_LOSSES_HPP_
