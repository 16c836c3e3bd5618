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

#ifndef MVSEMI_GAUSSIAN_HPP_
#define MVSEMI_GAUSSIAN_HPP_

#include "mvsemi/autodiff.hpp"

#include <span>

namespace mvsemi {

/// Log-variances are clamped to [-kLogVarianceBound, kLogVarianceBound] so
/// precisions stay within exp(+-10) when experts are multiplied.
inline constexpr double kLogVarianceBound = 10.0;

/// Diagonal Gaussian parameterized by mean and log-variance.
class DiagGaussian {
  public:
    /// Throws std::invalid_argument on length mismatch, empty vectors, or
    /// non-finite entries. Log-variances are clamped.
    DiagGaussian(Vector mean, Vector log_variance);

    const Vector &mean() const { return mean_; }
    const Vector &log_variance() const { return log_variance_; }
    Vector variance() const { return log_variance_.array().exp(); }
    Vector precision() const { return (-log_variance_.array()).exp(); }
    Eigen::Index dim() const { return mean_.size(); }

  private:
    Vector mean_;
    Vector log_variance_;
};

DiagGaussian standard_prior(int dim);

/// KL(q || N(0, I)), summed over dimensions.
double kl_to_standard(const DiagGaussian &q);

/// mean + exp(log_variance / 2) * noise.
Vector reparam_sample(const DiagGaussian &q, const Vector &noise);

/// Product of experts including the prior. Precisions add; the mean is the
/// precision-weighted average. Per dimension, contributions are summed in a
/// sorted order so the result is bitwise independent of expert order.
DiagGaussian poe_fuse(std::span<const DiagGaussian> experts, const DiagGaussian &prior);

double log_density(const DiagGaussian &q, const Vector &x);

} // namespace mvsemi

#endif // MVSEMI_GAUSSIAN_HPP_
