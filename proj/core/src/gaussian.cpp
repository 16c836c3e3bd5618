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

#include "mvsemi/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mvsemi {

DiagGaussian::DiagGaussian(Vector mean, Vector log_variance)
    : mean_(std::move(mean)), log_variance_(std::move(log_variance))
{
    if (mean_.size() < 1)
        throw std::invalid_argument("DiagGaussian: dimension must be at least 1");
    if (mean_.size() != log_variance_.size())
        throw std::invalid_argument("DiagGaussian: mean has length " + std::to_string(mean_.size()) +
                                    " but log_variance has length " + std::to_string(log_variance_.size()));
    if (!mean_.allFinite() || !log_variance_.allFinite())
        throw std::invalid_argument("DiagGaussian: non-finite entries");
    log_variance_ = log_variance_.cwiseMax(-kLogVarianceBound).cwiseMin(kLogVarianceBound);
}

DiagGaussian standard_prior(int dim)
{
    if (dim < 1)
        throw std::invalid_argument("standard_prior: dim must be at least 1");
    return DiagGaussian(Vector::Zero(dim), Vector::Zero(dim));
}

double kl_to_standard(const DiagGaussian &q)
{
    const auto &mu = q.mean().array();
    const auto &lv = q.log_variance().array();
    return 0.5 * (mu.square() + lv.exp() - 1.0 - lv).sum();
}

Vector reparam_sample(const DiagGaussian &q, const Vector &noise)
{
    if (noise.size() != q.dim())
        throw std::invalid_argument("reparam_sample: noise length " + std::to_string(noise.size()) +
                                    " does not match dimension " + std::to_string(q.dim()));
    return q.mean().array() + (0.5 * q.log_variance().array()).exp() * noise.array();
}

DiagGaussian poe_fuse(std::span<const DiagGaussian> experts, const DiagGaussian &prior)
{
    const Eigen::Index d = prior.dim();
    for (const auto &e : experts)
        if (e.dim() != d)
            throw std::invalid_argument("poe_fuse: expert dimension " + std::to_string(e.dim()) +
                                        " does not match prior dimension " + std::to_string(d));

    Vector mean(d), log_variance(d);
    std::vector<std::pair<double, double>> terms(experts.size());
    for (Eigen::Index j = 0; j < d; ++j) {
        for (std::size_t v = 0; v < experts.size(); ++v) {
            const double lambda = std::exp(-experts[v].log_variance()(j));
            terms[v] = {lambda, lambda * experts[v].mean()(j)};
        }
        std::sort(terms.begin(), terms.end());
        const double prior_lambda = std::exp(-prior.log_variance()(j));
        double lambda = prior_lambda;
        double weighted = prior_lambda * prior.mean()(j);
        for (const auto &[l, lm] : terms) {
            lambda += l;
            weighted += lm;
        }
        mean(j) = weighted / lambda;
        log_variance(j) = -std::log(lambda);
    }
    return DiagGaussian(std::move(mean), std::move(log_variance));
}

double log_density(const DiagGaussian &q, const Vector &x)
{
    if (x.size() != q.dim())
        throw std::invalid_argument("log_density: point length " + std::to_string(x.size()) +
                                    " does not match dimension " + std::to_string(q.dim()));
    const auto lv = q.log_variance().array();
    const auto diff = x.array() - q.mean().array();
    return -0.5 * (std::log(2.0 * std::numbers::pi) * static_cast<double>(q.dim()) + lv.sum() +
                   (diff.square() * (-lv).exp()).sum());
}

} // namespace mvsemi
