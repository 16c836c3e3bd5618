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
#include "mvsemi/rng.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace mvsemi {
namespace {

DiagGaussian scalar_gaussian(double mean, double variance)
{
    return DiagGaussian(Vector::Constant(1, mean), Vector::Constant(1, std::log(variance)));
}

DiagGaussian random_gaussian(Rng &rng, int dim)
{
    Vector m(dim), lv(dim);
    for (int k = 0; k < dim; ++k) {
        m(k) = 3.0 * (2.0 * uniform01(rng) - 1.0);
        lv(k) = std::log(0.1 + 4.9 * uniform01(rng));
    }
    return DiagGaussian(m, lv);
}

TEST(DiagGaussian, RejectsMalformedParameters)
{
    EXPECT_THROW(DiagGaussian(Vector::Zero(2), Vector::Zero(3)), std::invalid_argument);
    EXPECT_THROW(DiagGaussian(Vector(), Vector()), std::invalid_argument);
    EXPECT_THROW(DiagGaussian(Vector::Constant(1, std::nan("")), Vector::Zero(1)), std::invalid_argument);
    EXPECT_THROW(standard_prior(0), std::invalid_argument);
}

TEST(DiagGaussian, ClampsLogVariance)
{
    DiagGaussian q(Vector::Zero(2), Vector{{-50.0, 50.0}});
    EXPECT_EQ(q.log_variance()(0), -kLogVarianceBound);
    EXPECT_EQ(q.log_variance()(1), kLogVarianceBound);
}

TEST(DiagGaussian, StandardPrior)
{
    DiagGaussian p = standard_prior(2);
    EXPECT_EQ(p.mean(), Vector::Zero(2));
    EXPECT_EQ(p.log_variance(), Vector::Zero(2));
    EXPECT_EQ(kl_to_standard(standard_prior(5)), 0.0);
}

TEST(KlToStandard, ClosedFormExamples)
{
    EXPECT_NEAR(kl_to_standard(DiagGaussian(Vector::Ones(1), Vector::Constant(1, std::log(0.25)))),
                0.125 + std::log(2.0), 1e-12);
    EXPECT_NEAR(kl_to_standard(DiagGaussian(Vector::Ones(2), Vector::Zero(2))), 1.0, 1e-12);
}

TEST(KlToStandard, ExamplesAgreeWithMonteCarlo)
{
    const std::vector<DiagGaussian> qs{DiagGaussian(Vector::Ones(1), Vector::Constant(1, std::log(0.25))),
                                       DiagGaussian(Vector::Ones(2), Vector::Zero(2))};
    for (const auto &q : qs) {
        const auto est = oracle::kl_mc(q, standard_prior(static_cast<int>(q.dim())), 1'000'000, 7);
        EXPECT_LE(std::abs(kl_to_standard(q) - est.value), 4.0 * est.standard_error);
    }
}

TEST(KlToStandard, NonNegativeAndZeroOnlyAtPrior)
{
    Rng rng(3);
    for (int i = 0; i < 200; ++i)
        EXPECT_GT(kl_to_standard(random_gaussian(rng, 3)), 0.0);
}

TEST(ReparamSample, ZeroNoiseAndIdentity)
{
    Rng rng(1);
    DiagGaussian q = random_gaussian(rng, 4);
    EXPECT_EQ(reparam_sample(q, Vector::Zero(4)), q.mean());
    const Vector eps = standard_normal(rng, 4, 1);
    EXPECT_EQ(reparam_sample(standard_prior(4), eps), eps);
    EXPECT_THROW(reparam_sample(q, Vector::Zero(3)), std::invalid_argument);
}

TEST(ReparamSample, AffineInNoise)
{
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        DiagGaussian q = random_gaussian(rng, 3);
        const Vector eps = standard_normal(rng, 3, 1);
        const double a = 4.0 * uniform01(rng) - 2.0;
        const Vector lhs = reparam_sample(q, a * eps) - q.mean();
        const Vector rhs = a * (reparam_sample(q, eps) - q.mean());
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ReparamSample, SampleMeanWithinFourStandardErrors)
{
    Rng rng(5);
    DiagGaussian q(Vector{{0.5, -2.0}}, Vector{{std::log(2.0), std::log(0.3)}});
    const int n = 100'000;
    Vector total = Vector::Zero(2);
    for (int i = 0; i < n; ++i)
        total += reparam_sample(q, standard_normal(rng, 2, 1));
    const Vector mean = total / n;
    for (int k = 0; k < 2; ++k)
        EXPECT_LE(std::abs(mean(k) - q.mean()(k)), 4.0 * std::sqrt(q.variance()(k) / n));
}

TEST(PoeFuse, EmptyProductIsPrior)
{
    DiagGaussian p = poe_fuse({}, standard_prior(3));
    EXPECT_EQ(p.mean(), Vector::Zero(3));
    EXPECT_EQ(p.log_variance(), Vector::Zero(3));
}

TEST(PoeFuse, TwoExpertExample)
{
    const std::vector<DiagGaussian> experts{scalar_gaussian(1, 1), scalar_gaussian(3, 1)};
    DiagGaussian f = poe_fuse(experts, standard_prior(1));
    EXPECT_NEAR(f.mean()(0), 4.0 / 3.0, 1e-12);
    EXPECT_NEAR(f.variance()(0), 1.0 / 3.0, 1e-12);
    const auto grid = oracle::poe_grid(experts, standard_prior(1), -15, 15, 30001);
    EXPECT_NEAR(f.mean()(0), grid.mean, 1e-6);
    EXPECT_NEAR(f.variance()(0), grid.variance, 1e-6);
}

TEST(PoeFuse, RepeatedStandardExperts)
{
    for (int k = 1; k <= 6; ++k) {
        const std::vector<DiagGaussian> experts(static_cast<std::size_t>(k), standard_prior(1));
        DiagGaussian f = poe_fuse(experts, standard_prior(1));
        EXPECT_NEAR(f.mean()(0), 0.0, 1e-15);
        EXPECT_NEAR(f.variance()(0), 1.0 / (k + 1), 1e-12);
        const auto grid = oracle::poe_grid(experts, standard_prior(1), -10, 10, 20001);
        EXPECT_NEAR(f.variance()(0), grid.variance, 1e-6);
    }
}

TEST(PoeFuse, DimensionMismatchThrows)
{
    const std::vector<DiagGaussian> experts{standard_prior(2)};
    EXPECT_THROW(poe_fuse(experts, standard_prior(3)), std::invalid_argument);
}

TEST(PoeFuse, VarianceNoLargerThanAnyFactor)
{
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        std::vector<DiagGaussian> experts;
        const int k = uniform_index(rng, 5);
        for (int e = 0; e < k; ++e)
            experts.push_back(random_gaussian(rng, 4));
        const DiagGaussian prior = random_gaussian(rng, 4);
        const Vector fused = poe_fuse(experts, prior).variance();
        Vector bound = prior.variance();
        for (const auto &e : experts)
            bound = bound.cwiseMin(e.variance());
        EXPECT_TRUE(((fused.array() - bound.array()) <= 1e-15).all());
    }
}

TEST(PoeFuse, PermutationInvariantBitwise)
{
    Rng rng(12);
    for (int i = 0; i < 100; ++i) {
        std::vector<DiagGaussian> experts;
        for (int e = 0; e < 4; ++e)
            experts.push_back(random_gaussian(rng, 3));
        const DiagGaussian a = poe_fuse(experts, standard_prior(3));
        shuffle(experts, rng);
        const DiagGaussian b = poe_fuse(experts, standard_prior(3));
        EXPECT_EQ(a.mean(), b.mean());
        EXPECT_EQ(a.log_variance(), b.log_variance());
    }
}

TEST(PoeFuse, MatchesGridOracleOnRandomExperts)
{
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        std::vector<DiagGaussian> experts;
        const int k = uniform_index(rng, 5);
        for (int e = 0; e < k; ++e)
            experts.push_back(random_gaussian(rng, 1));
        const DiagGaussian f = poe_fuse(experts, standard_prior(1));
        const auto grid = oracle::poe_grid(experts, standard_prior(1), -25, 25, 50001);
        EXPECT_NEAR(f.mean()(0), grid.mean, 1e-6);
        EXPECT_NEAR(f.variance()(0), grid.variance, 1e-6);
    }
}

TEST(LogDensity, StandardNormalValues)
{
    const double c = -0.5 * std::log(2.0 * std::numbers::pi);
    EXPECT_NEAR(log_density(standard_prior(1), Vector::Zero(1)), c, 1e-15);
    EXPECT_NEAR(log_density(standard_prior(1), Vector::Ones(1)), c - 0.5, 1e-15);
    EXPECT_THROW(log_density(standard_prior(2), Vector::Zero(1)), std::invalid_argument);
}

TEST(LogDensity, IntegratesToOne)
{
    const DiagGaussian q = scalar_gaussian(0.7, 0.4);
    const int n = 20001;
    const double lo = -10, hi = 10, h = (hi - lo) / (n - 1);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        total += w * std::exp(log_density(q, Vector::Constant(1, lo + i * h)));
    }
    EXPECT_NEAR(total * h, 1.0, 1e-4);
}

} // namespace
} // namespace mvsemi
