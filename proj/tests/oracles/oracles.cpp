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

#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mvsemi::oracle {

namespace {

struct Factor {
    double mean;
    double variance;
};

Factor factor_of(const DiagGaussian &g)
{
    if (g.dim() != 1)
        throw std::invalid_argument("poe_grid: one-dimensional factors only");
    return {g.mean()(0), std::exp(g.log_variance()(0))};
}

double log_normal_pdf(double x, const Factor &f)
{
    const double d = x - f.mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * f.variance) - 0.5 * d * d / f.variance;
}

double trapezoid(const std::vector<double> &y, double h)
{
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        s += y[i];
    return s * h;
}

} // namespace

Moments poe_grid(const std::vector<DiagGaussian> &experts, const DiagGaussian &prior, double lo, double hi,
                 int points)
{
    if (points < 3 || !(hi > lo))
        throw std::invalid_argument("poe_grid: invalid grid");
    std::vector<Factor> factors{factor_of(prior)};
    for (const auto &e : experts)
        factors.push_back(factor_of(e));
    const double h = (hi - lo) / (points - 1);
    std::vector<double> x(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        x[static_cast<std::size_t>(i)] = lo + h * i;

    std::vector<double> y(x.size());
    for (const auto &f : factors) {
        const double sd = std::sqrt(f.variance);
        if (f.mean - 8.0 * sd < lo || f.mean + 8.0 * sd > hi)
            throw std::invalid_argument("poe_grid: grid does not cover 8 standard deviations");
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = std::exp(log_normal_pdf(x[i], f));
        if (std::abs(trapezoid(y, h) - 1.0) > 1e-8)
            throw std::invalid_argument("poe_grid: grid too coarse");
    }

    std::vector<double> logp(x.size(), 0.0);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (const auto &f : factors)
            logp[i] += log_normal_pdf(x[i], f);
        peak = std::max(peak, logp[i]);
    }
    std::vector<double> w(x.size()), wx(x.size()), wxx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        w[i] = std::exp(logp[i] - peak);
        wx[i] = w[i] * x[i];
    }
    const double z = trapezoid(w, h);
    const double mean = trapezoid(wx, h) / z;
    for (std::size_t i = 0; i < x.size(); ++i)
        wxx[i] = w[i] * (x[i] - mean) * (x[i] - mean);
    return {mean, trapezoid(wxx, h) / z};
}

Estimate kl_mc(const DiagGaussian &q, const DiagGaussian &p, long samples, std::uint64_t seed)
{
    if (q.dim() != p.dim())
        throw std::invalid_argument("kl_mc: dimension mismatch");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto D = q.dim();
    double sum = 0.0, sum_sq = 0.0;
    for (long n = 0; n < samples; ++n) {
        double lq = 0.0, lp = 0.0;
        for (Eigen::Index d = 0; d < D; ++d) {
            const double vq = std::exp(q.log_variance()(d));
            const double vp = std::exp(p.log_variance()(d));
            const double z = q.mean()(d) + std::sqrt(vq) * normal(gen);
            lq += -0.5 * std::log(2.0 * std::numbers::pi * vq) - 0.5 * (z - q.mean()(d)) * (z - q.mean()(d)) / vq;
            lp += -0.5 * std::log(2.0 * std::numbers::pi * vp) - 0.5 * (z - p.mean()(d)) * (z - p.mean()(d)) / vp;
        }
        const double r = lq - lp;
        sum += r;
        sum_sq += r * r;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

double auroc_pairs(const std::vector<double> &scores, const std::vector<int> &labels)
{
    double good = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1)
            continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] == 1)
                continue;
            ++pairs;
            if (scores[i] > scores[j])
                good += 1.0;
            else if (scores[i] == scores[j])
                good += 0.5;
        }
    }
    if (pairs == 0)
        throw std::invalid_argument("auroc_pairs: need both classes");
    return good / static_cast<double>(pairs);
}

int glyph_classifier(const std::vector<float> &image, int side, const std::vector<Glyph> &glyphs)
{
    constexpr int g = kGlyphSide;
    constexpr int n = g * g;
    int best_class = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < glyphs.size(); ++c) {
        double tmean = 0.0;
        for (int k = 0; k < n; ++k)
            tmean += glyphs[c][static_cast<std::size_t>(k)];
        tmean /= n;
        double tnorm = 0.0;
        for (int k = 0; k < n; ++k)
            tnorm += (glyphs[c][static_cast<std::size_t>(k)] - tmean) * (glyphs[c][static_cast<std::size_t>(k)] - tmean);
        tnorm = std::sqrt(tnorm);
        for (int r0 = 0; r0 + g <= side; ++r0) {
            for (int c0 = 0; c0 + g <= side; ++c0) {
                double pmean = 0.0;
                for (int r = 0; r < g; ++r)
                    for (int cc = 0; cc < g; ++cc)
                        pmean += image[static_cast<std::size_t>((r0 + r) * side + c0 + cc)];
                pmean /= n;
                double dot = 0.0, pnorm = 0.0;
                for (int r = 0; r < g; ++r)
                    for (int cc = 0; cc < g; ++cc) {
                        const double pv = image[static_cast<std::size_t>((r0 + r) * side + c0 + cc)] - pmean;
                        const double tv = glyphs[c][static_cast<std::size_t>(r * g + cc)] - tmean;
                        dot += pv * tv;
                        pnorm += pv * pv;
                    }
                const double ncc = dot / (std::sqrt(pnorm) * tnorm + 1e-12);
                if (ncc > best) {
                    best = ncc;
                    best_class = static_cast<int>(c);
                }
            }
        }
    }
    return best_class;
}

} // namespace mvsemi::oracle
