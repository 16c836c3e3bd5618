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

#include "mvsemi/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mvsemi {

double auroc_binary(std::span<const double> scores, std::span<const int> labels)
{
    if (scores.size() != labels.size())
        throw std::invalid_argument("auroc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Rank-sum over tie groups: each tie group shares its mean rank.
    double positive_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]])
            ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) {
                positive_rank_sum += mean_rank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("auroc: need at least one positive and one negative sample");
    const double np = static_cast<double>(n_pos);
    const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

AurocResult auroc(const Matrix &probabilities, std::span<const int> labels)
{
    if (static_cast<std::size_t>(probabilities.rows()) != labels.size())
        throw std::invalid_argument("auroc: score rows and labels differ in length");
    const int K = static_cast<int>(probabilities.cols());
    std::vector<double> scores(labels.size());
    std::vector<int> binary(labels.size());
    AurocResult result;
    if (K == 2) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores[i] = probabilities(static_cast<Eigen::Index>(i), 1);
            binary[i] = labels[i] == 1 ? 1 : 0;
        }
        result.value = auroc_binary(scores, binary);
        return result;
    }
    double total = 0.0;
    int used = 0;
    for (int c = 0; c < K; ++c) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            scores[i] = probabilities(static_cast<Eigen::Index>(i), c);
            binary[i] = labels[i] == c ? 1 : 0;
            pos += static_cast<std::size_t>(binary[i]);
        }
        if (pos == 0 || pos == labels.size()) {
            result.skipped_classes.push_back(c);
            continue;
        }
        total += auroc_binary(scores, binary);
        ++used;
    }
    if (used == 0)
        throw std::invalid_argument("auroc: no class has both positive and negative samples");
    result.value = total / used;
    return result;
}

int argmax_row(const Matrix &m, Eigen::Index row)
{
    int best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
        if (m(row, c) > m(row, best))
            best = static_cast<int>(c);
    return best;
}

double accuracy(const Matrix &probabilities, std::span<const int> labels)
{
    if (labels.empty())
        throw std::invalid_argument("accuracy: empty input");
    if (static_cast<std::size_t>(probabilities.rows()) != labels.size())
        throw std::invalid_argument("accuracy: prediction rows and labels differ in length");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        correct += argmax_row(probabilities, static_cast<Eigen::Index>(i)) == labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

} // namespace mvsemi
