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

#ifndef MVSEMI_METRICS_HPP_
#define MVSEMI_METRICS_HPP_

#include "mvsemi/autodiff.hpp"

#include <span>
#include <vector>

namespace mvsemi {

/// Mann-Whitney AUROC for binary labels (1 = positive); tied scores count
/// one half. Throws if either class is empty.
double auroc_binary(std::span<const double> scores, std::span<const int> labels);

struct AurocResult {
    double value = 0.0;
    /// Classes left out of the macro average because they had no positive
    /// or no negative samples.
    std::vector<int> skipped_classes;
};

/// Binary tasks (two columns) use column 1 as the score; more classes use the
/// macro average of one-vs-rest AUROC.
AurocResult auroc(const Matrix &probabilities, std::span<const int> labels);

/// Argmax accuracy; ties go to the lowest class index.
double accuracy(const Matrix &probabilities, std::span<const int> labels);

int argmax_row(const Matrix &m, Eigen::Index row);

} // namespace mvsemi

#endif // MVSEMI_METRICS_HPP_
