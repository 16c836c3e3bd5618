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

#ifndef MVSEMI_RNG_HPP_
#define MVSEMI_RNG_HPP_

#include "mvsemi/autodiff.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace mvsemi {

using Rng = std::mt19937_64;

/// Mixes a master seed with a stream id (splitmix64 finalizer). Used to give
/// every sample, view, and parameter its own independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_a, std::uint64_t stream_b);

Rng make_rng(std::uint64_t master, std::uint64_t stream);

Matrix standard_normal(Rng &rng, Eigen::Index rows, Eigen::Index cols);
double standard_normal(Rng &rng);
double uniform01(Rng &rng);
/// Uniform integer in [0, n).
int uniform_index(Rng &rng, int n);

/// Fisher-Yates shuffle driven by uniform_index; portable unlike std::shuffle.
template <typename T>
void shuffle(std::vector<T> &items, Rng &rng)
{
    for (int i = static_cast<int>(items.size()) - 1; i > 0; --i)
        std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(uniform_index(rng, i + 1))]);
}

} // namespace mvsemi

#endif // MVSEMI_RNG_HPP_
