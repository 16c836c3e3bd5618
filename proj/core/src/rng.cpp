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

#include "mvsemi/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mvsemi {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_a, std::uint64_t stream_b)
{
    return derive_seed(derive_seed(master, stream_a), stream_b);
}

Rng make_rng(std::uint64_t master, std::uint64_t stream)
{
    return Rng(derive_seed(master, stream));
}

// Box-Muller on two 53-bit uniforms. Unlike std::normal_distribution the
// output is identical across standard library implementations.
double standard_normal(Rng &rng)
{
    double u1 = uniform01(rng);
    while (u1 <= 0.0)
        u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix standard_normal(Rng &rng, Eigen::Index rows, Eigen::Index cols)
{
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = standard_normal(rng);
    return m;
}

double uniform01(Rng &rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_index(Rng &rng, int n)
{
    if (n <= 0)
        throw std::invalid_argument("uniform_index: n must be positive");
    return static_cast<int>(uniform01(rng) * n);
}

} // namespace mvsemi
