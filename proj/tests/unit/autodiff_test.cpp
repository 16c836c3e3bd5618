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

#include "mvsemi/autodiff.hpp"
#include "mvsemi/rng.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <functional>

namespace mvsemi {
namespace {

using testing::numeric_gradient;
using testing::relative_error;

// Builds a scalar from one parameter through `body` and compares the tape
// gradient with central differences.
void expect_gradient(Parameter &p, const std::function<ad::Var(ad::Tape &, const ad::Var &)> &body,
                     double tol = 1e-6)
{
    auto eval = [&] {
        ad::Tape t;
        return body(t, t.parameter(p)).scalar();
    };
    p.zero_grad();
    ad::Tape t;
    ad::Var out = body(t, t.parameter(p));
    t.backward(out);
    const Matrix numeric = numeric_gradient(p, eval, 1e-5);
    EXPECT_LT(relative_error(p.grad, numeric), tol) << p.name;
}

Parameter random_param(const std::string &name, int rows, int cols, std::uint64_t seed, double offset = 0.0)
{
    Rng rng(seed);
    Parameter p{name, standard_normal(rng, rows, cols).array() + offset, {}};
    return p;
}

// Weighted sum so every output entry matters in the check.
ad::Var weigh(ad::Tape &t, const ad::Var &x, std::uint64_t seed = 99)
{
    Rng rng(seed);
    return ad::sum(ad::mul(x, t.constant(standard_normal(rng, x.rows(), x.cols()))));
}

TEST(Autodiff, ElementwiseOpsMatchFiniteDifferences)
{
    Parameter p = random_param("x", 3, 4, 1);
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::exp(x)); });
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::square(x)); });
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::tanh(x)); });
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::sigmoid(x)); });
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::softplus(x)); });
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::silu(x)); });
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::soft_clamp(ad::scale(x, 8.0), 10.0)); });
    expect_gradient(p, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::add_scalar(ad::scale(x, 2.5), 1.0)); });
    Parameter q = random_param("pos", 3, 4, 2, 4.0);
    expect_gradient(q, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::log(x)); });
    expect_gradient(q, [](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::reciprocal(x)); });
}

TEST(Autodiff, BinaryAndBroadcastOps)
{
    Parameter p = random_param("x", 3, 4, 3);
    Rng rng(4);
    const Matrix other = standard_normal(rng, 3, 4);
    const Matrix row = standard_normal(rng, 1, 4);
    const Matrix col = standard_normal(rng, 3, 1);
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::mul(x, t.constant(other))); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::sub(t.constant(other), x)); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::add(x, ad::square(x))); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::add_row(x, t.constant(row))); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::mul_col(x, t.constant(col))); });
    Parameter r = random_param("row", 1, 4, 5);
    expect_gradient(r, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::add_row(t.constant(other), x)); });
    Parameter c = random_param("col", 3, 1, 6);
    expect_gradient(c, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::mul_col(t.constant(other), x)); });
}

TEST(Autodiff, MatrixProductsAndReductions)
{
    Parameter p = random_param("x", 3, 4, 7);
    Rng rng(8);
    const Matrix b = standard_normal(rng, 4, 5);
    const Matrix c = standard_normal(rng, 6, 4);
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::matmul(x, t.constant(b))); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::matmul_nt(x, t.constant(c))); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::matmul_nt(x, x)); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::transpose(x)); });
    expect_gradient(p, [&](ad::Tape &, const ad::Var &x) { return ad::mean(ad::square(x)); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::row_sum(x)); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::logsumexp_rows(x)); });
    const std::vector<int> cols{0, 3, 2};
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::pick(x, cols)); });
    Parameter s = random_param("sq", 4, 4, 9);
    expect_gradient(s, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::diagonal(x)); });
}

TEST(Autodiff, RowRoutingAndNormalization)
{
    Parameter p = random_param("x", 4, 3, 10);
    const std::vector<int> rows{3, 0, 3};
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::gather_rows(x, rows)); });
    const std::vector<int> dest{5, 1, 2, 0};
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::scatter_rows(x, dest, 6)); });
    expect_gradient(p, [&](ad::Tape &t, const ad::Var &x) { return weigh(t, ad::normalize_rows(x)); });
}

TEST(Autodiff, ScatterLeavesUntouchedRowsZero)
{
    ad::Tape t;
    ad::Var x = t.constant(Matrix::Ones(2, 3));
    const std::vector<int> dest{1, 3};
    const Matrix out = ad::scatter_rows(x, dest, 4).value();
    EXPECT_EQ(out.row(0).norm(), 0.0);
    EXPECT_EQ(out.row(2).norm(), 0.0);
    EXPECT_EQ(out.row(1).sum(), 3.0);
}

TEST(Autodiff, ConvolutionAndPooling)
{
    ad::ConvGeometry g{5, 5, 2, 3, 3, 2, 1};
    Parameter x = random_param("x", 2, 5 * 5 * 2, 11);
    Parameter w = random_param("w", 3 * 3 * 2, 3, 12);
    Parameter b = random_param("b", 1, 3, 13);
    auto body = [&](ad::Tape &t, const ad::Var &xv, const ad::Var &wv, const ad::Var &bv) {
        return weigh(t, ad::global_max_pool(ad::conv2d(xv, wv, bv, g), 3));
    };
    expect_gradient(x, [&](ad::Tape &t, const ad::Var &v) { return body(t, v, t.constant(w.value), t.constant(b.value)); });
    expect_gradient(w, [&](ad::Tape &t, const ad::Var &v) { return body(t, t.constant(x.value), v, t.constant(b.value)); });
    expect_gradient(b, [&](ad::Tape &t, const ad::Var &v) { return body(t, t.constant(x.value), t.constant(w.value), v); });
}

TEST(Autodiff, ConvolutionMatchesDirectLoop)
{
    ad::ConvGeometry g{4, 4, 1, 1, 3, 1, 1};
    Matrix img(1, 16);
    for (int i = 0; i < 16; ++i)
        img(0, i) = i;
    Matrix w = Matrix::Zero(9, 1);
    w(4, 0) = 1.0; // centre tap: identity
    w(5, 0) = 2.0; // right neighbour
    ad::Tape t;
    const Matrix out = ad::conv2d(t.constant(img), t.constant(w), t.constant(Matrix::Zero(1, 1)), g).value();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const double right = c + 1 < 4 ? img(0, r * 4 + c + 1) : 0.0;
            EXPECT_DOUBLE_EQ(out(0, r * 4 + c), img(0, r * 4 + c) + 2.0 * right);
        }
}

TEST(Autodiff, ClampZeroesGradientOutsideRange)
{
    Parameter p{"x", Matrix{{-20.0, 0.5, 20.0}}, {}};
    p.zero_grad();
    ad::Tape t;
    t.backward(ad::sum(ad::clamp(t.parameter(p), -10.0, 10.0)));
    EXPECT_EQ(p.grad(0, 0), 0.0);
    EXPECT_EQ(p.grad(0, 1), 1.0);
    EXPECT_EQ(p.grad(0, 2), 0.0);
}

TEST(Autodiff, RejectsShapeMismatchAndZeroRows)
{
    ad::Tape t;
    EXPECT_THROW(ad::add(t.constant(Matrix::Zero(2, 2)), t.constant(Matrix::Zero(2, 3))), std::invalid_argument);
    EXPECT_THROW(ad::normalize_rows(t.constant(Matrix::Zero(2, 2))), std::invalid_argument);
    EXPECT_THROW(t.backward(t.constant(Matrix::Zero(2, 1))), std::invalid_argument);
}

TEST(Autodiff, GradientsAccumulateAcrossUses)
{
    Parameter p{"x", Matrix{{3.0}}, {}};
    p.zero_grad();
    ad::Tape t;
    ad::Var x = t.parameter(p);
    t.backward(ad::add(ad::mul(x, x), x));
    EXPECT_DOUBLE_EQ(p.grad(0, 0), 7.0);
}

} // namespace
} // namespace mvsemi
