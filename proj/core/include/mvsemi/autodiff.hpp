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

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records every operation applied to Vars. Calling backward() on a
// 1x1 Var walks the tape in reverse and accumulates gradients into the
// Parameters that were introduced with Tape::parameter(). Rows index
// samples throughout the library, so row gather/scatter are the primitives
// used to route present views in and out of a batch.

#ifndef MVSEMI_AUTODIFF_HPP_
#define MVSEMI_AUTODIFF_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mvsemi {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

namespace ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
  public:
    Var() = default;

    const Matrix &value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    /// Value of a 1x1 node.
    double scalar() const;

    Tape *tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

  private:
    friend class Tape;
    Var(Tape *tape, int id) : tape_(tape), id_(id) {}

    Tape *tape_ = nullptr;
    int id_ = -1;
};

class Tape {
  public:
    Tape() = default;
    Tape(const Tape &) = delete;
    Tape &operator=(const Tape &) = delete;

    Var constant(Matrix value);
    Var parameter(Parameter &p);

    /// Seeds d(root)/d(root) = 1 and propagates to all parameters.
    void backward(const Var &root);

    std::size_t size() const { return nodes_.size(); }

    // Used by op implementations.
    using BackwardFn = std::function<void(Tape &, int self, const Matrix &grad)>;
    Var record(Matrix value, std::vector<int> parents, BackwardFn fn);
    const Matrix &value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    void accumulate(int id, const Matrix &g);
    template <typename Expr>
    void accumulate_expr(int id, const Expr &g)
    {
        auto &n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad)
            return;
        if (n.grad.size() == 0)
            n.grad = g;
        else
            n.grad += g;
    }

  private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        Parameter *param = nullptr;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

// Arithmetic. Binary ops require equal shapes unless noted.
Var add(const Var &a, const Var &b);
Var sub(const Var &a, const Var &b);
Var mul(const Var &a, const Var &b);
/// a (n x m) + row (1 x m) broadcast over rows.
Var add_row(const Var &a, const Var &row);
/// a (n x m) * col (n x 1) broadcast over columns.
Var mul_col(const Var &a, const Var &col);
Var scale(const Var &a, double c);
Var add_scalar(const Var &a, double c);
Var matmul(const Var &a, const Var &b);
/// a * b^T
Var matmul_nt(const Var &a, const Var &b);
Var transpose(const Var &a);

// Elementwise nonlinearities.
Var exp(const Var &a);
Var log(const Var &a);
Var square(const Var &a);
Var reciprocal(const Var &a);
Var tanh(const Var &a);
Var sigmoid(const Var &a);
Var softplus(const Var &a);
Var silu(const Var &a);
/// bound * tanh(a / bound); smooth map into (-bound, bound).
Var soft_clamp(const Var &a, double bound);
/// Hard clamp; gradient is zero where the clamp is active.
Var clamp(const Var &a, double lo, double hi);

// Reductions.
Var sum(const Var &a);
Var mean(const Var &a);
/// n x m -> n x 1
Var row_sum(const Var &a);
/// n x m -> n x 1, numerically stable log(sum(exp(row))).
Var logsumexp_rows(const Var &a);
/// n x n -> n x 1
Var diagonal(const Var &a);
/// Picks a(r, cols[r]) for every row; n x m -> n x 1.
Var pick(const Var &a, std::span<const int> cols);

// Row routing.
Var gather_rows(const Var &a, std::span<const int> rows);
/// Places row i of a at output row rows[i]; other rows are zero.
Var scatter_rows(const Var &a, std::span<const int> rows, Eigen::Index out_rows);
/// Divides every row by its L2 norm. Throws on a zero-norm row.
Var normalize_rows(const Var &a);

// Convolution over row-per-sample images stored height-major, channel-last.
struct ConvGeometry {
    int height = 0;
    int width = 0;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    int padding = 1;

    int out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
    int out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
};
/// x: n x (H*W*Cin); weight: (k*k*Cin) x Cout; bias: 1 x Cout.
Var conv2d(const Var &x, const Var &weight, const Var &bias, const ConvGeometry &g);
/// n x (P*C) -> n x C, max over the P spatial positions per channel.
Var global_max_pool(const Var &x, int channels);

} // namespace ad
} // namespace mvsemi

#endif // MVSEMI_AUTODIFF_HPP_
