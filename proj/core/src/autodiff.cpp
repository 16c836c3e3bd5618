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

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace mvsemi::ad {

namespace {

void require_same_tape(const Var &a, const Var &b)
{
    if (a.tape() != b.tape() || a.tape() == nullptr)
        throw std::invalid_argument("autodiff: operands live on different tapes");
}

void require_same_shape(const Var &a, const Var &b, const char *op)
{
    require_same_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string("autodiff: shape mismatch in ") + op + " (" +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

template <typename Forward, typename Derivative>
Var unary(const Var &a, Forward f, Derivative df)
{
    Tape &t = *a.tape();
    const int ia = a.id();
    Matrix out = a.value().unaryExpr(f);
    return t.record(std::move(out), {ia}, [ia, df](Tape &tape, int self, const Matrix &g) {
        const Matrix &x = tape.value(ia);
        const Matrix &y = tape.value(self);
        Matrix d(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            d.data()[i] = g.data()[i] * df(x.data()[i], y.data()[i]);
        tape.accumulate(ia, d);
    });
}

double stable_softplus(double x)
{
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double stable_sigmoid(double x)
{
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

const Matrix &Var::value() const
{
    return tape_->value(id_);
}

double Var::scalar() const
{
    const Matrix &v = value();
    if (v.size() != 1)
        throw std::invalid_argument("autodiff: scalar() on a non 1x1 node");
    return v(0, 0);
}

Var Tape::constant(Matrix value)
{
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Parameter &p)
{
    Node n;
    n.value = p.value;
    n.needs_grad = true;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::vector<int> parents, BackwardFn fn)
{
    Node n;
    n.value = std::move(value);
    for (int p : parents)
        n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(p)].needs_grad;
    if (n.needs_grad)
        n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Matrix &g)
{
    accumulate_expr(id, g);
}

void Tape::backward(const Var &root)
{
    if (root.tape() != this)
        throw std::invalid_argument("autodiff: backward on a foreign node");
    if (root.value().size() != 1)
        throw std::invalid_argument("autodiff: backward requires a 1x1 root");
    auto &r = nodes_[static_cast<std::size_t>(root.id())];
    if (!r.needs_grad)
        return;
    r.grad = Matrix::Ones(1, 1);
    for (int i = root.id(); i >= 0; --i) {
        auto &n = nodes_[static_cast<std::size_t>(i)];
        if (!n.needs_grad || n.grad.size() == 0)
            continue;
        if (n.param != nullptr) {
            if (n.param->grad.size() == 0)
                n.param->zero_grad();
            n.param->grad += n.grad;
        } else if (n.backward) {
            n.backward(*this, i, n.grad);
        }
        n.grad.resize(0, 0);
    }
}

Var add(const Var &a, const Var &b)
{
    require_same_shape(a, b, "add");
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Var sub(const Var &a, const Var &b)
{
    require_same_shape(a, b, "sub");
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
        t.accumulate(ia, g);
        t.accumulate_expr(ib, -g);
    });
}

Var mul(const Var &a, const Var &b)
{
    require_same_shape(a, b, "mul");
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
        if (t.needs_grad(ia))
            t.accumulate_expr(ia, g.cwiseProduct(t.value(ib)));
        if (t.needs_grad(ib))
            t.accumulate_expr(ib, g.cwiseProduct(t.value(ia)));
    });
}

Var add_row(const Var &a, const Var &row)
{
    require_same_tape(a, row);
    if (row.rows() != 1 || row.cols() != a.cols())
        throw std::invalid_argument("autodiff: add_row expects a 1 x cols row");
    const int ia = a.id(), ir = row.id();
    Matrix out = a.value().rowwise() + row.value().row(0);
    return a.tape()->record(std::move(out), {ia, ir}, [ia, ir](Tape &t, int, const Matrix &g) {
        t.accumulate(ia, g);
        if (t.needs_grad(ir))
            t.accumulate_expr(ir, g.colwise().sum());
    });
}

Var mul_col(const Var &a, const Var &col)
{
    require_same_tape(a, col);
    if (col.cols() != 1 || col.rows() != a.rows())
        throw std::invalid_argument("autodiff: mul_col expects a rows x 1 column");
    const int ia = a.id(), ic = col.id();
    Matrix out = a.value().array().colwise() * col.value().col(0).array();
    return a.tape()->record(std::move(out), {ia, ic}, [ia, ic](Tape &t, int, const Matrix &g) {
        const Matrix &av = t.value(ia);
        const Matrix &cv = t.value(ic);
        if (t.needs_grad(ia)) {
            Matrix d = g.array().colwise() * cv.col(0).array();
            t.accumulate(ia, d);
        }
        if (t.needs_grad(ic))
            t.accumulate_expr(ic, g.cwiseProduct(av).rowwise().sum());
    });
}

Var scale(const Var &a, double c)
{
    const int ia = a.id();
    return a.tape()->record(a.value() * c, {ia}, [ia, c](Tape &t, int, const Matrix &g) { t.accumulate_expr(ia, g * c); });
}

Var add_scalar(const Var &a, double c)
{
    const int ia = a.id();
    Matrix out = a.value().array() + c;
    return a.tape()->record(std::move(out), {ia}, [ia](Tape &t, int, const Matrix &g) { t.accumulate(ia, g); });
}

Var matmul(const Var &a, const Var &b)
{
    require_same_tape(a, b);
    if (a.cols() != b.rows())
        throw std::invalid_argument("autodiff: matmul inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
    const int ia = a.id(), ib = b.id();
    Matrix out = a.value() * b.value();
    return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
        if (t.needs_grad(ia))
            t.accumulate_expr(ia, g * t.value(ib).transpose());
        if (t.needs_grad(ib))
            t.accumulate_expr(ib, t.value(ia).transpose() * g);
    });
}

Var matmul_nt(const Var &a, const Var &b)
{
    require_same_tape(a, b);
    if (a.cols() != b.cols())
        throw std::invalid_argument("autodiff: matmul_nt column counts differ");
    const int ia = a.id(), ib = b.id();
    Matrix out = a.value() * b.value().transpose();
    return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape &t, int, const Matrix &g) {
        if (t.needs_grad(ia))
            t.accumulate_expr(ia, g * t.value(ib));
        if (t.needs_grad(ib))
            t.accumulate_expr(ib, g.transpose() * t.value(ia));
    });
}

Var transpose(const Var &a)
{
    const int ia = a.id();
    Matrix out = a.value().transpose();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape &t, int, const Matrix &g) {
        t.accumulate_expr(ia, g.transpose());
    });
}

Var exp(const Var &a)
{
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var &a)
{
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(const Var &a)
{
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var reciprocal(const Var &a)
{
    return unary(a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Var tanh(const Var &a)
{
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var &a)
{
    return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var &a)
{
    return unary(a, stable_softplus, [](double x, double) { return stable_sigmoid(x); });
}

Var silu(const Var &a)
{
    return unary(
        a, [](double x) { return x * stable_sigmoid(x); },
        [](double x, double) {
            const double s = stable_sigmoid(x);
            return s * (1.0 + x * (1.0 - s));
        });
}

Var soft_clamp(const Var &a, double bound)
{
    return unary(
        a, [bound](double x) { return bound * std::tanh(x / bound); },
        [bound](double, double y) {
            const double r = y / bound;
            return 1.0 - r * r;
        });
}

Var clamp(const Var &a, double lo, double hi)
{
    return unary(
        a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
        [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var sum(const Var &a)
{
    const int ia = a.id();
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape &t, int, const Matrix &g) {
        const Matrix &x = t.value(ia);
        t.accumulate_expr(ia, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
    });
}

Var mean(const Var &a)
{
    if (a.value().size() == 0)
        throw std::invalid_argument("autodiff: mean of an empty node");
    return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var row_sum(const Var &a)
{
    const int ia = a.id();
    Matrix out = a.value().rowwise().sum();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape &t, int, const Matrix &g) {
        const Matrix &x = t.value(ia);
        Matrix d = g.col(0).replicate(1, x.cols());
        t.accumulate(ia, d);
    });
}

Var logsumexp_rows(const Var &a)
{
    const int ia = a.id();
    const Matrix &x = a.value();
    Matrix out(x.rows(), 1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        out(r, 0) = m + std::log((x.row(r).array() - m).exp().sum());
    }
    return a.tape()->record(std::move(out), {ia}, [ia](Tape &t, int self, const Matrix &g) {
        const Matrix &xv = t.value(ia);
        const Matrix &lse = t.value(self);
        Matrix d(xv.rows(), xv.cols());
        for (Eigen::Index r = 0; r < xv.rows(); ++r)
            d.row(r) = (xv.row(r).array() - lse(r, 0)).exp() * g(r, 0);
        t.accumulate(ia, d);
    });
}

Var diagonal(const Var &a)
{
    if (a.rows() != a.cols())
        throw std::invalid_argument("autodiff: diagonal of a non-square node");
    const int ia = a.id();
    Matrix out = a.value().diagonal();
    return a.tape()->record(std::move(out), {ia}, [ia](Tape &t, int, const Matrix &g) {
        const auto n = t.value(ia).rows();
        Matrix d = Matrix::Zero(n, n);
        d.diagonal() = g.col(0);
        t.accumulate(ia, d);
    });
}

Var pick(const Var &a, std::span<const int> cols)
{
    if (static_cast<Eigen::Index>(cols.size()) != a.rows())
        throw std::invalid_argument("autodiff: pick needs one column index per row");
    const Matrix &x = a.value();
    std::vector<int> idx(cols.begin(), cols.end());
    Matrix out(x.rows(), 1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const int c = idx[static_cast<std::size_t>(r)];
        if (c < 0 || c >= x.cols())
            throw std::invalid_argument("autodiff: pick column out of range");
        out(r, 0) = x(r, c);
    }
    const int ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape &t, int, const Matrix &g) {
        const Matrix &xv = t.value(ia);
        Matrix d = Matrix::Zero(xv.rows(), xv.cols());
        for (Eigen::Index r = 0; r < xv.rows(); ++r)
            d(r, idx[static_cast<std::size_t>(r)]) = g(r, 0);
        t.accumulate(ia, d);
    });
}

Var gather_rows(const Var &a, std::span<const int> rows)
{
    const Matrix &x = a.value();
    std::vector<int> idx(rows.begin(), rows.end());
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= x.rows())
            throw std::invalid_argument("autodiff: gather row out of range");
        out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    }
    const int ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape &t, int, const Matrix &g) {
        const Matrix &xv = t.value(ia);
        Matrix d = Matrix::Zero(xv.rows(), xv.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
        t.accumulate(ia, d);
    });
}

Var scatter_rows(const Var &a, std::span<const int> rows, Eigen::Index out_rows)
{
    const Matrix &x = a.value();
    if (static_cast<Eigen::Index>(rows.size()) != x.rows())
        throw std::invalid_argument("autodiff: scatter needs one target row per input row");
    std::vector<int> idx(rows.begin(), rows.end());
    Matrix out = Matrix::Zero(out_rows, x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= out_rows)
            throw std::invalid_argument("autodiff: scatter row out of range");
        out.row(idx[i]) += x.row(static_cast<Eigen::Index>(i));
    }
    const int ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape &t, int, const Matrix &g) {
        Matrix d(static_cast<Eigen::Index>(idx.size()), g.cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            d.row(static_cast<Eigen::Index>(i)) = g.row(idx[i]);
        t.accumulate(ia, d);
    });
}

Var normalize_rows(const Var &a)
{
    const Matrix &x = a.value();
    Matrix norms = x.rowwise().norm();
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        if (!(norms(r, 0) > 0.0))
            throw std::invalid_argument("normalize_rows: zero-norm row " + std::to_string(r));
    Matrix out = x.array().colwise() / norms.col(0).array();
    const int ia = a.id();
    return a.tape()->record(std::move(out), {ia}, [ia, norms = std::move(norms)](Tape &t, int self, const Matrix &g) {
        const Matrix &y = t.value(self);
        Matrix proj = g.cwiseProduct(y).rowwise().sum();
        Matrix d = (g - (y.array().colwise() * proj.col(0).array()).matrix()).array().colwise() / norms.col(0).array();
        t.accumulate(ia, d);
    });
}

Var conv2d(const Var &x, const Var &weight, const Var &bias, const ConvGeometry &geo)
{
    require_same_tape(x, weight);
    require_same_tape(x, bias);
    const int k = geo.kernel;
    const int cin = geo.in_channels;
    const int cout = geo.out_channels;
    const int ho = geo.out_height();
    const int wo = geo.out_width();
    const Eigen::Index patch = static_cast<Eigen::Index>(k) * k * cin;
    if (x.cols() != static_cast<Eigen::Index>(geo.height) * geo.width * cin)
        throw std::invalid_argument("conv2d: input width does not match geometry");
    if (weight.rows() != patch || weight.cols() != cout)
        throw std::invalid_argument("conv2d: weight shape does not match geometry");
    if (bias.rows() != 1 || bias.cols() != cout)
        throw std::invalid_argument("conv2d: bias shape does not match geometry");

    const Eigen::Index n = x.rows();
    const Eigen::Index positions = static_cast<Eigen::Index>(ho) * wo;
    auto cols = std::make_shared<Matrix>(Matrix::Zero(n * positions, patch));
    const Matrix &xv = x.value();
    for (Eigen::Index s = 0; s < n; ++s) {
        const double *img = xv.row(s).data();
        for (int oy = 0; oy < ho; ++oy) {
            for (int ox = 0; ox < wo; ++ox) {
                double *dst = cols->row(s * positions + oy * wo + ox).data();
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * geo.stride - geo.padding + ky;
                    if (iy < 0 || iy >= geo.height)
                        continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ox * geo.stride - geo.padding + kx;
                        if (ix < 0 || ix >= geo.width)
                            continue;
                        const double *src = img + (static_cast<std::ptrdiff_t>(iy) * geo.width + ix) * cin;
                        std::copy(src, src + cin, dst + (ky * k + kx) * cin);
                    }
                }
            }
        }
    }
    Matrix prod = (*cols) * weight.value();
    prod.rowwise() += bias.value().row(0);
    Matrix out = Eigen::Map<Matrix>(prod.data(), n, positions * cout);

    const int ix_id = x.id(), iw = weight.id(), ib = bias.id();
    return x.tape()->record(
        std::move(out), {ix_id, iw, ib}, [ix_id, iw, ib, cols, geo, n, positions](Tape &t, int, const Matrix &g) {
            const int kk = geo.kernel;
            const int ci = geo.in_channels;
            const int wout = geo.out_width();
            Eigen::Map<const Matrix> gout(g.data(), n * positions, geo.out_channels);
            if (t.needs_grad(iw))
                t.accumulate_expr(iw, cols->transpose() * gout);
            if (t.needs_grad(ib))
                t.accumulate_expr(ib, gout.colwise().sum());
            if (!t.needs_grad(ix_id))
                return;
            Matrix dcols = gout * t.value(iw).transpose();
            Matrix dx = Matrix::Zero(n, static_cast<Eigen::Index>(geo.height) * geo.width * ci);
            for (Eigen::Index s = 0; s < n; ++s) {
                double *img = dx.row(s).data();
                for (Eigen::Index p = 0; p < positions; ++p) {
                    const int oy = static_cast<int>(p / wout);
                    const int ox = static_cast<int>(p % wout);
                    const double *src = dcols.row(s * positions + p).data();
                    for (int ky = 0; ky < kk; ++ky) {
                        const int iy = oy * geo.stride - geo.padding + ky;
                        if (iy < 0 || iy >= geo.height)
                            continue;
                        for (int kx = 0; kx < kk; ++kx) {
                            const int ix = ox * geo.stride - geo.padding + kx;
                            if (ix < 0 || ix >= geo.width)
                                continue;
                            double *dst = img + (static_cast<std::ptrdiff_t>(iy) * geo.width + ix) * ci;
                            const double *sp = src + (ky * kk + kx) * ci;
                            for (int c = 0; c < ci; ++c)
                                dst[c] += sp[c];
                        }
                    }
                }
            }
            t.accumulate(ix_id, dx);
        });
}

Var global_max_pool(const Var &x, int channels)
{
    const Matrix &xv = x.value();
    if (channels <= 0 || xv.cols() % channels != 0)
        throw std::invalid_argument("global_max_pool: width is not a multiple of channels");
    const Eigen::Index positions = xv.cols() / channels;
    Matrix out(xv.rows(), channels);
    std::vector<Eigen::Index> arg(static_cast<std::size_t>(xv.rows() * channels));
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        for (int c = 0; c < channels; ++c) {
            Eigen::Index best = c;
            for (Eigen::Index p = 1; p < positions; ++p) {
                const Eigen::Index j = p * channels + c;
                if (xv(r, j) > xv(r, best))
                    best = j;
            }
            out(r, c) = xv(r, best);
            arg[static_cast<std::size_t>(r * channels + c)] = best;
        }
    }
    const int ia = x.id();
    return x.tape()->record(std::move(out), {ia}, [ia, channels, arg = std::move(arg)](Tape &t, int, const Matrix &g) {
        const Matrix &xin = t.value(ia);
        Matrix d = Matrix::Zero(xin.rows(), xin.cols());
        for (Eigen::Index r = 0; r < xin.rows(); ++r)
            for (int c = 0; c < channels; ++c)
                d(r, arg[static_cast<std::size_t>(r * channels + c)]) += g(r, c);
        t.accumulate(ia, d);
    });
}

} // namespace mvsemi::ad
