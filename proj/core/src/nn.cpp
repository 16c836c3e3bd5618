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

#include "mvsemi/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mvsemi {

namespace {

static_assert(std::endian::native == std::endian::little, "binary blobs assume a little-endian host");

template <typename T>
void write_pod(std::ostream &out, const T &v)
{
    out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream &in)
{
    T v{};
    in.read(reinterpret_cast<char *>(&v), sizeof(T));
    if (!in)
        throw std::runtime_error("parameter blob truncated");
    return v;
}

Matrix lecun_uniform(Rng &rng, int fan_in, Eigen::Index rows, Eigen::Index cols)
{
    const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = (2.0 * uniform01(rng) - 1.0) * limit;
    return m;
}

} // namespace

Parameter &ParameterSet::add(std::string name, Matrix init)
{
    if (find(name) != nullptr)
        throw std::invalid_argument("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->value = std::move(init);
    p->zero_grad();
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter *ParameterSet::find(const std::string &name)
{
    for (auto &p : params_)
        if (p->name == name)
            return p.get();
    return nullptr;
}

const Parameter *ParameterSet::find(const std::string &name) const
{
    for (const auto &p : params_)
        if (p->name == name)
            return p.get();
    return nullptr;
}

std::vector<Parameter *> ParameterSet::all()
{
    std::vector<Parameter *> out;
    out.reserve(params_.size());
    for (auto &p : params_)
        out.push_back(p.get());
    return out;
}

std::vector<const Parameter *> ParameterSet::all() const
{
    std::vector<const Parameter *> out;
    out.reserve(params_.size());
    for (const auto &p : params_)
        out.push_back(p.get());
    return out;
}

std::size_t ParameterSet::scalar_count() const
{
    std::size_t n = 0;
    for (const auto &p : params_)
        n += static_cast<std::size_t>(p->value.size());
    return n;
}

void ParameterSet::zero_grad()
{
    for (auto &p : params_)
        p->zero_grad();
}

bool ParameterSet::all_finite() const
{
    for (const auto &p : params_)
        if (!p->value.allFinite())
            return false;
    return true;
}

void ParameterSet::save(std::ostream &out) const
{
    write_pod<std::uint64_t>(out, params_.size());
    for (const auto &p : params_) {
        write_pod<std::uint64_t>(out, p->name.size());
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_pod<std::int64_t>(out, p->value.rows());
        write_pod<std::int64_t>(out, p->value.cols());
        out.write(reinterpret_cast<const char *>(p->value.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
    }
}

void ParameterSet::load(std::istream &in)
{
    const auto count = read_pod<std::uint64_t>(in);
    if (count != params_.size())
        throw std::runtime_error("parameter blob has " + std::to_string(count) + " tensors, model expects " +
                                 std::to_string(params_.size()));
    for (auto &p : params_) {
        const auto len = read_pod<std::uint64_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(len));
        const auto rows = read_pod<std::int64_t>(in);
        const auto cols = read_pod<std::int64_t>(in);
        if (name != p->name || rows != p->value.rows() || cols != p->value.cols())
            throw std::runtime_error("parameter blob mismatch at " + p->name + " (found " + name + ")");
        in.read(reinterpret_cast<char *>(p->value.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
        if (!in)
            throw std::runtime_error("parameter blob truncated");
    }
}

std::uint64_t ParameterSet::fingerprint() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void *data, std::size_t n) {
        const auto *b = static_cast<const unsigned char *>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto &p : params_) {
        mix(p->name.data(), p->name.size());
        mix(p->value.data(), sizeof(double) * static_cast<std::size_t>(p->value.size()));
    }
    return h;
}

Linear::Linear(ParameterSet &params, const std::string &name, int in, int out, Rng &rng) : in_(in), out_(out)
{
    if (in < 1 || out < 1)
        throw std::invalid_argument("Linear " + name + ": dimensions must be positive");
    weight_ = &params.add(name + ".w", lecun_uniform(rng, in, in, out));
    bias_ = &params.add(name + ".b", Matrix::Zero(1, out));
}

ad::Var Linear::operator()(ad::Tape &tape, const ad::Var &x) const
{
    return ad::add_row(ad::matmul(x, tape.parameter(*weight_)), tape.parameter(*bias_));
}

Mlp::Mlp(ParameterSet &params, const std::string &name, int in, const std::vector<int> &hidden, int out, Rng &rng)
{
    int width = in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        layers_.emplace_back(params, name + ".l" + std::to_string(i), width, hidden[i], rng);
        width = hidden[i];
    }
    layers_.emplace_back(params, name + ".l" + std::to_string(hidden.size()), width, out, rng);
}

ad::Var Mlp::operator()(ad::Tape &tape, const ad::Var &x) const
{
    ad::Var h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i](tape, h);
        if (i + 1 < layers_.size())
            h = ad::silu(h);
    }
    return h;
}

ConvTrunk::ConvTrunk(ParameterSet &params, const std::string &name, int height, int width, int channels,
                     const std::vector<ConvLayerSpec> &layers, Rng &rng)
{
    if (layers.empty())
        throw std::invalid_argument("ConvTrunk " + name + ": needs at least one layer");
    int h = height, w = width, c = channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Layer layer;
        layer.geometry = ad::ConvGeometry{h, w, c, layers[i].channels, 3, layers[i].stride, 1};
        const int fan_in = 9 * c;
        const std::string base = name + ".c" + std::to_string(i);
        layer.weight = &params.add(base + ".w", lecun_uniform(rng, fan_in, fan_in, layers[i].channels));
        layer.bias = &params.add(base + ".b", Matrix::Zero(1, layers[i].channels));
        h = layer.geometry.out_height();
        w = layer.geometry.out_width();
        c = layers[i].channels;
        layers_.push_back(layer);
    }
    out_ = c;
}

ad::Var ConvTrunk::operator()(ad::Tape &tape, const ad::Var &x) const
{
    ad::Var h = x;
    for (const auto &layer : layers_)
        h = ad::silu(ad::conv2d(h, tape.parameter(*layer.weight), tape.parameter(*layer.bias), layer.geometry));
    return ad::global_max_pool(h, out_);
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon)
{
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("Adam: learning rate must be positive");
}

void Adam::step(ParameterSet &params)
{
    auto all = params.all();
    if (m_.empty()) {
        for (const auto *p : all) {
            m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }
    if (m_.size() != all.size())
        throw std::logic_error("Adam: parameter set changed between steps");
    ++step_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < all.size(); ++i) {
        Parameter &p = *all[i];
        if (p.grad.size() == 0)
            continue;
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
        p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

void Sgd::step(ParameterSet &params)
{
    for (auto *p : params.all())
        if (p->grad.size() != 0)
            p->value -= lr_ * p->grad;
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate)
{
    if (kind == OptimizerKind::plain_sgd)
        return std::make_unique<Sgd>(learning_rate);
    return std::make_unique<Adam>(learning_rate);
}

} // namespace mvsemi
