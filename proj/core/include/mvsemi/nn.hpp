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

// Small layer library on top of the autodiff tape: parameter ownership,
// dense and convolutional stacks, and first-order optimizers.

#ifndef MVSEMI_NN_HPP_
#define MVSEMI_NN_HPP_

#include "mvsemi/autodiff.hpp"
#include "mvsemi/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace mvsemi {

/// Owns parameters with stable addresses, in insertion order.
class ParameterSet {
  public:
    Parameter &add(std::string name, Matrix init);
    Parameter *find(const std::string &name);
    const Parameter *find(const std::string &name) const;

    std::vector<Parameter *> all();
    std::vector<const Parameter *> all() const;
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();
    bool all_finite() const;

    /// Length-prefixed binary blob: count, then per parameter name, rows,
    /// cols, and little-endian doubles.
    void save(std::ostream &out) const;
    /// Loads values into already-constructed parameters; names and shapes
    /// must match exactly.
    void load(std::istream &in);

    /// Order-sensitive FNV-1a hash over names and raw values.
    std::uint64_t fingerprint() const;

  private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

class Linear {
  public:
    Linear() = default;
    Linear(ParameterSet &params, const std::string &name, int in, int out, Rng &rng);

    ad::Var operator()(ad::Tape &tape, const ad::Var &x) const;

    int in_features() const { return in_; }
    int out_features() const { return out_; }

  private:
    Parameter *weight_ = nullptr;
    Parameter *bias_ = nullptr;
    int in_ = 0;
    int out_ = 0;
};

/// Dense stack with SiLU between layers and a linear output layer.
class Mlp {
  public:
    Mlp() = default;
    Mlp(ParameterSet &params, const std::string &name, int in, const std::vector<int> &hidden, int out, Rng &rng);

    ad::Var operator()(ad::Tape &tape, const ad::Var &x) const;

    int in_features() const { return layers_.empty() ? 0 : layers_.front().in_features(); }
    int out_features() const { return layers_.empty() ? 0 : layers_.back().out_features(); }

  private:
    std::vector<Linear> layers_;
};

struct ConvLayerSpec {
    int channels = 16;
    int stride = 1;
};

/// Convolution stack (3x3 kernels, SiLU) ending in a global max pool, so the
/// output is a per-channel detector response independent of position.
class ConvTrunk {
  public:
    ConvTrunk() = default;
    ConvTrunk(ParameterSet &params, const std::string &name, int height, int width, int channels,
              const std::vector<ConvLayerSpec> &layers, Rng &rng);

    ad::Var operator()(ad::Tape &tape, const ad::Var &x) const;
    int out_features() const { return out_; }

  private:
    struct Layer {
        ad::ConvGeometry geometry;
        Parameter *weight = nullptr;
        Parameter *bias = nullptr;
    };
    std::vector<Layer> layers_;
    int out_ = 0;
};

class Optimizer {
  public:
    virtual ~Optimizer() = default;
    /// Applies one update from the accumulated gradients.
    virtual void step(ParameterSet &params) = 0;
};

class Adam final : public Optimizer {
  public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
    void step(ParameterSet &params) override;

  private:
    double lr_, beta1_, beta2_, eps_;
    long step_ = 0;
    std::vector<Matrix> m_, v_;
};

class Sgd final : public Optimizer {
  public:
    explicit Sgd(double learning_rate) : lr_(learning_rate) {}
    void step(ParameterSet &params) override;

  private:
    double lr_;
};

enum class OptimizerKind { adaptive_moment, plain_sgd };
std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate);

} // namespace mvsemi

#endif // MVSEMI_NN_HPP_
