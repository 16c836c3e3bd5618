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

#include "mvsemi/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvsemi {

namespace {

constexpr std::size_t kEvalChunk = 512;

std::string family_name(EncoderFamily f)
{
    return f == EncoderFamily::conv ? "conv" : "mlp";
}

} // namespace

void ModelConfig::validate() const
{
    if (latent_dim < 1)
        throw std::invalid_argument("model: latent_dim must be at least 1");
    if (!(beta > 0.0))
        throw std::invalid_argument("model: beta must be positive");
    if (!(gamma >= 0.0))
        throw std::invalid_argument("model: gamma must be non-negative");
    if (!(alpha >= 0.0))
        throw std::invalid_argument("model: alpha must be non-negative");
    if (!(temperature > 0.0))
        throw std::invalid_argument("model: temperature must be positive");
    for (int h : encoder_hidden)
        if (h < 1)
            throw std::invalid_argument("model: encoder widths must be positive");
    for (int h : decoder_hidden)
        if (h < 1)
            throw std::invalid_argument("model: decoder widths must be positive");
    for (int h : predictor_hidden)
        if (h < 1)
            throw std::invalid_argument("model: predictor widths must be positive");
    for (const auto &c : conv_layers)
        if (c.channels < 1 || c.stride < 1)
            throw std::invalid_argument("model: conv layers need positive channels and stride");
}

void to_json(nlohmann::json &j, const ModelConfig &c)
{
    nlohmann::json conv = nlohmann::json::array();
    for (const auto &l : c.conv_layers)
        conv.push_back({{"channels", l.channels}, {"stride", l.stride}});
    j = {{"latent_dim", c.latent_dim},
         {"encoder_hidden", c.encoder_hidden},
         {"decoder_hidden", c.decoder_hidden},
         {"predictor_hidden", c.predictor_hidden},
         {"conv_layers", conv},
         {"encoder_family", family_name(c.encoder_family)},
         {"beta", c.beta},
         {"gamma", c.gamma},
         {"alpha", c.alpha},
         {"temperature", c.temperature},
         {"unsup_on_labeled", c.unsup_on_labeled},
         {"per_view_kl_in_unsup", c.per_view_kl_in_unsup},
         {"allow_prior_only_fusion", c.allow_prior_only_fusion},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json &j, ModelConfig &c)
{
    reject_unknown_keys(j,
                        {"latent_dim", "encoder_hidden", "decoder_hidden", "predictor_hidden", "conv_layers",
                         "encoder_family", "beta", "gamma", "alpha", "temperature", "unsup_on_labeled",
                         "per_view_kl_in_unsup", "allow_prior_only_fusion", "seed"},
                        "model");
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
    c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
    c.predictor_hidden = j.value("predictor_hidden", c.predictor_hidden);
    if (j.contains("conv_layers")) {
        c.conv_layers.clear();
        for (const auto &l : j.at("conv_layers")) {
            reject_unknown_keys(l, {"channels", "stride"}, "model.conv_layers");
            c.conv_layers.push_back({l.value("channels", 16), l.value("stride", 1)});
        }
    }
    if (j.contains("encoder_family")) {
        const auto f = j.at("encoder_family").get<std::string>();
        if (f == "mlp")
            c.encoder_family = EncoderFamily::mlp;
        else if (f == "conv")
            c.encoder_family = EncoderFamily::conv;
        else
            throw ConfigError("model.encoder_family: expected 'mlp' or 'conv', got '" + f + "'");
    }
    c.beta = j.value("beta", c.beta);
    c.gamma = j.value("gamma", c.gamma);
    c.alpha = j.value("alpha", c.alpha);
    c.temperature = j.value("temperature", c.temperature);
    c.unsup_on_labeled = j.value("unsup_on_labeled", c.unsup_on_labeled);
    c.per_view_kl_in_unsup = j.value("per_view_kl_in_unsup", c.per_view_kl_in_unsup);
    c.allow_prior_only_fusion = j.value("allow_prior_only_fusion", c.allow_prior_only_fusion);
    c.seed = j.value("seed", c.seed);
}

Batch Batch::from_samples(const DatasetSchema &schema, std::span<const MultiViewSample *const> samples)
{
    const int V = schema.num_views;
    Batch b;
    b.size = static_cast<int>(samples.size());
    b.present_rows.assign(static_cast<std::size_t>(V), {});
    for (int r = 0; r < b.size; ++r) {
        const auto &s = *samples[static_cast<std::size_t>(r)];
        if (static_cast<int>(s.views.size()) != V)
            throw std::invalid_argument("batch: sample " + std::to_string(s.sample_id) + " has wrong view count");
        for (int v = 0; v < V; ++v)
            if (s.present(v))
                b.present_rows[static_cast<std::size_t>(v)].push_back(r);
        if (s.label) {
            if (*s.label < 0 || *s.label >= schema.num_classes)
                throw std::invalid_argument("batch: label " + std::to_string(*s.label) + " of sample " +
                                            std::to_string(s.sample_id) + " is outside [0, " +
                                            std::to_string(schema.num_classes) + ")");
            b.labeled_rows.push_back(r);
            b.labels.push_back(*s.label);
        }
        b.sample_ids.push_back(s.sample_id);
    }
    for (int v = 0; v < V; ++v) {
        const auto &rows = b.present_rows[static_cast<std::size_t>(v)];
        const int d = schema.view_dim(v);
        Matrix x(static_cast<Eigen::Index>(rows.size()), d);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto &f = *samples[static_cast<std::size_t>(rows[i])]->views[static_cast<std::size_t>(v)];
            if (static_cast<int>(f.size()) != d)
                throw std::invalid_argument("batch: view " + std::to_string(v) + " has " + std::to_string(f.size()) +
                                            " features, schema expects " + std::to_string(d));
            for (int k = 0; k < d; ++k)
                x(static_cast<Eigen::Index>(i), k) = f[static_cast<std::size_t>(k)];
        }
        b.inputs.push_back(std::move(x));
    }
    return b;
}

Batch Batch::from_dataset(const Dataset &dataset, std::span<const std::size_t> indices)
{
    std::vector<const MultiViewSample *> ptrs;
    ptrs.reserve(indices.size());
    for (auto i : indices)
        ptrs.push_back(&dataset.samples.at(i));
    return from_samples(dataset.schema, ptrs);
}

LatentNoise LatentNoise::draw(const Batch &batch, int latent_dim, Rng &rng)
{
    LatentNoise n;
    n.fused = standard_normal(rng, batch.size, latent_dim);
    for (const auto &rows : batch.present_rows)
        n.per_view.push_back(standard_normal(rng, static_cast<Eigen::Index>(rows.size()), latent_dim));
    return n;
}

LatentNoise LatentNoise::zeros(const Batch &batch, int latent_dim)
{
    LatentNoise n;
    n.fused = Matrix::Zero(batch.size, latent_dim);
    for (const auto &rows : batch.present_rows)
        n.per_view.push_back(Matrix::Zero(static_cast<Eigen::Index>(rows.size()), latent_dim));
    return n;
}

MultiViewModel::MultiViewModel(DatasetSchema schema, ModelConfig config)
    : schema_(std::move(schema)), config_(std::move(config))
{
    schema_.validate();
    config_.validate();
    const int V = schema_.num_views;
    const int D = config_.latent_dim;
    Rng rng(derive_seed(config_.seed, 0x6d6f64656cULL));
    encoder_conv_.resize(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) {
        const auto &shape = schema_.view_shapes[static_cast<std::size_t>(v)];
        const std::string enc = encoder_prefix(v);
        int width = shape.size();
        if (config_.encoder_family == EncoderFamily::conv && shape.is_image()) {
            encoder_conv_[static_cast<std::size_t>(v)] =
                ConvTrunk(params_, enc + "conv", shape.height, shape.width, shape.channels, config_.conv_layers, rng);
            width = encoder_conv_[static_cast<std::size_t>(v)].out_features();
        }
        if (!config_.encoder_hidden.empty()) {
            std::vector<int> inner(config_.encoder_hidden.begin(), config_.encoder_hidden.end() - 1);
            encoder_mlp_.emplace_back(params_, enc + "mlp", width, inner, config_.encoder_hidden.back(), rng);
            width = config_.encoder_hidden.back();
        } else {
            encoder_mlp_.emplace_back();
        }
        mean_head_.emplace_back(params_, enc + "mean", width, D, rng);
        log_variance_head_.emplace_back(params_, enc + "logvar", width, D, rng);
    }
    for (int v = 0; v < V; ++v)
        decoder_.emplace_back(params_, decoder_prefix(v) + "mlp", D, config_.decoder_hidden, schema_.view_dim(v), rng);
    predictor_ = Mlp(params_, predictor_prefix() + "mlp", D, config_.predictor_hidden, schema_.num_classes, rng);
}

MultiViewModel::Posterior MultiViewModel::encode(ad::Tape &tape, int v, const ad::Var &x) const
{
    const auto vi = static_cast<std::size_t>(v);
    ad::Var h = x;
    if (encoder_conv_[vi].out_features() > 0)
        h = encoder_conv_[vi](tape, h);
    if (encoder_mlp_[vi].out_features() > 0)
        h = ad::silu(encoder_mlp_[vi](tape, h));
    return {mean_head_[vi](tape, h), ad::soft_clamp(log_variance_head_[vi](tape, h), kLogVarianceBound)};
}

ad::Var MultiViewModel::decode(ad::Tape &tape, int v, const ad::Var &z) const
{
    return decoder_[static_cast<std::size_t>(v)](tape, z);
}

ad::Var MultiViewModel::logits(ad::Tape &tape, const ad::Var &z) const
{
    return predictor_(tape, z);
}

MultiViewModel::Posterior MultiViewModel::fuse(const std::vector<Posterior> &views,
                                               const std::vector<std::vector<int>> &present_rows,
                                               int batch_size) const
{
    // Prior N(0, I): precision 1, zero mean contribution.
    ad::Tape &tape = *views.front().mean.tape();
    const int D = config_.latent_dim;
    ad::Var precision = tape.constant(Matrix::Ones(batch_size, D));
    ad::Var weighted = tape.constant(Matrix::Zero(batch_size, D));
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (present_rows[v].empty())
            continue;
        ad::Var lambda = ad::exp(ad::scale(views[v].log_variance, -1.0));
        precision = ad::add(precision, ad::scatter_rows(lambda, present_rows[v], batch_size));
        weighted = ad::add(weighted, ad::scatter_rows(ad::mul(lambda, views[v].mean), present_rows[v], batch_size));
    }
    ad::Var variance = ad::reciprocal(precision);
    ad::Var mean = ad::mul(weighted, variance);
    ad::Var log_variance = ad::clamp(ad::scale(ad::log(precision), -1.0), -kLogVarianceBound, kLogVarianceBound);
    return {mean, log_variance};
}

ForwardPass MultiViewModel::forward(ad::Tape &tape, const Batch &batch, const LatentNoise &noise) const
{
    const int V = schema_.num_views;
    if (batch.num_views() != V)
        throw std::invalid_argument("forward: batch view count differs from schema");
    if (!config_.allow_prior_only_fusion) {
        std::vector<int> count(static_cast<std::size_t>(batch.size), 0);
        for (const auto &rows : batch.present_rows)
            for (int r : rows)
                ++count[static_cast<std::size_t>(r)];
        for (int r = 0; r < batch.size; ++r)
            if (count[static_cast<std::size_t>(r)] == 0)
                throw std::invalid_argument("forward: sample " + std::to_string(batch.sample_ids[static_cast<std::size_t>(r)]) +
                                            " has no present view");
    }
    ForwardPass fp;
    std::vector<Posterior> posts;
    for (int v = 0; v < V; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        ad::Var x = tape.constant(batch.inputs[vi]);
        Posterior p = batch.present_rows[vi].empty()
                          ? Posterior{tape.constant(Matrix::Zero(0, config_.latent_dim)),
                                      tape.constant(Matrix::Zero(0, config_.latent_dim))}
                          : encode(tape, v, x);
        fp.view_mean.push_back(p.mean);
        fp.view_log_variance.push_back(p.log_variance);
        ad::Var eps = tape.constant(noise.per_view.at(vi));
        fp.view_z.push_back(ad::add(p.mean, ad::mul(ad::exp(ad::scale(p.log_variance, 0.5)), eps)));
        posts.push_back(p);
    }
    Posterior fused = fuse(posts, batch.present_rows, batch.size);
    fp.fused_mean = fused.mean;
    fp.fused_log_variance = fused.log_variance;
    ad::Var eps = tape.constant(noise.fused);
    fp.z = ad::add(fused.mean, ad::mul(ad::exp(ad::scale(fused.log_variance, 0.5)), eps));
    return fp;
}

DiagGaussian MultiViewModel::encode_view(int v, std::span<const float> x) const
{
    if (v < 0 || v >= schema_.num_views)
        throw std::invalid_argument("encode_view: view index out of range");
    if (static_cast<int>(x.size()) != schema_.view_dim(v))
        throw std::invalid_argument("encode_view: view " + std::to_string(v) + " expects " +
                                    std::to_string(schema_.view_dim(v)) + " features, got " + std::to_string(x.size()));
    ad::Tape tape;
    Matrix row(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k)
        row(0, static_cast<Eigen::Index>(k)) = x[k];
    Posterior p = encode(tape, v, tape.constant(std::move(row)));
    return DiagGaussian(p.mean.value().row(0).transpose(), p.log_variance.value().row(0).transpose());
}

DiagGaussian MultiViewModel::fuse_present(std::span<const DiagGaussian> posteriors, const std::vector<bool> &mask) const
{
    if (posteriors.size() != mask.size())
        throw std::invalid_argument("fuse_present: mask length differs from posterior count");
    std::vector<DiagGaussian> present;
    for (std::size_t v = 0; v < mask.size(); ++v)
        if (mask[v])
            present.push_back(posteriors[v]);
    if (present.empty() && !config_.allow_prior_only_fusion)
        throw std::invalid_argument("fuse_present: no present view");
    return poe_fuse(present, standard_prior(config_.latent_dim));
}

Vector MultiViewModel::decode_view(int v, const Vector &z) const
{
    if (v < 0 || v >= schema_.num_views)
        throw std::invalid_argument("decode_view: view index out of range");
    if (z.size() != config_.latent_dim)
        throw std::invalid_argument("decode_view: latent length " + std::to_string(z.size()) + " != " +
                                    std::to_string(config_.latent_dim));
    ad::Tape tape;
    Matrix row = z.transpose();
    ad::Var out = decode(tape, v, tape.constant(std::move(row)));
    if (schema_.view_likelihood[static_cast<std::size_t>(v)] == ViewLikelihood::bernoulli)
        out = ad::sigmoid(out);
    return out.value().row(0).transpose();
}

Vector MultiViewModel::predict(const Vector &z) const
{
    if (z.size() != config_.latent_dim)
        throw std::invalid_argument("predict: latent length " + std::to_string(z.size()) + " != " +
                                    std::to_string(config_.latent_dim));
    ad::Tape tape;
    Matrix row = z.transpose();
    return softmax_rows(logits(tape, tape.constant(std::move(row))).value()).row(0).transpose();
}

DiagGaussian MultiViewModel::fused_posterior(const MultiViewSample &sample) const
{
    if (static_cast<int>(sample.views.size()) != schema_.num_views)
        throw std::invalid_argument("sample " + std::to_string(sample.sample_id) + " has wrong view count");
    if (sample.num_present() == 0 && !config_.allow_prior_only_fusion)
        throw std::invalid_argument("sample " + std::to_string(sample.sample_id) + " has no present view");
    std::vector<DiagGaussian> present;
    for (int v = 0; v < schema_.num_views; ++v)
        if (sample.present(v))
            present.push_back(encode_view(v, *sample.views[static_cast<std::size_t>(v)]));
    return poe_fuse(present, standard_prior(config_.latent_dim));
}

Vector MultiViewModel::predict_sample(const MultiViewSample &sample, const PredictMode &mode) const
{
    if (mode.kind == PredictMode::Kind::posterior_mean)
        return predict(fused_posterior(sample).mean());
    if (mode.samples < 1)
        throw std::invalid_argument("predict_sample: monte-carlo needs at least one draw");
    Rng rng = make_rng(mode.seed, static_cast<std::uint64_t>(sample.sample_id));
    return predict_sample_with_noise(sample, standard_normal(rng, mode.samples, config_.latent_dim));
}

Vector MultiViewModel::predict_sample_with_noise(const MultiViewSample &sample, const Matrix &noise) const
{
    if (noise.cols() != config_.latent_dim || noise.rows() < 1)
        throw std::invalid_argument("predict_sample_with_noise: noise must be k x latent_dim");
    const DiagGaussian q = fused_posterior(sample);
    Vector acc = Vector::Zero(schema_.num_classes);
    for (Eigen::Index r = 0; r < noise.rows(); ++r)
        acc += predict(reparam_sample(q, noise.row(r).transpose()));
    return acc / static_cast<double>(noise.rows());
}

std::map<int, Features> MultiViewModel::impute_missing(const MultiViewSample &sample, ImputeMode mode,
                                                       std::uint64_t seed) const
{
    const DiagGaussian q = fused_posterior(sample);
    std::map<int, Features> out;
    if (sample.num_present() == schema_.num_views)
        return out;
    Vector z = q.mean();
    if (mode == ImputeMode::sample) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(sample.sample_id));
        z = reparam_sample(q, standard_normal(rng, config_.latent_dim, 1).col(0));
    }
    for (int v = 0; v < schema_.num_views; ++v) {
        if (sample.present(v))
            continue;
        const Vector x = decode_view(v, z);
        Features f(static_cast<std::size_t>(x.size()));
        for (Eigen::Index k = 0; k < x.size(); ++k)
            f[static_cast<std::size_t>(k)] = static_cast<float>(x(k));
        out.emplace(v, std::move(f));
    }
    return out;
}

Matrix MultiViewModel::predict_proba(const Dataset &dataset) const
{
    return predict_proba(dataset, PredictMode::posterior_mean());
}

Matrix MultiViewModel::predict_proba(const Dataset &dataset, const PredictMode &mode) const
{
    const auto n = dataset.samples.size();
    Matrix out(static_cast<Eigen::Index>(n), schema_.num_classes);
    if (mode.kind == PredictMode::Kind::monte_carlo) {
        for (std::size_t i = 0; i < n; ++i)
            out.row(static_cast<Eigen::Index>(i)) = predict_sample(dataset.samples[i], mode).transpose();
        return out;
    }
    const Matrix means = fused_means(dataset);
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const auto len = static_cast<Eigen::Index>(std::min(kEvalChunk, n - start));
        ad::Tape tape;
        ad::Var z = tape.constant(means.middleRows(static_cast<Eigen::Index>(start), len));
        out.middleRows(static_cast<Eigen::Index>(start), len) = softmax_rows(logits(tape, z).value());
    }
    return out;
}

Matrix MultiViewModel::fused_means(const Dataset &dataset) const
{
    const auto n = dataset.samples.size();
    Matrix out(static_cast<Eigen::Index>(n), config_.latent_dim);
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const auto end = std::min(start + kEvalChunk, n);
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < end; ++i)
            idx.push_back(i);
        const Batch batch = Batch::from_dataset(dataset, idx);
        ad::Tape tape;
        std::vector<Posterior> posts;
        for (int v = 0; v < schema_.num_views; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            if (batch.present_rows[vi].empty()) {
                posts.push_back({tape.constant(Matrix::Zero(0, config_.latent_dim)),
                                 tape.constant(Matrix::Zero(0, config_.latent_dim))});
                continue;
            }
            posts.push_back(encode(tape, v, tape.constant(batch.inputs[vi])));
        }
        for (int r = 0; r < batch.size; ++r) {
            bool any = false;
            for (const auto &rows : batch.present_rows)
                any = any || std::binary_search(rows.begin(), rows.end(), r);
            if (!any && !config_.allow_prior_only_fusion)
                throw std::invalid_argument("sample " + std::to_string(batch.sample_ids[static_cast<std::size_t>(r)]) +
                                            " has no present view");
        }
        Posterior fused = fuse(posts, batch.present_rows, batch.size);
        out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) = fused.mean.value();
    }
    return out;
}

Dataset MultiViewModel::impute_dataset(const Dataset &dataset, ImputeMode mode, std::uint64_t seed) const
{
    Dataset out = dataset;
    for (auto &s : out.samples)
        for (auto &[v, f] : impute_missing(s, mode, seed))
            s.views[static_cast<std::size_t>(v)] = std::move(f);
    return out;
}

Matrix softmax_rows(const Matrix &logits)
{
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double m = logits.row(r).maxCoeff();
        auto e = (logits.row(r).array() - m).exp();
        out.row(r) = e / e.sum();
    }
    return out;
}

std::vector<Matrix> snapshot(const ParameterSet &params)
{
    std::vector<Matrix> out;
    for (const auto *p : params.all())
        out.push_back(p->value);
    return out;
}

void restore(ParameterSet &params, const std::vector<Matrix> &values)
{
    auto all = params.all();
    if (all.size() != values.size())
        throw std::invalid_argument("restore: snapshot size differs from parameter set");
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i]->value = values[i];
}

} // namespace mvsemi
