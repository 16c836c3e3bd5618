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

#include "mvsemi/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mvsemi {

namespace {

// Positions k in a (sorted) and l in b where a[k] == b[l].
void intersect_positions(const std::vector<int> &a, const std::vector<int> &b, std::vector<int> &pa,
                         std::vector<int> &pb)
{
    pa.clear();
    pb.clear();
    std::size_t k = 0, l = 0;
    while (k < a.size() && l < b.size()) {
        if (a[k] < b[l]) {
            ++k;
        } else if (b[l] < a[k]) {
            ++l;
        } else {
            pa.push_back(static_cast<int>(k++));
            pb.push_back(static_cast<int>(l++));
        }
    }
}

ad::Var zero(ad::Tape &tape) { return tape.constant(Matrix::Zero(1, 1)); }

} // namespace

void to_json(nlohmann::json &j, const LossBreakdown &b)
{
    j = {{"step", b.step},       {"recon", b.recon},         {"kl_joint", b.kl_joint},
         {"kl_view", b.kl_view}, {"ce", b.ce},               {"cvmi", b.cvmi},
         {"total", b.total},     {"n_labeled", b.n_labeled}, {"n_unlabeled", b.n_unlabeled},
         {"n_pairs", b.n_pairs}};
}

LossOptions LossOptions::from(const ModelConfig &config)
{
    LossOptions o;
    o.beta = config.beta;
    o.gamma = config.gamma;
    o.alpha = config.alpha;
    o.temperature = config.temperature;
    o.unsup_on_labeled = config.unsup_on_labeled;
    o.per_view_kl_in_unsup = config.per_view_kl_in_unsup;
    return o;
}

ad::Var view_log_likelihood(const ad::Var &decoded, const Matrix &x, ViewLikelihood likelihood)
{
    ad::Tape &tape = *decoded.tape();
    ad::Var xv = tape.constant(x);
    if (likelihood == ViewLikelihood::bernoulli)
        return ad::row_sum(ad::sub(ad::mul(xv, decoded), ad::softplus(decoded)));
    const double log_norm = 0.5 * static_cast<double>(x.cols()) * std::log(2.0 * std::numbers::pi);
    return ad::add_scalar(ad::scale(ad::row_sum(ad::square(ad::sub(xv, decoded))), -0.5), -log_norm);
}

ad::Var kl_rows(const ad::Var &mean, const ad::Var &log_variance)
{
    ad::Var inner = ad::sub(ad::add(ad::square(mean), ad::exp(log_variance)), log_variance);
    return ad::scale(ad::add_scalar(ad::row_sum(inner), -static_cast<double>(mean.cols())), 0.5);
}

std::optional<ad::Var> infonce_pair(const ad::Var &z_i, const ad::Var &z_j, double temperature)
{
    if (z_i.rows() != z_j.rows() || z_i.cols() != z_j.cols())
        throw std::invalid_argument("infonce_pair: batches must have equal shape");
    if (z_i.rows() < 2)
        return std::nullopt;
    if (!(temperature > 0.0))
        throw std::invalid_argument("infonce_pair: temperature must be positive");
    ad::Var s = ad::matmul_nt(ad::normalize_rows(z_i), ad::normalize_rows(z_j));
    if (temperature != 1.0)
        s = ad::scale(s, 1.0 / temperature);
    ad::Var pos = ad::diagonal(s);
    ad::Var forward = ad::mean(ad::sub(pos, ad::logsumexp_rows(s)));
    ad::Var backward = ad::mean(ad::sub(pos, ad::logsumexp_rows(ad::transpose(s))));
    return ad::scale(ad::add(forward, backward), 0.5);
}

std::optional<double> infonce_pair(const Matrix &z_i, const Matrix &z_j, double temperature)
{
    ad::Tape tape;
    auto v = infonce_pair(tape.constant(z_i), tape.constant(z_j), temperature);
    if (!v)
        return std::nullopt;
    return v->scalar();
}

ad::Var cvmi_loss(ad::Tape &tape, const std::vector<ad::Var> &view_z, const std::vector<std::vector<int>> &present_rows,
                  double temperature, int *n_pairs)
{
    if (view_z.size() != present_rows.size())
        throw std::invalid_argument("cvmi_loss: latents and masks disagree on view count");
    std::vector<ad::Var> terms;
    std::vector<int> pa, pb;
    for (std::size_t i = 0; i < view_z.size(); ++i) {
        for (std::size_t j = i + 1; j < view_z.size(); ++j) {
            intersect_positions(present_rows[i], present_rows[j], pa, pb);
            if (pa.size() < 2)
                continue;
            auto est = infonce_pair(ad::gather_rows(view_z[i], pa), ad::gather_rows(view_z[j], pb), temperature);
            if (est)
                terms.push_back(*est);
        }
    }
    if (n_pairs)
        *n_pairs = static_cast<int>(terms.size());
    if (terms.empty())
        return zero(tape);
    ad::Var acc = terms.front();
    for (std::size_t k = 1; k < terms.size(); ++k)
        acc = ad::add(acc, terms[k]);
    return ad::scale(acc, -1.0 / static_cast<double>(terms.size()));
}

double cvmi_loss(const std::vector<Matrix> &view_z, const std::vector<std::vector<int>> &present_rows,
                 double temperature, int *n_pairs)
{
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto &z : view_z)
        vars.push_back(tape.constant(z));
    return cvmi_loss(tape, vars, present_rows, temperature, n_pairs).scalar();
}

ad::Var supervised_ib_loss(const MultiViewModel &model, ad::Tape &tape, const Batch &batch, const ForwardPass &fp,
                           const LossOptions &options, LossBreakdown *breakdown)
{
    const int K = model.schema().num_classes;
    const int V = batch.num_views();
    for (int y : batch.labels)
        if (y < 0 || y >= K)
            throw std::invalid_argument("supervised loss: label " + std::to_string(y) + " outside [0, " +
                                        std::to_string(K) + ")");
    if (breakdown)
        breakdown->kl_view.assign(static_cast<std::size_t>(V), 0.0);
    const auto &rows = batch.labeled_rows;
    if (rows.empty())
        return zero(tape);
    const double n_lab = static_cast<double>(rows.size());

    ad::Var z = ad::gather_rows(fp.z, rows);
    ad::Var logits = model.logits(tape, z);
    ad::Var ce = ad::sub(ad::logsumexp_rows(logits), ad::pick(logits, batch.labels));
    ad::Var kl_fused = kl_rows(ad::gather_rows(fp.fused_mean, rows), ad::gather_rows(fp.fused_log_variance, rows));
    ad::Var loss = ad::scale(ad::sum(ad::add(ce, ad::scale(kl_fused, options.beta))), 1.0 / n_lab);

    // Per-view KL over present (labeled sample, view) pairs.
    std::vector<int> labeled_positions, unused;
    ad::Var kl_sum;
    int n_view_pairs = 0;
    for (int v = 0; v < V; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        intersect_positions(batch.present_rows[vi], rows, labeled_positions, unused);
        if (labeled_positions.empty())
            continue;
        ad::Var kv = ad::sum(kl_rows(ad::gather_rows(fp.view_mean[vi], labeled_positions),
                                     ad::gather_rows(fp.view_log_variance[vi], labeled_positions)));
        if (breakdown)
            breakdown->kl_view[vi] = kv.scalar() / static_cast<double>(labeled_positions.size());
        kl_sum = kl_sum.valid() ? ad::add(kl_sum, kv) : kv;
        n_view_pairs += static_cast<int>(labeled_positions.size());
    }
    if (n_view_pairs > 0)
        loss = ad::add(loss, ad::scale(kl_sum, options.beta / static_cast<double>(n_view_pairs)));
    if (breakdown) {
        breakdown->ce = ad::sum(ce).scalar() / n_lab;
        breakdown->sup = loss.scalar();
    }
    return loss;
}

ad::Var unsupervised_elbo_loss(const MultiViewModel &model, ad::Tape &tape, const Batch &batch,
                               const ForwardPass &fp, const LossOptions &options, LossBreakdown *breakdown)
{
    const int V = batch.num_views();
    std::vector<int> rows;
    if (options.unsup_on_labeled) {
        for (int r = 0; r < batch.size; ++r)
            rows.push_back(r);
    } else {
        std::size_t k = 0;
        for (int r = 0; r < batch.size; ++r) {
            if (k < batch.labeled_rows.size() && batch.labeled_rows[k] == r)
                ++k;
            else
                rows.push_back(r);
        }
    }
    if (breakdown) {
        breakdown->recon.assign(static_cast<std::size_t>(V), 0.0);
        if (breakdown->kl_view.empty())
            breakdown->kl_view.assign(static_cast<std::size_t>(V), 0.0);
    }
    if (rows.empty())
        return zero(tape);
    const double n = static_cast<double>(rows.size());

    ad::Var kl_fused = ad::sum(kl_rows(ad::gather_rows(fp.fused_mean, rows), ad::gather_rows(fp.fused_log_variance, rows)));
    ad::Var acc = ad::scale(kl_fused, options.beta);
    if (breakdown)
        breakdown->kl_joint = kl_fused.scalar() / n;

    std::vector<int> positions, batch_rows;
    for (int v = 0; v < V; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        intersect_positions(batch.present_rows[vi], rows, positions, batch_rows);
        if (positions.empty())
            continue;
        Matrix x(static_cast<Eigen::Index>(positions.size()), batch.inputs[vi].cols());
        for (std::size_t k = 0; k < positions.size(); ++k)
            x.row(static_cast<Eigen::Index>(k)) = batch.inputs[vi].row(positions[k]);
        std::vector<int> z_rows;
        for (int p : batch_rows)
            z_rows.push_back(rows[static_cast<std::size_t>(p)]);
        ad::Var decoded = model.decode(tape, v, ad::gather_rows(fp.z, z_rows));
        ad::Var nll = ad::scale(ad::sum(view_log_likelihood(decoded, x, model.schema().view_likelihood[vi])), -1.0);
        if (breakdown)
            breakdown->recon[vi] = nll.scalar() / n;
        acc = ad::add(acc, nll);
        if (options.per_view_kl_in_unsup) {
            ad::Var kv = ad::sum(kl_rows(ad::gather_rows(fp.view_mean[vi], positions),
                                         ad::gather_rows(fp.view_log_variance[vi], positions)));
            acc = ad::add(acc, ad::scale(kv, options.beta));
        }
    }
    ad::Var loss = ad::scale(acc, 1.0 / n);
    if (breakdown)
        breakdown->unsup = loss.scalar();
    return loss;
}

LossTerms total_loss(const MultiViewModel &model, ad::Tape &tape, const Batch &batch, const ForwardPass &fp,
                     const LossOptions &options)
{
    if (batch.size < 1)
        throw std::invalid_argument("total_loss: empty batch");
    LossTerms t;
    auto &b = t.breakdown;
    b.n_labeled = static_cast<int>(batch.labeled_rows.size());
    b.n_unlabeled = batch.size - b.n_labeled;
    t.sup = supervised_ib_loss(model, tape, batch, fp, options, &b);
    if (options.include_unsup) {
        t.unsup = unsupervised_elbo_loss(model, tape, batch, fp, options, &b);
    } else {
        t.unsup = zero(tape);
        b.recon.assign(static_cast<std::size_t>(batch.num_views()), 0.0);
    }
    int pairs = 0;
    t.cvmi = options.alpha != 0.0 ? cvmi_loss(tape, fp.view_z, batch.present_rows, options.temperature, &pairs)
                                  : zero(tape);
    if (options.alpha == 0.0) {
        b.cvmi = 0.0;
        std::vector<int> pa, pb;
        for (std::size_t i = 0; i < batch.present_rows.size(); ++i)
            for (std::size_t j = i + 1; j < batch.present_rows.size(); ++j) {
                intersect_positions(batch.present_rows[i], batch.present_rows[j], pa, pb);
                pairs += pa.size() >= 2 ? 1 : 0;
            }
    } else {
        b.cvmi = t.cvmi.scalar();
    }
    b.n_pairs = pairs;
    t.total = ad::add(ad::add(t.unsup, ad::scale(t.sup, options.gamma)), ad::scale(t.cvmi, options.alpha));
    b.total = t.total.scalar();
    return t;
}

} // namespace mvsemi
