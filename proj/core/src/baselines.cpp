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

#include "mvsemi/baselines.hpp"

#include "mvsemi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvsemi {

namespace {

constexpr std::uint64_t kBaseInitStream = 0x62617365ULL;
constexpr std::uint64_t kHeadInitStream = 0x68656164ULL;
constexpr std::size_t kEvalChunk = 512;

struct EarlyStopper {
    EarlyStopper(SelectionMetric m, int p) : metric(m), patience(p) {}

    SelectionMetric metric;
    int patience;
    double best = -1.0;
    int since = 0;
    std::vector<Matrix> snapshot_values;
    int best_eval = -1;

    // Returns true when training should stop.
    bool update(const EvalPoint &p, int index, const ParameterSet &params)
    {
        const double m = metric == SelectionMetric::accuracy ? p.accuracy : p.auroc;
        if (m > best) {
            best = m;
            since = 0;
            best_eval = index;
            snapshot_values = snapshot(params);
            return false;
        }
        return ++since >= patience;
    }
};

std::vector<int> labels_of(const Dataset &d)
{
    std::vector<int> out;
    for (const auto &s : d.samples)
        out.push_back(s.label.value());
    return out;
}

EvalPoint score_matrix(const Matrix &proba, const std::vector<int> &labels)
{
    EvalPoint p;
    p.auroc = auroc(proba, labels).value;
    p.accuracy = accuracy(proba, labels);
    return p;
}

} // namespace

std::string to_string(BaselineKind k)
{
    switch (k) {
    case BaselineKind::base: return "base";
    case BaselineKind::mvae: return "mvae";
    case BaselineKind::deepimv_style: return "deepimv_style";
    case BaselineKind::ours_no_cvmi: return "ours_no_cvmi";
    case BaselineKind::ours: return "ours";
    }
    return "ours";
}

BaselineKind parse_baseline_kind(const std::string &s)
{
    for (auto k : all_baseline_kinds())
        if (to_string(k) == s)
            return k;
    throw ConfigError("method: expected one of base, mvae, deepimv_style, ours_no_cvmi, ours; got '" + s + "'");
}

const std::vector<BaselineKind> &all_baseline_kinds()
{
    static const std::vector<BaselineKind> kinds{BaselineKind::base, BaselineKind::mvae, BaselineKind::deepimv_style,
                                                 BaselineKind::ours_no_cvmi, BaselineKind::ours};
    return kinds;
}

BaseModel::BaseModel(DatasetSchema schema, const ModelConfig &config) : schema_(std::move(schema))
{
    schema_.validate();
    config.validate();
    Rng rng(derive_seed(config.seed, kBaseInitStream));
    const int V = schema_.num_views;
    trunk_.resize(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) {
        const auto &shape = schema_.view_shapes[static_cast<std::size_t>(v)];
        const std::string name = "base" + std::to_string(v) + ".";
        int width = shape.size();
        if (config.encoder_family == EncoderFamily::conv && shape.is_image()) {
            trunk_[static_cast<std::size_t>(v)] =
                ConvTrunk(params_, name + "conv", shape.height, shape.width, shape.channels, config.conv_layers, rng);
            width = trunk_[static_cast<std::size_t>(v)].out_features();
        }
        head_.emplace_back(params_, name + "mlp", width, config.encoder_hidden, schema_.num_classes, rng);
    }
    trained_.assign(static_cast<std::size_t>(V), false);
}

ad::Var BaseModel::view_logits(ad::Tape &tape, int v, const ad::Var &x) const
{
    const auto vi = static_cast<std::size_t>(v);
    ad::Var h = trunk_[vi].out_features() > 0 ? trunk_[vi](tape, x) : x;
    return head_[vi](tape, h);
}

Vector BaseModel::predict_from_logits(const std::vector<std::optional<Vector>> &view_logits) const
{
    Vector acc = Vector::Zero(schema_.num_classes);
    int used = 0;
    for (std::size_t v = 0; v < view_logits.size(); ++v) {
        if (!view_logits[v] || !trained_.at(v))
            continue;
        acc += *view_logits[v];
        ++used;
    }
    if (used == 0)
        throw std::invalid_argument("base: no present view with a trained classifier");
    Matrix row = (acc / static_cast<double>(used)).transpose();
    return softmax_rows(row).row(0).transpose();
}

Vector BaseModel::predict_sample(const MultiViewSample &sample) const
{
    std::vector<std::optional<Vector>> logits(static_cast<std::size_t>(schema_.num_views));
    for (int v = 0; v < schema_.num_views; ++v) {
        if (!sample.present(v) || !trained(v))
            continue;
        const auto &f = *sample.views[static_cast<std::size_t>(v)];
        Matrix x(1, static_cast<Eigen::Index>(f.size()));
        for (std::size_t k = 0; k < f.size(); ++k)
            x(0, static_cast<Eigen::Index>(k)) = f[k];
        ad::Tape tape;
        logits[static_cast<std::size_t>(v)] = view_logits(tape, v, tape.constant(std::move(x))).value().row(0).transpose();
    }
    return predict_from_logits(logits);
}

Matrix BaseModel::predict_proba(const Dataset &dataset) const
{
    const auto n = dataset.samples.size();
    const int K = schema_.num_classes;
    Matrix out(static_cast<Eigen::Index>(n), K);
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const auto end = std::min(n, start + kEvalChunk);
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < end; ++i)
            idx.push_back(i);
        const Batch batch = Batch::from_dataset(dataset, idx);
        Matrix sum = Matrix::Zero(batch.size, K);
        std::vector<int> count(static_cast<std::size_t>(batch.size), 0);
        for (int v = 0; v < schema_.num_views; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            if (!trained_[vi] || batch.present_rows[vi].empty())
                continue;
            ad::Tape tape;
            const Matrix l = view_logits(tape, v, tape.constant(batch.inputs[vi])).value();
            for (std::size_t k = 0; k < batch.present_rows[vi].size(); ++k) {
                const int r = batch.present_rows[vi][k];
                sum.row(r) += l.row(static_cast<Eigen::Index>(k));
                ++count[static_cast<std::size_t>(r)];
            }
        }
        for (int r = 0; r < batch.size; ++r) {
            if (count[static_cast<std::size_t>(r)] == 0)
                throw std::invalid_argument("base: sample " + std::to_string(batch.sample_ids[static_cast<std::size_t>(r)]) +
                                            " has no present view with a trained classifier");
            sum.row(r) /= static_cast<double>(count[static_cast<std::size_t>(r)]);
        }
        out.middleRows(static_cast<Eigen::Index>(start), batch.size) = softmax_rows(sum);
    }
    return out;
}

BaseModel base_train(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                     const TrainConfig &train_config)
{
    train_config.validate();
    const Dataset labeled = train_set.labeled_only();
    if (labeled.samples.empty())
        throw std::invalid_argument("base: no supervision available (no labeled training samples)");
    BaseModel model(train_set.schema, model_config);
    const int V = train_set.schema.num_views;
    for (int v = 0; v < V; ++v) {
        bool any = false;
        for (const auto &s : labeled.samples)
            any = any || s.present(v);
        model.set_trained(v, any);
    }
    const TrainConfig cfg = step_matched(train_config, train_set.samples.size(), labeled.samples.size());
    const SelectionMetric metric = resolve_metric(cfg.selection_metric, train_set.schema.num_classes);
    const bool selecting = val_set != nullptr && metric != SelectionMetric::none;
    EarlyStopper stopper(metric, cfg.patience);
    auto optimizer = make_optimizer(cfg.optimizer, cfg.learning_rate);
    long step = 0;
    int n_evals = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        bool done = false;
        for (const auto &indices : make_batches(labeled.samples.size(), cfg.batch_size, cfg.seed, epoch)) {
            const Batch batch = Batch::from_dataset(labeled, indices);
            ad::Tape tape;
            model.parameters().zero_grad();
            ad::Var loss;
            for (int v = 0; v < V; ++v) {
                const auto &rows = batch.present_rows[static_cast<std::size_t>(v)];
                if (rows.empty())
                    continue;
                std::vector<int> y;
                for (int r : rows)
                    y.push_back(batch.labels[static_cast<std::size_t>(r)]);
                ad::Var l = model.view_logits(tape, v, tape.constant(batch.inputs[static_cast<std::size_t>(v)]));
                ad::Var ce = ad::mean(ad::sub(ad::logsumexp_rows(l), ad::pick(l, y)));
                loss = loss.valid() ? ad::add(loss, ce) : ce;
            }
            if (loss.valid()) {
                if (!std::isfinite(loss.scalar()))
                    throw TrainingError("base: non-finite loss at step " + std::to_string(step));
                tape.backward(loss);
                optimizer->step(model.parameters());
            }
            ++step;
            if (cfg.max_steps > 0 && step >= cfg.max_steps) {
                done = true;
                break;
            }
        }
        const bool eval_now = selecting && ((epoch + 1) % cfg.eval_every == 0 || done || epoch + 1 == cfg.max_epochs);
        if (eval_now) {
            EvalPoint p = score_classifier(model, *val_set);
            if (stopper.update(p, n_evals++, model.parameters()))
                break;
        }
        if (done)
            break;
    }
    if (selecting && !stopper.snapshot_values.empty())
        restore(model.parameters(), stopper.snapshot_values);
    return model;
}

FeatureClassifier::FeatureClassifier(int in, const std::vector<int> &hidden, int num_classes, std::uint64_t seed)
{
    Rng rng(derive_seed(seed, kHeadInitStream));
    mlp_ = Mlp(params_, "head.mlp", in, hidden, num_classes, rng);
}

Matrix FeatureClassifier::predict_proba(const Matrix &features) const
{
    ad::Tape tape;
    return softmax_rows(mlp_(tape, tape.constant(features)).value());
}

Matrix MvaePipeline::predict_proba(const Dataset &dataset) const
{
    return head_.predict_proba(model_.fused_means(dataset));
}

MvaeResult mvae_pipeline(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                         const TrainConfig &train_config, const MvaeConfig &mvae_config)
{
    ModelConfig cfg = model_config;
    cfg.gamma = 0.0;
    cfg.alpha = 0.0;
    MultiViewModel model(train_set.schema, cfg);
    // Stage 1 has no label signal to select on; it runs its full budget.
    TrainConfig stage1_cfg = train_config;
    stage1_cfg.selection_metric = SelectionMetric::none;
    stage1_cfg.patience = std::max(1, train_config.patience);
    TrainHistory stage1 = train(model, train_set, nullptr, stage1_cfg);

    const std::uint64_t before = model.parameters().fingerprint();
    const Dataset labeled = train_set.labeled_only();
    if (labeled.samples.empty())
        throw std::invalid_argument("mvae: no labeled training samples for the downstream classifier");
    const Matrix features = model.fused_means(labeled);
    const std::vector<int> labels = labels_of(labeled);
    Matrix val_features;
    std::vector<int> val_labels;
    if (val_set) {
        const Dataset val_labeled = val_set->labeled_only();
        val_features = model.fused_means(val_labeled);
        val_labels = labels_of(val_labeled);
    }

    FeatureClassifier head(cfg.latent_dim, mvae_config.head_hidden, train_set.schema.num_classes, cfg.seed);
    const TrainConfig head_cfg = step_matched(train_config, train_set.samples.size(), labeled.samples.size());
    const SelectionMetric metric = resolve_metric(head_cfg.selection_metric, train_set.schema.num_classes);
    const bool selecting = val_set != nullptr && metric != SelectionMetric::none && !val_labels.empty();
    EarlyStopper stopper(metric, head_cfg.patience);
    auto optimizer = make_optimizer(head_cfg.optimizer, head_cfg.learning_rate);
    long step = 0;
    int n_evals = 0;
    for (int epoch = 0; epoch < head_cfg.max_epochs; ++epoch) {
        bool done = false;
        for (const auto &indices : make_batches(labeled.samples.size(), head_cfg.batch_size, head_cfg.seed, epoch)) {
            Matrix x(static_cast<Eigen::Index>(indices.size()), features.cols());
            std::vector<int> y;
            for (std::size_t k = 0; k < indices.size(); ++k) {
                x.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(indices[k]));
                y.push_back(labels[indices[k]]);
            }
            ad::Tape tape;
            head.parameters().zero_grad();
            ad::Var l = head.logits(tape, tape.constant(std::move(x)));
            ad::Var ce = ad::mean(ad::sub(ad::logsumexp_rows(l), ad::pick(l, y)));
            tape.backward(ce);
            optimizer->step(head.parameters());
            ++step;
            if (head_cfg.max_steps > 0 && step >= head_cfg.max_steps) {
                done = true;
                break;
            }
        }
        const bool eval_now =
            selecting && ((epoch + 1) % head_cfg.eval_every == 0 || done || epoch + 1 == head_cfg.max_epochs);
        if (eval_now && stopper.update(score_matrix(head.predict_proba(val_features), val_labels), n_evals++,
                                       head.parameters()))
            break;
        if (done)
            break;
    }
    if (selecting && !stopper.snapshot_values.empty())
        restore(head.parameters(), stopper.snapshot_values);
    const std::uint64_t after = model.parameters().fingerprint();
    return MvaeResult{MvaePipeline(std::move(model), std::move(head)), std::move(stage1), before, after};
}

LossOptions deepimv_style_options(const ModelConfig &config)
{
    LossOptions o = LossOptions::from(config);
    o.include_unsup = false;
    o.gamma = 1.0;
    o.alpha = 0.0;
    return o;
}

ModelResult deepimv_style_train(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                                const TrainConfig &train_config)
{
    const Dataset labeled = train_set.labeled_only();
    if (labeled.samples.empty())
        throw std::invalid_argument("deepimv_style: no labeled training samples");
    MultiViewModel model(train_set.schema, model_config);
    const TrainConfig cfg = step_matched(train_config, train_set.samples.size(), labeled.samples.size());
    TrainHistory history = train(model, labeled, val_set, cfg, deepimv_style_options(model_config));
    return {std::move(model), std::move(history)};
}

ModelResult ours_train(const Dataset &train_set, const Dataset *val_set, const ModelConfig &model_config,
                       const TrainConfig &train_config)
{
    MultiViewModel model(train_set.schema, model_config);
    TrainHistory history = train(model, train_set, val_set, train_config);
    return {std::move(model), std::move(history)};
}

ModelResult ours_no_cvmi_train(const Dataset &train_set, const Dataset *val_set, ModelConfig model_config,
                               const TrainConfig &train_config)
{
    model_config.alpha = 0.0;
    return ours_train(train_set, val_set, model_config, train_config);
}

TrainConfig step_matched(const TrainConfig &config, std::size_t n_full, std::size_t n_subset)
{
    TrainConfig out = config;
    if (n_subset == 0 || n_subset >= n_full)
        return out;
    const auto b = static_cast<std::size_t>(config.batch_size);
    const std::size_t full_batches = (n_full + b - 1) / b;
    const std::size_t sub_batches = (n_subset + b - 1) / b;
    const int ratio = static_cast<int>((full_batches + sub_batches - 1) / sub_batches);
    out.max_epochs = config.max_epochs * ratio;
    out.eval_every = config.eval_every * ratio;
    return out;
}

MethodRun run_method(BaselineKind kind, const Dataset &train_set, const Dataset *val_set,
                     const ModelConfig &model_config, const TrainConfig &train_config, const MvaeConfig &mvae_config)
{
    MethodRun run;
    run.kind = kind;
    switch (kind) {
    case BaselineKind::base:
        run.classifier = std::make_unique<BaseModel>(base_train(train_set, val_set, model_config, train_config));
        break;
    case BaselineKind::mvae: {
        MvaeResult r = mvae_pipeline(train_set, val_set, model_config, train_config, mvae_config);
        run.history = std::move(r.stage1);
        auto p = std::make_unique<MvaePipeline>(std::move(r.pipeline));
        run.generative = &p->model();
        run.classifier = std::move(p);
        break;
    }
    case BaselineKind::deepimv_style:
    case BaselineKind::ours_no_cvmi:
    case BaselineKind::ours: {
        ModelResult r = kind == BaselineKind::deepimv_style ? deepimv_style_train(train_set, val_set, model_config, train_config)
                        : kind == BaselineKind::ours_no_cvmi ? ours_no_cvmi_train(train_set, val_set, model_config, train_config)
                                                             : ours_train(train_set, val_set, model_config, train_config);
        run.history = std::move(r.history);
        auto p = std::make_unique<OwnedModel>(std::move(r.model));
        run.generative = &p->model();
        run.classifier = std::move(p);
        break;
    }
    }
    return run;
}

} // namespace mvsemi
