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

#include "mvsemi/training.hpp"

#include "mvsemi/metrics.hpp"

#include <cmath>
#include <numeric>

namespace mvsemi {

namespace {

constexpr std::uint64_t kBatchStream = 0x6261746368ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

OptimizerKind parse_optimizer(const std::string &s)
{
    if (s == "adam" || s == "adaptive_moment")
        return OptimizerKind::adaptive_moment;
    if (s == "sgd" || s == "plain_sgd")
        return OptimizerKind::plain_sgd;
    throw ConfigError("train.optimizer: expected 'adam' or 'sgd', got '" + s + "'");
}

SelectionMetric parse_metric(const std::string &s)
{
    if (s == "auto")
        return SelectionMetric::automatic;
    if (s == "auroc")
        return SelectionMetric::auroc;
    if (s == "accuracy")
        return SelectionMetric::accuracy;
    if (s == "none")
        return SelectionMetric::none;
    throw ConfigError("train.selection_metric: expected auto, auroc, accuracy or none, got '" + s + "'");
}

} // namespace

std::string to_string(SelectionMetric m)
{
    switch (m) {
    case SelectionMetric::automatic: return "auto";
    case SelectionMetric::auroc: return "auroc";
    case SelectionMetric::accuracy: return "accuracy";
    case SelectionMetric::none: return "none";
    }
    return "auto";
}

std::string to_string(OptimizerKind k)
{
    return k == OptimizerKind::plain_sgd ? "sgd" : "adam";
}

void TrainConfig::validate() const
{
    if (batch_size < 4)
        throw std::invalid_argument("train: batch_size must be at least 4");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("train: learning_rate must be positive");
    if (max_epochs < 1)
        throw std::invalid_argument("train: max_epochs must be at least 1");
    if (max_steps < 0)
        throw std::invalid_argument("train: max_steps must be non-negative");
    if (patience < 1)
        throw std::invalid_argument("train: patience must be at least 1");
    if (eval_every < 1)
        throw std::invalid_argument("train: eval_every must be at least 1");
}

void to_json(nlohmann::json &j, const TrainConfig &c)
{
    j = {{"batch_size", c.batch_size},
         {"max_epochs", c.max_epochs},
         {"max_steps", c.max_steps},
         {"learning_rate", c.learning_rate},
         {"optimizer", to_string(c.optimizer)},
         {"patience", c.patience},
         {"selection_metric", to_string(c.selection_metric)},
         {"eval_every", c.eval_every},
         {"seed", c.seed},
         {"check_finite", c.check_finite}};
}

void from_json(const nlohmann::json &j, TrainConfig &c)
{
    reject_unknown_keys(j,
                        {"batch_size", "max_epochs", "max_steps", "learning_rate", "optimizer", "patience",
                         "selection_metric", "eval_every", "seed", "check_finite"},
                        "train");
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    if (j.contains("optimizer"))
        c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.patience = j.value("patience", c.patience);
    if (j.contains("selection_metric"))
        c.selection_metric = parse_metric(j.at("selection_metric").get<std::string>());
    c.eval_every = j.value("eval_every", c.eval_every);
    c.seed = j.value("seed", c.seed);
    c.check_finite = j.value("check_finite", c.check_finite);
}

void to_json(nlohmann::json &j, const EvalPoint &p)
{
    j = {{"epoch", p.epoch}, {"step", p.step}, {"auroc", p.auroc}, {"accuracy", p.accuracy}, {"metric", p.metric}};
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, std::uint64_t seed, int epoch)
{
    if (n == 0)
        throw std::invalid_argument("make_batches: empty dataset");
    if (batch_size < 1)
        throw std::invalid_argument("make_batches: batch_size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, kBatchStream, static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);
    std::vector<std::vector<std::size_t>> out;
    const auto b = static_cast<std::size_t>(batch_size);
    for (std::size_t start = 0; start < n; start += b)
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + b)));
    return out;
}

SelectionMetric resolve_metric(SelectionMetric m, int num_classes)
{
    if (m != SelectionMetric::automatic)
        return m;
    return num_classes == 2 ? SelectionMetric::auroc : SelectionMetric::accuracy;
}

EvalPoint score_classifier(const Classifier &classifier, const Dataset &dataset)
{
    const Dataset labeled = dataset.labeled_only();
    if (labeled.samples.empty())
        throw std::invalid_argument("evaluation: dataset has no labeled samples");
    std::vector<int> labels;
    for (const auto &s : labeled.samples)
        labels.push_back(*s.label);
    const Matrix proba = classifier.predict_proba(labeled);
    EvalPoint p;
    p.auroc = auroc(proba, labels).value;
    p.accuracy = accuracy(proba, labels);
    return p;
}

TrainHistory train(MultiViewModel &model, const Dataset &train_set, const Dataset *val_set,
                   const TrainConfig &config, const TrainHooks &hooks)
{
    return train(model, train_set, val_set, config, LossOptions::from(model.config()), hooks);
}

TrainHistory train(MultiViewModel &model, const Dataset &train_set, const Dataset *val_set,
                   const TrainConfig &config, const LossOptions &options, const TrainHooks &hooks)
{
    config.validate();
    if (!(train_set.schema == model.schema()))
        throw std::invalid_argument("train: dataset schema differs from model schema");
    if (val_set && !(val_set->schema == model.schema()))
        throw std::invalid_argument("train: validation schema differs from model schema");
    if (train_set.samples.empty())
        throw std::invalid_argument("train: empty training set");

    const SelectionMetric metric = resolve_metric(config.selection_metric, model.schema().num_classes);
    const bool selecting = val_set != nullptr && metric != SelectionMetric::none;
    auto optimizer = make_optimizer(config.optimizer, config.learning_rate);
    ParameterSet &params = model.parameters();

    TrainHistory history;
    std::vector<Matrix> best;
    double best_metric = -1.0;
    int since_best = 0;
    long step = 0;
    bool done = false;

    for (int epoch = 0; epoch < config.max_epochs && !done; ++epoch) {
        const auto batches = make_batches(train_set.samples.size(), config.batch_size, config.seed, epoch);
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const Batch batch = Batch::from_dataset(train_set, batches[bi]);
            Rng rng(derive_seed(config.seed, kNoiseStream, static_cast<std::uint64_t>(step)));
            const LatentNoise noise = LatentNoise::draw(batch, model.config().latent_dim, rng);

            ad::Tape tape;
            params.zero_grad();
            std::optional<LossTerms> evaluated;
            try {
                const ForwardPass fp = model.forward(tape, batch, noise);
                evaluated = total_loss(model, tape, batch, fp, options);
            } catch (const std::invalid_argument &e) {
                throw TrainingError("loss evaluation failed at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(bi) + " (first sample id " +
                                    std::to_string(batch.sample_ids.front()) + "): " + e.what());
            }
            LossTerms &terms = *evaluated;
            terms.breakdown.step = step;
            if (!std::isfinite(terms.breakdown.total)) {
                nlohmann::json diag = terms.breakdown;
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(bi) + " (first sample id " +
                                    std::to_string(batch.sample_ids.front()) + "): " + diag.dump());
            }
            tape.backward(terms.total);
            optimizer->step(params);
            if (config.check_finite && !params.all_finite()) {
                nlohmann::json diag = terms.breakdown;
                throw TrainingError("non-finite parameters after step " + std::to_string(step) + ", epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(bi) + ": " + diag.dump());
            }
            if (hooks.on_step)
                hooks.on_step(terms.breakdown);
            history.steps.push_back(std::move(terms.breakdown));
            ++step;
            if (config.max_steps > 0 && step >= config.max_steps) {
                done = true;
                break;
            }
        }
        history.epochs_run = epoch + 1;

        const bool eval_now = val_set != nullptr && ((epoch + 1) % config.eval_every == 0 || done ||
                                                     epoch + 1 == config.max_epochs);
        if (!eval_now)
            continue;
        EvalPoint p = score_classifier(model, *val_set);
        p.epoch = epoch;
        p.step = step;
        p.metric = metric == SelectionMetric::accuracy ? p.accuracy : p.auroc;
        history.evals.push_back(p);
        if (hooks.on_eval)
            hooks.on_eval(p);
        if (!selecting)
            continue;
        if (p.metric > best_metric) {
            best_metric = p.metric;
            best = snapshot(params);
            history.best_eval = static_cast<int>(history.evals.size()) - 1;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            history.stopped_early = true;
            break;
        }
    }
    if (selecting && !best.empty())
        restore(params, best);
    return history;
}

} // namespace mvsemi
