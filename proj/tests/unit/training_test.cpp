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

#include "mvsemi/data.hpp"
#include "mvsemi/experiment.hpp"
#include "mvsemi/training.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

namespace mvsemi {
namespace {

ModelConfig small_config()
{
    ModelConfig c;
    c.latent_dim = 4;
    c.encoder_hidden = {16};
    c.decoder_hidden = {16};
    c.predictor_hidden = {8};
    return c;
}

TEST(MakeBatches, PartitionAndDeterminism)
{
    const auto batches = make_batches(1000, 128, 3, 2);
    EXPECT_EQ(batches.size(), 8u);
    EXPECT_EQ(batches.back().size(), 1000u - 7 * 128);
    std::set<std::size_t> seen;
    for (const auto &b : batches)
        for (auto i : b)
            EXPECT_TRUE(seen.insert(i).second);
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_EQ(make_batches(1000, 128, 3, 2), batches);
    EXPECT_NE(make_batches(1000, 128, 3, 3), batches);
}

TEST(MakeBatches, LabeledCountMatchesExpectation)
{
    GeneratorConfig g = GeneratorConfig::tabular_defaults();
    g.n_val = 1;
    g.n_test = 1;
    g.view_dims = {2, 2, 2, 2};
    const Dataset d = reduce_labels(gen_tabular(g).train, 0.2, 1).dataset;
    const auto batches = make_batches(d.size(), 128, 4, 0);
    int total = 0;
    std::size_t rows = 0;
    for (const auto &b : batches) {
        for (auto i : b)
            total += d.samples[i].label ? 1 : 0;
        rows += b.size();
    }
    EXPECT_NEAR(static_cast<double>(total) / static_cast<double>(batches.size()),
                static_cast<double>(rows) / static_cast<double>(batches.size()) * 0.2, 128 * 0.2 * 0.1);
    // Full batches: labeled counts spread like a binomial draw.
    double sum = 0, sq = 0;
    const double n = static_cast<double>(batches.size() - 1);
    for (std::size_t b = 0; b + 1 < batches.size(); ++b) {
        int labeled = 0;
        for (auto i : batches[b])
            labeled += d.samples[i].label ? 1 : 0;
        sum += labeled;
        sq += labeled * labeled;
    }
    const double var = sq / n - (sum / n) * (sum / n);
    EXPECT_GT(var, 0.5 * 128 * 0.2 * 0.8);
    EXPECT_LT(var, 2.0 * 128 * 0.2 * 0.8);
}

TEST(TrainConfig, JsonAndValidation)
{
    TrainConfig c;
    c.max_steps = 200;
    c.selection_metric = SelectionMetric::accuracy;
    c.optimizer = OptimizerKind::plain_sgd;
    const nlohmann::json j = c;
    EXPECT_EQ(j.at("optimizer"), "sgd");
    EXPECT_EQ(j.at("selection_metric"), "accuracy");
    EXPECT_EQ(nlohmann::json(j.get<TrainConfig>()), j);
    TrainConfig bad;
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    nlohmann::json unknown = j;
    unknown["epochs"] = 3;
    EXPECT_THROW(unknown.get<TrainConfig>(), ConfigError);
}

TEST(ResolveMetric, AutomaticDependsOnClassCount)
{
    EXPECT_EQ(resolve_metric(SelectionMetric::automatic, 2), SelectionMetric::auroc);
    EXPECT_EQ(resolve_metric(SelectionMetric::automatic, 10), SelectionMetric::accuracy);
    EXPECT_EQ(resolve_metric(SelectionMetric::none, 2), SelectionMetric::none);
}

TEST(Train, ReconstructionDecreasesWithoutSupervision)
{
    const DatasetSchema schema = testing::flat_schema(2, 6, 2);
    Dataset d = testing::random_dataset(schema, 64, 1, 0.3, 1.0);
    MultiViewModel m(schema, small_config());
    TrainConfig tc;
    tc.batch_size = 16;
    tc.max_steps = 200;
    tc.max_epochs = 1000;
    tc.selection_metric = SelectionMetric::none;
    LossOptions o = LossOptions::from(m.config());
    o.gamma = 0;
    o.alpha = 0;
    const TrainHistory h = train(m, d, nullptr, tc, o);
    ASSERT_EQ(h.steps.size(), 200u);
    auto window = [&](std::size_t from) {
        double s = 0;
        for (std::size_t i = from; i < from + 20; ++i)
            for (double r : h.steps[i].recon)
                s += r;
        return s;
    };
    EXPECT_LT(window(180), window(0));
}

TEST(Train, BitReproducibleHistory)
{
    const DatasetSchema schema = testing::flat_schema(3, 5, 2);
    const Dataset d = testing::random_dataset(schema, 80, 2);
    TrainConfig tc;
    tc.batch_size = 8;
    tc.max_steps = 10;
    tc.selection_metric = SelectionMetric::none;
    MultiViewModel a(schema, small_config()), b(schema, small_config());
    const TrainHistory ha = train(a, d, nullptr, tc);
    const TrainHistory hb = train(b, d, nullptr, tc);
    ASSERT_EQ(ha.steps.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i)
        EXPECT_EQ(ha.steps[i].total, hb.steps[i].total);
    EXPECT_EQ(a.parameters().fingerprint(), b.parameters().fingerprint());
}

TEST(Train, RestoresBestValidationParameters)
{
    const DatasetSchema schema = testing::flat_schema(2, 4, 2);
    const Dataset tr = testing::random_dataset(schema, 60, 3);
    Dataset val = testing::random_dataset(schema, 40, 4, 0.3, 0.0);
    for (auto &s : val.samples)
        s.sample_id += 1000;
    MultiViewModel m(schema, small_config());
    TrainConfig tc;
    tc.batch_size = 16;
    tc.max_epochs = 12;
    tc.patience = 100;
    tc.learning_rate = 0.01;
    std::vector<EvalPoint> seen;
    TrainHooks hooks;
    hooks.on_eval = [&](const EvalPoint &p) { seen.push_back(p); };
    const TrainHistory h = train(m, tr, &val, tc, hooks);
    ASSERT_EQ(h.evals.size(), seen.size());
    ASSERT_GE(h.best_eval, 0);
    double best = -1;
    for (const auto &p : h.evals)
        best = std::max(best, p.metric);
    EXPECT_EQ(h.evals[static_cast<std::size_t>(h.best_eval)].metric, best);
    EXPECT_EQ(score_classifier(m, val).auroc, best);
}

TEST(Train, PatienceStopsEarly)
{
    const DatasetSchema schema = testing::flat_schema(2, 4, 2);
    const Dataset tr = testing::random_dataset(schema, 40, 5);
    Dataset val = testing::random_dataset(schema, 30, 6, 0.3, 0.0);
    for (auto &s : val.samples)
        s.sample_id += 1000;
    MultiViewModel m(schema, small_config());
    TrainConfig tc;
    tc.batch_size = 8;
    tc.max_epochs = 500;
    tc.patience = 2;
    tc.learning_rate = 1e-9;
    const TrainHistory h = train(m, tr, &val, tc);
    EXPECT_TRUE(h.stopped_early);
    EXPECT_LT(h.epochs_run, 500);
}

TEST(Train, NonFiniteLossAbortsWithDiagnostic)
{
    const DatasetSchema schema = testing::flat_schema(2, 4, 2);
    Dataset d = testing::random_dataset(schema, 16, 7, 0.0);
    (*d.samples[3].views[0])[1] = std::numeric_limits<float>::infinity();
    MultiViewModel m(schema, small_config());
    TrainConfig tc;
    tc.batch_size = 16;
    tc.max_steps = 3;
    tc.selection_metric = SelectionMetric::none;
    try {
        train(m, d, nullptr, tc);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError &e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("batch 0"), std::string::npos) << what;
    }
}

TEST(Train, ScarceLabelSmokeOnTabularDefaults)
{
    PreparedData d = prepare_data(generate(GeneratorConfig::tabular_defaults()), {0.0, 0.05, true, 0});
    MultiViewModel m(d.splits.train.schema, ModelConfig{});
    TrainConfig tc;
    tc.max_epochs = 3;
    const TrainHistory h = train(m, d.splits.train, &d.splits.val, tc);
    EXPECT_GE(score_classifier(m, d.splits.val).auroc, 0.65);
    EXPECT_FALSE(h.evals.empty());
}

} // namespace
} // namespace mvsemi
