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

#include "mvsemi/gaussian.hpp"
#include "mvsemi/losses.hpp"
#include "mvsemi/model.hpp"
#include "mvsemi/training.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace mvsemi;

void BM_PoeFuse(benchmark::State &state)
{
    const int experts = static_cast<int>(state.range(0));
    Rng rng(7);
    std::vector<DiagGaussian> list;
    for (int i = 0; i < experts; ++i)
        list.emplace_back(standard_normal(rng, 32, 1).col(0), standard_normal(rng, 32, 1).col(0));
    const DiagGaussian prior = standard_prior(32);
    for (auto _ : state)
        benchmark::DoNotOptimize(poe_fuse(list, prior));
}
BENCHMARK(BM_PoeFuse)->Arg(1)->Arg(4)->Arg(8);

void BM_InfoNce(benchmark::State &state)
{
    const auto m = state.range(0);
    Rng rng(11);
    const Matrix a = standard_normal(rng, m, 32);
    const Matrix b = standard_normal(rng, m, 32);
    for (auto _ : state)
        benchmark::DoNotOptimize(infonce_pair(a, b));
}
BENCHMARK(BM_InfoNce)->Arg(32)->Arg(128);

void BM_TrainStep(benchmark::State &state)
{
    GeneratorConfig gc = GeneratorConfig::tabular_defaults();
    gc.n_train = 256;
    gc.n_val = 4;
    gc.n_test = 4;
    const DatasetTriplet data = gen_tabular(gc);
    const Dataset train_set = inject_missingness(data.train, 0.5, 3);
    MultiViewModel model(train_set.schema, ModelConfig{});
    auto opt = make_optimizer(OptimizerKind::adaptive_moment, 1e-3);
    const auto batches = make_batches(train_set.size(), static_cast<int>(state.range(0)), 0, 0);
    const Batch batch = Batch::from_dataset(train_set, batches.front());
    const LossOptions options = LossOptions::from(model.config());
    Rng rng(5);
    for (auto _ : state) {
        const LatentNoise noise = LatentNoise::draw(batch, model.config().latent_dim, rng);
        ad::Tape tape;
        model.parameters().zero_grad();
        const ForwardPass fp = model.forward(tape, batch, noise);
        LossTerms t = total_loss(model, tape, batch, fp, options);
        tape.backward(t.total);
        opt->step(model.parameters());
    }
}
BENCHMARK(BM_TrainStep)->Arg(128)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
