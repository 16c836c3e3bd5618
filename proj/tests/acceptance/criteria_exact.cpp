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

#include "criteria.hpp"

#include "mvsemi/dataset_io.hpp"
#include "mvsemi/experiment.hpp"
#include "mvsemi/gaussian.hpp"
#include "mvsemi/losses.hpp"
#include "mvsemi/metrics.hpp"
#include "mvsemi_cli/commands.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace mvsemi::acceptance {
namespace {

namespace fs = std::filesystem;

// Criterion 1
constexpr int kPoeSets = 500;
constexpr double kPoeTolerance = 1e-6;
// Criterion 2
constexpr int kKlDistributions = 100;
constexpr long kKlSamples = 1'000'000;
constexpr double kKlStandardErrors = 4.0;
// Criterion 3
constexpr int kGradientInstances = 20;
constexpr double kFiniteDifferenceStep = 1e-4;
constexpr double kGradientTolerance = 1e-4;
// Criterion 4
constexpr int kInfoNceBatches = 1000;
constexpr double kInfoNceTolerance = 1e-9;
// Criterion 5
constexpr int kAurocInstances = 1000;
// Criterion 6
constexpr int kMaskingBatches = 50;
// Criterion 11
constexpr long kDeterminismSteps = 200;
// Criterion 12
constexpr double kDropRateTolerance = 0.02;
constexpr std::size_t kMinDropSlots = 10'000;

double uniform(Rng &rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

DiagGaussian random_scalar_expert(Rng &rng)
{
    return DiagGaussian(Vector::Constant(1, uniform(rng, -3, 3)), Vector::Constant(1, std::log(uniform(rng, 0.1, 5))));
}

Verdict poe_correctness()
{
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < kPoeSets; ++i) {
        std::vector<DiagGaussian> experts;
        const int k = uniform_index(rng, 5);
        for (int e = 0; e < k; ++e)
            experts.push_back(random_scalar_expert(rng));
        const DiagGaussian fused = poe_fuse(experts, standard_prior(1));
        const auto grid = oracle::poe_grid(experts, standard_prior(1), -25, 25, 50001);
        worst = std::max({worst, std::abs(fused.mean()(0) - grid.mean), std::abs(fused.variance()(0) - grid.variance)});
    }
    return {worst <= kPoeTolerance, fmt::format("{} expert sets, max moment error {:.2e} (tolerance {:.0e})", kPoeSets,
                                                worst, kPoeTolerance)};
}

Verdict kl_correctness()
{
    Rng rng(102);
    double worst = 0.0;
    for (int i = 0; i < kKlDistributions; ++i) {
        const int dim = 1 + uniform_index(rng, 3);
        Vector mean(dim), log_variance(dim);
        for (int d = 0; d < dim; ++d) {
            mean(d) = uniform(rng, -3, 3);
            log_variance(d) = uniform(rng, -3, 3);
        }
        const DiagGaussian q(mean, log_variance);
        const auto est = oracle::kl_mc(q, standard_prior(dim), kKlSamples, 1000 + static_cast<std::uint64_t>(i));
        worst = std::max(worst, std::abs(kl_to_standard(q) - est.value) / est.standard_error);
    }
    return {worst <= kKlStandardErrors,
            fmt::format("{} distributions at {} samples, max deviation {:.2f} standard errors (limit {:.0f})",
                        kKlDistributions, kKlSamples, worst, kKlStandardErrors)};
}

struct ToyInstance {
    DatasetSchema schema;
    ModelConfig config;
    Dataset data;
};

ToyInstance random_toy(Rng &rng, int n, double drop)
{
    ToyInstance t;
    const int views = 2 + uniform_index(rng, 3);
    t.schema.num_views = views;
    t.schema.num_classes = 2 + uniform_index(rng, 2);
    for (int v = 0; v < views; ++v) {
        t.schema.view_shapes.push_back(ViewShape::flat(2 + uniform_index(rng, 4)));
        t.schema.view_likelihood.push_back(uniform01(rng) < 0.3 ? ViewLikelihood::bernoulli
                                                                : ViewLikelihood::gaussian_unit_variance);
    }
    t.config.latent_dim = 3;
    t.config.encoder_hidden = {5};
    t.config.decoder_hidden = {4};
    t.config.predictor_hidden = {4};
    t.config.per_view_kl_in_unsup = uniform01(rng) < 0.5;
    t.config.seed = rng();
    t.data = testing::random_dataset(t.schema, n, rng(), drop, 0.4);
    return t;
}

/// Contrastive term between views 0 and 1 on their aligned rows, if any.
std::optional<ad::Var> first_pair_infonce(const Batch &b, const ForwardPass &fp)
{
    std::vector<int> rows_a, rows_b;
    const auto &pa = b.present_rows[0];
    const auto &pb = b.present_rows[1];
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const auto it = std::find(pb.begin(), pb.end(), pa[i]);
        if (it != pb.end()) {
            rows_a.push_back(static_cast<int>(i));
            rows_b.push_back(static_cast<int>(it - pb.begin()));
        }
    }
    if (rows_a.size() < 2)
        return std::nullopt;
    return infonce_pair(ad::gather_rows(fp.view_z[0], rows_a), ad::gather_rows(fp.view_z[1], rows_b));
}

Verdict gradient_correctness()
{
    Rng rng(103);
    std::map<std::string, double> worst;
    int infonce_checked = 0;
    for (int i = 0; i < kGradientInstances; ++i) {
        ToyInstance t = random_toy(rng, 4, 0.3);
        MultiViewModel model(t.schema, t.config);
        const Batch batch = Batch::from_dataset(t.data, testing::all_indices(t.data));
        const LatentNoise noise = LatentNoise::draw(batch, t.config.latent_dim, rng);
        LossOptions o = LossOptions::from(t.config);
        o.alpha = uniform(rng, 0.1, 10);
        o.gamma = uniform(rng, 0.1, 10);
        using Term = std::function<ad::Var(ad::Tape &, const ForwardPass &)>;
        std::vector<std::pair<std::string, Term>> terms{
            {"supervised", [&](ad::Tape &tp, const ForwardPass &fp) { return supervised_ib_loss(model, tp, batch, fp, o); }},
            {"unsupervised",
             [&](ad::Tape &tp, const ForwardPass &fp) { return unsupervised_elbo_loss(model, tp, batch, fp, o); }},
            {"cvmi",
             [&](ad::Tape &tp, const ForwardPass &fp) { return cvmi_loss(tp, fp.view_z, batch.present_rows, o.temperature); }},
            {"total", [&](ad::Tape &tp, const ForwardPass &fp) { return total_loss(model, tp, batch, fp, o).total; }},
        };
        {
            ad::Tape probe;
            if (first_pair_infonce(batch, model.forward(probe, batch, noise))) {
                ++infonce_checked;
                terms.emplace_back("infonce", [&](ad::Tape &, const ForwardPass &fp) {
                    return *first_pair_infonce(batch, fp);
                });
            }
        }
        for (const auto &[name, term] : terms) {
            const auto check = testing::check_model_gradient(model, batch, noise, term, kFiniteDifferenceStep);
            worst[name] = std::max(worst[name], check.worst);
        }
    }
    bool pass = infonce_checked > 0;
    std::string detail = fmt::format("{} instances ({} with an aligned pair); max relative error:", kGradientInstances,
                                     infonce_checked);
    for (const auto &[name, err] : worst) {
        pass = pass && err < kGradientTolerance;
        detail += fmt::format(" {} {:.1e};", name, err);
    }
    detail += fmt::format(" tolerance {:.0e}", kGradientTolerance);
    return {pass, detail};
}

Verdict infonce_bounds()
{
    Rng rng(104);
    int bound_violations = 0;
    double identity_err = 0.0, rotation_err = 0.0, scale_err = 0.0;
    for (int i = 0; i < kInfoNceBatches; ++i) {
        const int m = 2 + uniform_index(rng, 63);
        const int d = 1 + uniform_index(rng, 16);
        const Matrix a = standard_normal(rng, m, d), b = standard_normal(rng, m, d);
        const double v = *infonce_pair(a, b);
        const double lower = -1.0 - std::log(std::exp(-1.0) + (m - 1) * std::numbers::e);
        bound_violations += (v < 0.0 && v >= lower) ? 0 : 1;

        const Matrix same = Matrix::Constant(m, d, uniform(rng, 0.5, 2.0));
        identity_err = std::max(identity_err, std::abs(*infonce_pair(same, same) - std::log(1.0 / m)));

        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(standard_normal(rng, d, d)));
        const Matrix q = qr.householderQ();
        rotation_err = std::max(rotation_err, std::abs(*infonce_pair(a * q, b * q) - v));

        Matrix sa = a, sb = b;
        for (int r = 0; r < m; ++r) {
            sa.row(r) *= std::exp(uniform(rng, -3, 3));
            sb.row(r) *= std::exp(uniform(rng, -3, 3));
        }
        scale_err = std::max(scale_err, std::abs(*infonce_pair(sa, sb) - v));
    }
    const bool pass = bound_violations == 0 && identity_err <= kInfoNceTolerance && rotation_err <= kInfoNceTolerance &&
                      scale_err <= kInfoNceTolerance;
    return {pass, fmt::format("{} batches: {} bound violations; identical-affinity error {:.1e}, rotation {:.1e}, "
                              "rescaling {:.1e} (tolerance {:.0e})",
                              kInfoNceBatches, bound_violations, identity_err, rotation_err, scale_err,
                              kInfoNceTolerance)};
}

Verdict auroc_correctness()
{
    Rng rng(105);
    int mismatches = 0, with_ties = 0;
    for (int i = 0; i < kAurocInstances; ++i) {
        const int n = 2 + uniform_index(rng, 199);
        const int levels = uniform01(rng) < 0.5 ? 1 + uniform_index(rng, 10) : 1'000'000;
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            s[static_cast<std::size_t>(k)] = uniform_index(rng, levels) / static_cast<double>(levels);
            y[static_cast<std::size_t>(k)] = uniform_index(rng, 2);
        }
        y[static_cast<std::size_t>(uniform_index(rng, n))] = 0;
        int pos = uniform_index(rng, n);
        while (y[static_cast<std::size_t>(pos)] == 0 && std::count(y.begin(), y.end(), 0) == 1)
            pos = uniform_index(rng, n);
        y[static_cast<std::size_t>(pos)] = 1;
        if (std::count(y.begin(), y.end(), 0) == 0)
            y[static_cast<std::size_t>((pos + 1) % n)] = 0;
        std::set<double> distinct(s.begin(), s.end());
        with_ties += distinct.size() < s.size() ? 1 : 0;
        mismatches += auroc_binary(s, y) == oracle::auroc_pairs(s, y) ? 0 : 1;
    }
    return {mismatches == 0 && with_ties > 0,
            fmt::format("{} instances ({} with ties), {} not bitwise equal to the pairwise oracle", kAurocInstances,
                        with_ties, mismatches)};
}

bool belongs_to_view(const std::string &name, int v)
{
    return name.rfind(MultiViewModel::encoder_prefix(v), 0) == 0 || name.rfind(MultiViewModel::decoder_prefix(v), 0) == 0;
}

/// Largest |gradient| on encoder/decoder parameters of `view` after one
/// backward pass of the total loss over `rows` of the dataset.
double absent_view_gradient(MultiViewModel &model, const Dataset &d, const std::vector<std::size_t> &rows, int view,
                            Rng &rng)
{
    const Batch batch = Batch::from_dataset(d, rows);
    const LatentNoise noise = LatentNoise::draw(batch, model.config().latent_dim, rng);
    model.parameters().zero_grad();
    ad::Tape tape;
    const ForwardPass fp = model.forward(tape, batch, noise);
    tape.backward(total_loss(model, tape, batch, fp, LossOptions::from(model.config())).total);
    double worst = 0.0;
    for (const auto *p : model.parameters().all())
        if (belongs_to_view(p->name, view))
            worst = std::max(worst, p->grad.cwiseAbs().maxCoeff());
    return worst;
}

Verdict masking_invariant()
{
    Rng rng(106);
    double worst = 0.0;
    int checks = 0;
    for (int i = 0; i < kMaskingBatches; ++i) {
        ToyInstance t = random_toy(rng, 8, 0.5);
        MultiViewModel model(t.schema, t.config);
        for (int v = 0; v < t.schema.num_views; ++v) {
            std::vector<std::size_t> lacking;
            for (std::size_t s = 0; s < t.data.size(); ++s)
                if (!t.data.samples[s].present(v))
                    lacking.push_back(s);
            for (auto s : lacking) {
                worst = std::max(worst, absent_view_gradient(model, t.data, {s}, v, rng));
                ++checks;
            }
            if (lacking.size() >= 2) {
                worst = std::max(worst, absent_view_gradient(model, t.data, lacking, v, rng));
                ++checks;
            }
        }
    }
    return {worst == 0.0 && checks > 0,
            fmt::format("{} batches, {} per-sample and joint checks, max |gradient| on absent-view parameters {}",
                        kMaskingBatches, checks, worst)};
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism()
{
    setenv("MVSEMI_NUM_WORKERS", "1", 1);
    const fs::path root = fs::temp_directory_path() / "mvsemi_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const nlohmann::json config = {{"data", {{"generator", {{"kind", "tabular"}}}}},
                                   {"train", {{"max_steps", kDeterminismSteps}}},
                                   {"method", "ours"},
                                   {"drop_rate", 0.5},
                                   {"keep_fraction", 0.05},
                                   {"seeds", {0}}};
    std::ofstream(root / "gen.json") << config.dump(2);
    std::vector<std::string> outputs;
    std::ostringstream sink;
    for (const char *run : {"a", "b"}) {
        const fs::path dir = root / run;
        auto cli = [&](std::vector<std::string> args) {
            args.insert(args.begin(), "mvsemi");
            args.push_back("--quiet");
            if (cli::run(args, sink, sink) != 0)
                throw std::runtime_error("command failed: " + args[1] + ": " + sink.str());
        };
        cli({"gen-data", "--config", (root / "gen.json").string(), "--out", (dir / "data").string()});
        nlohmann::json train_config = config;
        train_config["data"] = {{"dataset_dir", (dir / "data").string()}};
        train_config.erase("drop_rate");
        train_config.erase("keep_fraction");
        std::ofstream(dir / "train.json") << train_config.dump(2);
        cli({"train", "--config", (dir / "train.json").string(), "--out", (dir / "run").string()});
        cli({"eval", "--checkpoint", (dir / "run").string(), "--split", "test", "--out", (dir / "eval").string()});
        outputs.push_back(slurp(dir / "eval" / "metrics.json"));
    }
    const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
    const std::string history = slurp(root / "a" / "run" / "history.jsonl");
    const auto steps = static_cast<std::size_t>(std::count(history.begin(), history.end(), '\n'));
    fs::remove_all(root);
    return {same && steps == static_cast<std::size_t>(kDeterminismSteps),
            fmt::format("gen-data, train ({} steps), eval twice: metrics.json {} ({} bytes)", steps,
                        same ? "byte-identical" : "differs", outputs[0].size())};
}

std::string check_prepared(const std::string &label, const PreparedData &d, double drop_rate, double keep_fraction)
{
    std::string problems;
    auto fail = [&](const std::string &what) { problems += label + ": " + what + "; "; };
    for (const Dataset *ds : {&d.splits.train, &d.splits.val, &d.splits.test, &d.complete.train, &d.complete.val,
                              &d.complete.test}) {
        try {
            ds->validate();
        } catch (const std::exception &e) {
            fail(e.what());
        }
        for (const auto &s : ds->samples)
            if (s.num_present() < 1)
                fail("sample without a present view");
    }
    // The tolerance is stated for at least 10,000 slots, so splits are pooled.
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> pooled;
    for (const auto &stats : d.missingness)
        for (std::size_t v = 0; v < stats.dropped.size(); ++v) {
            pooled[v].first += stats.dropped[v];
            pooled[v].second += stats.eligible[v];
        }
    for (const auto &[v, counts] : pooled) {
        const double rate = static_cast<double>(counts.first) / static_cast<double>(counts.second);
        if (counts.second < kMinDropSlots || std::abs(rate - drop_rate) > kDropRateTolerance)
            fail(fmt::format("view {} drop rate {:.4f} over {} slots", v, rate, counts.second));
    }
    std::map<int, long> per_class, kept;
    for (std::size_t i = 0; i < d.complete.train.size(); ++i) {
        ++per_class[*d.complete.train.samples[i].label];
        if (d.splits.train.samples[i].label)
            ++kept[*d.splits.train.samples[i].label];
    }
    for (const auto &[cls, n] : per_class)
        if (kept[cls] != std::llround(keep_fraction * static_cast<double>(n)))
            fail(fmt::format("class {} kept {} of {}", cls, kept[cls], n));
    return problems;
}

Verdict data_contracts()
{
    const fs::path root = fs::temp_directory_path() / "mvsemi_acceptance_data";
    fs::remove_all(root);
    std::string problems;
    const PreparedData tab = prepare_data(generate(GeneratorConfig::tabular_defaults()), {0.5, 0.05, true, 0});
    problems += check_prepared("tabular", tab, 0.5, 0.05);
    const PreparedData img = prepare_data(generate(GeneratorConfig::glyph_defaults()), {0.5, 0.005, true, 0});
    problems += check_prepared("glyph", img, 0.5, 0.005);

    int round_trips = 0;
    for (const auto &[name, ds] : {std::pair{"tabular", &tab.splits.train}, std::pair{"glyph", &img.splits.train}}) {
        write_dataset_dir(*ds, root / name);
        if (read_dataset_dir(root / name) == *ds)
            ++round_trips;
        else
            problems += std::string(name) + ": directory round trip differs; ";
    }
    std::vector<fs::path> views;
    for (int v = 0; v < tab.splits.train.schema.num_views; ++v) {
        views.push_back(root / fmt::format("csv_view_{}.csv", v));
        write_view_csv(tab.splits.train, v, views.back());
    }
    write_labels_csv(tab.splits.train, root / "csv_labels.csv");
    if (load_tabular_csv(views, root / "csv_labels.csv", tab.splits.train.schema) == tab.splits.train)
        ++round_trips;
    else
        problems += "tabular: CSV round trip differs; ";
    fs::remove_all(root);
    return {problems.empty(), problems.empty()
                                  ? fmt::format("tabular and glyph datasets valid, drop rates within {:.2f}, label "
                                                "counts exact, {} round trips exact",
                                                kDropRateTolerance, round_trips)
                                  : problems};
}

} // namespace

std::vector<Criterion> exact_criteria()
{
    return {
        {1, "PoE matches grid quadrature", 60, poe_correctness},
        {2, "KL matches Monte Carlo", 120, kl_correctness},
        {3, "loss gradients match finite differences", 300, gradient_correctness},
        {4, "InfoNCE bounds and invariances", 600, infonce_bounds},
        {5, "AUROC equals pairwise oracle", 600, auroc_correctness},
        {6, "absent views get zero gradient", 600, masking_invariant},
        {11, "end-to-end determinism", 1800, determinism},
        {12, "data contracts and round trips", 1800, data_contracts},
    };
}

} // namespace mvsemi::acceptance
