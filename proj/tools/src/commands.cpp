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

#include "mvsemi_cli/commands.hpp"

#include "mvsemi/baselines.hpp"
#include "mvsemi/checkpoint.hpp"
#include "mvsemi/dataset_io.hpp"
#include "mvsemi/evaluation.hpp"
#include "mvsemi/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace mvsemi::cli {

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
};

class Log {
  public:
    Log(std::ostream &err, bool quiet) : err_(err), quiet_(quiet) {}
    void operator()(const std::string &msg) const
    {
        if (!quiet_)
            err_ << msg << '\n';
    }

  private:
    std::ostream &err_;
    bool quiet_;
};

void write_json(const fs::path &path, const nlohmann::json &j)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    return nlohmann::json::parse(in);
}

fs::path require_out(const Globals &g)
{
    if (g.out.empty())
        throw ConfigError("--out: an output directory is required");
    return g.out;
}

ExperimentConfig load_config(const Globals &g)
{
    if (g.config.empty())
        throw ConfigError("--config: a configuration file is required");
    ExperimentConfig c = load_experiment_config(g.config);
    if (g.seed) {
        c.seeds = {*g.seed};
        if (c.generator)
            c.generator->seed = *g.seed;
    }
    return c;
}

nlohmann::json data_provenance(const ExperimentConfig &c)
{
    nlohmann::json d = {{"experiment", c}};
    if (c.dataset_dir) {
        nlohmann::json sums = nlohmann::json::object();
        for (const char *split : {"train", "val", "test"})
            sums[split] = read_manifest(*c.dataset_dir / split).at("checksums");
        d["checksums"] = sums;
    }
    return d;
}

MetricsReport report_context(const ExperimentConfig &c, BaselineKind method, const ModelConfig &m, std::uint64_t seed)
{
    MetricsReport r;
    r.method = to_string(method);
    r.seed = seed;
    r.alpha = method == BaselineKind::ours ? m.alpha : 0.0;
    r.gamma = method == BaselineKind::mvae ? 0.0 : (method == BaselineKind::deepimv_style ? 1.0 : m.gamma);
    r.beta = m.beta;
    r.keep_fraction = c.keep_fraction;
    r.drop_rate = c.drop_rate;
    return r;
}

int cmd_gen_data(const Globals &g, const std::string &kind, std::optional<double> drop_rate,
                 std::optional<double> keep_fraction, const Log &log)
{
    ExperimentConfig c;
    if (!g.config.empty()) {
        c = load_config(g);
    } else {
        c.generator = kind == "glyph" ? GeneratorConfig::glyph_defaults() : GeneratorConfig::tabular_defaults();
        if (g.seed)
            c.generator->seed = *g.seed;
    }
    if (!c.generator)
        throw ConfigError("gen-data: the configuration must use a 'generator' data source");
    if (!kind.empty() && !g.config.empty()) {
        const bool glyph = c.generator->kind == GeneratorKind::glyph_image;
        if ((kind == "glyph") != glyph)
            throw ConfigError("--kind: conflicts with data.generator.kind in the configuration");
    }
    if (!kind.empty() && kind != "glyph" && kind != "tabular")
        throw ConfigError("--kind: expected 'tabular' or 'glyph'");
    if (drop_rate)
        c.drop_rate = *drop_rate;
    if (keep_fraction)
        c.keep_fraction = *keep_fraction;
    c.validate();
    const fs::path out = require_out(g);
    log(fmt::format("generating {} data (seed {})", to_string(c.generator->kind), c.generator->seed));
    const PreparedData data = load_experiment_data(c);
    nlohmann::json extra = {{"generator", *c.generator},
                            {"seed", c.generator->seed},
                            {"drop_rate", c.drop_rate},
                            {"keep_fraction", c.keep_fraction},
                            {"standardize", c.standardize}};
    write_prepared_data(data, out, extra);
    write_json(out / "experiment.json", c);
    log(fmt::format("wrote {} / {} / {} samples to {}", data.splits.train.size(), data.splits.val.size(),
                    data.splits.test.size(), out.string()));
    return kExitOk;
}

int cmd_train(const Globals &g, const std::string &method_override, const Log &log)
{
    ExperimentConfig c = load_config(g);
    if (!method_override.empty())
        c.method = parse_baseline_kind(method_override);
    const fs::path out = require_out(g);
    const std::uint64_t seed = c.seeds.front();
    ModelConfig mc = c.model;
    TrainConfig tc = c.train;
    mc.seed = seed;
    tc.seed = seed;

    const PreparedData data = load_experiment_data(c);
    log(fmt::format("training {} on {} samples ({} labeled)", to_string(c.method), data.splits.train.size(),
                    data.splits.train.labeled_count()));

    fs::create_directories(out);
    std::ofstream history(out / "history.jsonl");
    TrainHooks hooks;
    hooks.on_step = [&](const LossBreakdown &b) { history << nlohmann::json(b).dump() << '\n'; };
    hooks.on_eval = [&](const EvalPoint &p) {
        log(fmt::format("epoch {:>4} step {:>6} val auroc {:.4f} accuracy {:.4f}", p.epoch, p.step, p.auroc,
                        p.accuracy));
    };

    MethodRun run;
    run.kind = c.method;
    if (c.method == BaselineKind::base || c.method == BaselineKind::mvae) {
        run = run_method(c.method, data.splits.train, &data.splits.val, mc, tc);
        for (const auto &b : run.history.steps)
            history << nlohmann::json(b).dump() << '\n';
    } else {
        ModelConfig m = mc;
        if (c.method == BaselineKind::ours_no_cvmi)
            m.alpha = 0.0;
        MultiViewModel model(data.splits.train.schema, m);
        if (c.method == BaselineKind::deepimv_style) {
            const Dataset labeled = data.splits.train.labeled_only();
            run.history = train(model, labeled, &data.splits.val,
                                step_matched(tc, data.splits.train.size(), labeled.size()),
                                deepimv_style_options(m), hooks);
        } else {
            run.history = train(model, data.splits.train, &data.splits.val, tc, hooks);
        }
        auto owned = std::make_unique<OwnedModel>(std::move(model));
        run.generative = &owned->model();
        run.classifier = std::move(owned);
    }
    history.close();

    const MetricsReport val = evaluate_prediction(*run.classifier, data.splits.val, report_context(c, c.method, mc, seed));
    CheckpointManifest manifest;
    manifest.schema = data.splits.train.schema;
    manifest.model = mc;
    manifest.train = tc;
    manifest.seed = seed;
    manifest.metrics = {{"val", val}};
    manifest.data = data_provenance(c);
    save_checkpoint(out, run, manifest);
    write_json(out / "metrics.json", val);
    write_json(out / "config.json", c);
    log(fmt::format("validation auroc {:.4f} accuracy {:.4f}; checkpoint in {}", val.auroc, val.accuracy,
                    out.string()));
    return kExitOk;
}

PreparedData data_for_checkpoint(const CheckpointManifest &m, const std::string &data_dir)
{
    if (!data_dir.empty())
        return read_prepared_data(data_dir);
    if (!m.data.contains("experiment"))
        throw ConfigError("--data: the checkpoint does not record its data source");
    return load_experiment_data(m.data.at("experiment").get<ExperimentConfig>());
}

int cmd_eval(const Globals &g, const std::string &checkpoint, const std::string &split, const std::string &data_dir,
             const Log &log)
{
    const SplitTag tag = parse_split_tag(split);
    const fs::path out = require_out(g);
    LoadedCheckpoint lc = load_checkpoint(checkpoint);
    const PreparedData data = data_for_checkpoint(lc.manifest, data_dir);
    const Dataset &ds = tag == SplitTag::train ? data.splits.train : tag == SplitTag::val ? data.splits.val
                                                                                           : data.splits.test;
    ExperimentConfig c;
    if (lc.manifest.data.contains("experiment"))
        c = lc.manifest.data.at("experiment").get<ExperimentConfig>();
    const MetricsReport r = evaluate_prediction(*lc.run.classifier, ds,
                                                report_context(c, lc.manifest.method, lc.manifest.model, lc.manifest.seed));
    write_json(out / "metrics.json", r);
    log(fmt::format("{} {}: auroc {:.4f} accuracy {:.4f} (n = {})", to_string(lc.manifest.method), split, r.auroc,
                    r.accuracy, r.n_samples));
    return kExitOk;
}

int cmd_impute(const Globals &g, const std::string &checkpoint, const std::string &data_dir, const std::string &mode,
               const Log &log)
{
    const fs::path out = require_out(g);
    if (data_dir.empty())
        throw ConfigError("--data: a dataset split directory is required");
    ImputeMode im = ImputeMode::mean;
    if (mode == "sample")
        im = ImputeMode::sample;
    else if (mode != "mean")
        throw ConfigError("--mode: expected 'mean' or 'sample'");
    LoadedCheckpoint lc = load_checkpoint(checkpoint);
    if (!lc.run.generative)
        throw ConfigError("impute: method '" + to_string(lc.manifest.method) + "' has no generative model");
    const Dataset input = read_dataset_dir(data_dir);
    const Dataset imputed = lc.run.generative->impute_dataset(input, im, g.seed.value_or(lc.manifest.seed));
    nlohmann::json extra = read_manifest(data_dir);
    nlohmann::json ex = {{"imputed_from", read_manifest(data_dir).value("checksums", nlohmann::json::object())},
                         {"imputed_by", lc.manifest.params_sha256},
                         {"impute_mode", mode}};
    if (extra.contains("generator"))
        ex["generator"] = extra.at("generator");
    write_dataset_dir(imputed, out, ex);
    log(fmt::format("imputed {} samples into {}", imputed.size(), out.string()));
    return kExitOk;
}

std::size_t worker_count()
{
    if (const char *env = std::getenv("MVSEMI_NUM_WORKERS")) {
        try {
            const long n = std::stol(env);
            if (n >= 1)
                return static_cast<std::size_t>(n);
        } catch (const std::exception &) {
        }
        throw ConfigError("MVSEMI_NUM_WORKERS: expected a positive integer");
    }
    return 1;
}

std::vector<double> parse_grid(const std::string &s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception &) {
            throw ConfigError("--grid: '" + item + "' is not a number");
        }
    }
    if (out.empty())
        throw ConfigError("--grid: empty grid");
    return out;
}

int cmd_sweep(const Globals &g, const std::string &axis_arg, const std::string &grid_arg, const Log &log)
{
    ExperimentConfig c = load_config(g);
    const fs::path out = require_out(g);
    const SweepAxis axis = parse_sweep_axis(axis_arg.empty() ? c.sweep_axis : axis_arg);
    const std::vector<double> grid = grid_arg.empty() ? c.sweep_grid : parse_grid(grid_arg);
    const PreparedData data = load_experiment_data(c);
    const std::size_t workers = std::min(worker_count(), grid.size());
    log(fmt::format("sweeping {} over {} points with {} worker(s)", to_string(axis), grid.size(), workers));

    std::vector<SweepPoint> points(grid.size());
    std::mutex log_mutex;
    auto run_point = [&](std::size_t i) {
        points[i] = sensitivity_sweep(axis, {grid[i]}, data.splits.train, data.splits.val, c.model, c.train, c.seeds)
                        .front();
        std::lock_guard lock(log_mutex);
        log(fmt::format("{} = {}: {:.4f}", to_string(axis), grid[i], points[i].metric));
    };
    std::vector<std::future<void>> tasks;
    for (std::size_t w = 0; w < workers; ++w)
        tasks.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < grid.size(); i += workers)
                run_point(i);
        }));
    for (auto &t : tasks)
        t.get();

    fs::create_directories(out);
    write_sweep_csv(out / "sweep.csv", points);
    nlohmann::json detail = nlohmann::json::array();
    for (const auto &p : points)
        detail.push_back({{"value", p.value},
                          {"metric", std::isnan(p.metric) ? nlohmann::json(nullptr) : nlohmann::json(p.metric)},
                          {"per_seed", p.per_seed},
                          {"note", p.note}});
    write_json(out / "sweep.json", {{"axis", to_string(axis)}, {"points", detail}, {"config", c}});
    return kExitOk;
}

int cmd_report(const Globals &g, const std::vector<std::string> &run_dirs, std::ostream &out_stream, const Log &log)
{
    const fs::path out = require_out(g);
    if (run_dirs.empty())
        throw ConfigError("report: at least one run directory is required");
    std::map<std::string, std::map<BaselineKind, std::vector<MetricsReport>>> by_split;
    std::vector<fs::path> sweeps;
    for (const auto &d : run_dirs) {
        if (!fs::exists(d))
            throw std::runtime_error("report: " + d + " does not exist");
        std::vector<fs::path> files;
        for (const auto &e : fs::recursive_directory_iterator(d))
            files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto &f : files) {
            if (f.filename() == "metrics.json") {
                const MetricsReport r = read_json(f).get<MetricsReport>();
                by_split[to_string(r.split)][parse_baseline_kind(r.method)].push_back(r);
            } else if (f.filename() == "sweep.csv") {
                sweeps.push_back(f);
            }
        }
    }
    fs::create_directories(out);
    std::string text;
    std::ofstream csv(out / "table.csv");
    csv << "split,method,auroc_mean,auroc_std,accuracy_mean,accuracy_std,n_runs\n";
    for (const auto &[split, methods] : by_split) {
        std::vector<MethodSummary> rows;
        for (const auto &[kind, reports] : methods) {
            rows.push_back(summarize(kind, reports));
            const auto &r = rows.back();
            csv << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", split, method_label(kind), r.auroc.mean,
                               r.auroc.std, r.accuracy.mean, r.accuracy.std, reports.size());
        }
        text += render_table("Prediction on " + split + " split", rows) + "\n";
    }
    int n = 0;
    for (const auto &s : sweeps) {
        const fs::path dst = out / fmt::format("figure_{}_{}.csv", n++, s.parent_path().filename().string());
        fs::copy_file(s, dst, fs::copy_options::overwrite_existing);
        text += "sweep data: " + dst.string() + "\n";
    }
    std::ofstream(out / "report.txt") << text;
    out_stream << text;
    log(fmt::format("report written to {}", out.string()));
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Semi-supervised multi-view learning with missing views and labels", "mvsemi"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config, "Experiment configuration (JSON)");
    auto *seed_opt = app.add_option("--seed", seed_value, "Override the seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");

    std::string kind, method, checkpoint, split = "test", data_dir, mode = "mean", axis, grid;
    std::optional<double> drop_rate, keep_fraction;
    std::vector<std::string> run_dirs;

    auto *gen = app.add_subcommand("gen-data", "Generate a synthetic dataset directory");
    gen->add_option("--kind", kind, "tabular or glyph");
    gen->add_option("--drop-rate", drop_rate, "Per-view drop probability");
    gen->add_option("--keep-fraction", keep_fraction, "Fraction of training labels kept");

    auto *trn = app.add_subcommand("train", "Train one method and write a checkpoint");
    trn->add_option("--method", method, "base, mvae, deepimv_style, ours_no_cvmi or ours");

    auto *evl = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
    evl->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    evl->add_option("--split", split, "train, val or test");
    evl->add_option("--data", data_dir, "Dataset directory (defaults to the checkpoint's data source)");

    auto *imp = app.add_subcommand("impute", "Fill absent views with a trained generative model");
    imp->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    imp->add_option("--data", data_dir, "Dataset split directory");
    imp->add_option("--mode", mode, "mean or sample");

    auto *swp = app.add_subcommand("sweep", "Validation metric over an alpha or gamma grid");
    swp->add_option("--axis", axis, "alpha or gamma");
    swp->add_option("--grid", grid, "Comma-separated values");

    auto *rep = app.add_subcommand("report", "Render tables from run directories");
    rep->add_option("runs", run_dirs, "Run directories containing metrics.json files");

    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (seed_opt->count() > 0)
        g.seed = seed_value;
    const Log log(err, g.quiet);

    try {
        if (gen->parsed())
            return cmd_gen_data(g, kind, drop_rate, keep_fraction, log);
        if (trn->parsed())
            return cmd_train(g, method, log);
        if (evl->parsed())
            return cmd_eval(g, checkpoint, split, data_dir, log);
        if (imp->parsed())
            return cmd_impute(g, checkpoint, data_dir, mode, log);
        if (swp->parsed())
            return cmd_sweep(g, axis, grid, log);
        if (rep->parsed())
            return cmd_report(g, run_dirs, out, log);
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nlohmann::json::exception &e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}

} // namespace mvsemi::cli
