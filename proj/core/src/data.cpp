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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace mvsemi {

namespace {

// Stream ids for derive_seed; kept apart so streams never collide.
constexpr std::uint64_t kClassDirectionStream = 1;
constexpr std::uint64_t kMixingStream = 2;
constexpr std::uint64_t kBackgroundStream = 3;
constexpr std::uint64_t kSampleStreamBase = 100;

constexpr double kBackgroundMax = 0.8;
constexpr int kBackgroundScale = 3;

std::uint64_t sample_stream(int split_index)
{
    return kSampleStreamBase + static_cast<std::uint64_t>(split_index);
}

Dataset empty_split(const DatasetSchema &schema, SplitTag tag)
{
    Dataset d;
    d.schema = schema;
    d.split = tag;
    return d;
}

std::array<int, 3> split_sizes(const GeneratorConfig &c)
{
    return {c.n_train, c.n_val, c.n_test};
}

std::int64_t first_id(const GeneratorConfig &c, int split_index)
{
    std::int64_t id = 0;
    for (int i = 0; i < split_index; ++i)
        id += split_sizes(c)[static_cast<std::size_t>(i)];
    return id;
}

Matrix box_blur(const Matrix &m, int passes)
{
    Matrix cur = m;
    for (int p = 0; p < passes; ++p) {
        Matrix next(cur.rows(), cur.cols());
        for (Eigen::Index r = 0; r < cur.rows(); ++r) {
            for (Eigen::Index c = 0; c < cur.cols(); ++c) {
                double acc = 0.0;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const Eigen::Index rr = r + dr, cc = c + dc;
                        if (rr < 0 || cc < 0 || rr >= cur.rows() || cc >= cur.cols())
                            continue;
                        acc += cur(rr, cc);
                        ++n;
                    }
                }
                next(r, c) = acc / n;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

Matrix make_background(std::uint64_t seed, int view, int size)
{
    Rng rng = make_rng(derive_seed(seed, kBackgroundStream), static_cast<std::uint64_t>(view));
    Matrix noise(size, size);
    for (Eigen::Index i = 0; i < noise.size(); ++i)
        noise.data()[i] = uniform01(rng);
    Matrix smooth = box_blur(noise, 2);
    const double lo = smooth.minCoeff(), hi = smooth.maxCoeff();
    return ((smooth.array() - lo) / (hi - lo) * kBackgroundMax).matrix();
}

} // namespace

int MultiViewSample::num_present() const
{
    int n = 0;
    for (const auto &v : views)
        n += v.has_value() ? 1 : 0;
    return n;
}

std::vector<bool> MultiViewSample::mask() const
{
    std::vector<bool> m(views.size());
    for (std::size_t v = 0; v < views.size(); ++v)
        m[v] = views[v].has_value();
    return m;
}

void Dataset::validate() const
{
    schema.validate();
    std::set<std::int64_t> ids;
    for (const auto &s : samples) {
        const std::string where = "sample " + std::to_string(s.sample_id);
        if (!ids.insert(s.sample_id).second)
            throw std::invalid_argument("dataset: duplicate " + where);
        if (static_cast<int>(s.views.size()) != schema.num_views)
            throw std::invalid_argument("dataset: " + where + " has the wrong number of view slots");
        if (s.num_present() < 1)
            throw std::invalid_argument("dataset: " + where + " has no present view");
        for (int v = 0; v < schema.num_views; ++v) {
            if (!s.present(v))
                continue;
            const auto &f = *s.views[static_cast<std::size_t>(v)];
            if (static_cast<int>(f.size()) != schema.view_dim(v))
                throw std::invalid_argument("dataset: " + where + " view " + std::to_string(v) + " has " +
                                            std::to_string(f.size()) + " features, schema expects " +
                                            std::to_string(schema.view_dim(v)));
        }
        if (s.label && (*s.label < 0 || *s.label >= schema.num_classes))
            throw std::invalid_argument("dataset: " + where + " label " + std::to_string(*s.label) +
                                        " outside [0, " + std::to_string(schema.num_classes) + ")");
    }
}

std::size_t Dataset::labeled_count() const
{
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const auto &s) { return s.label.has_value(); }));
}

Dataset Dataset::labeled_only() const
{
    Dataset out = empty_split(schema, split);
    for (const auto &s : samples)
        if (s.label)
            out.samples.push_back(s);
    return out;
}

Dataset Dataset::subset(const std::vector<std::size_t> &indices) const
{
    Dataset out = empty_split(schema, split);
    out.samples.reserve(indices.size());
    for (auto i : indices)
        out.samples.push_back(samples.at(i));
    return out;
}

GeneratorConfig GeneratorConfig::tabular_defaults()
{
    return GeneratorConfig{};
}

GeneratorConfig GeneratorConfig::glyph_defaults()
{
    GeneratorConfig c;
    c.kind = GeneratorKind::glyph_image;
    c.n_train = 20000;
    c.n_val = 2500;
    c.n_test = 5000;
    c.num_views = 5;
    c.num_classes = 10;
    c.image_side = 14;
    return c;
}

void GeneratorConfig::validate() const
{
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw std::invalid_argument("generator: split sizes must be at least 1");
    if (num_views < 2)
        throw std::invalid_argument("generator: num_views must be at least 2");
    if (num_classes < 2)
        throw std::invalid_argument("generator: num_classes must be at least 2");
    if (kind == GeneratorKind::tabular) {
        if (shared_dim < 1)
            throw std::invalid_argument("generator: shared_dim must be at least 1");
        if (!view_dims.empty() && static_cast<int>(view_dims.size()) != num_views)
            throw std::invalid_argument("generator: view_dims must list one size per view");
        for (int d : view_dims)
            if (d < 1)
                throw std::invalid_argument("generator: view dims must be at least 1");
        if (!(private_noise_std >= 0.0))
            throw std::invalid_argument("generator: private_noise_std must be non-negative");
        if (!(class_separation >= 0.0))
            throw std::invalid_argument("generator: class_separation must be non-negative");
    } else {
        if (image_side < kGlyphSide)
            throw std::invalid_argument("generator: image_side must be at least the glyph size");
    }
}

int GeneratorConfig::view_dim(int v) const
{
    if (kind == GeneratorKind::glyph_image)
        return image_side * image_side;
    return view_dims.empty() ? 100 : view_dims.at(static_cast<std::size_t>(v));
}

std::string to_string(GeneratorKind k)
{
    return k == GeneratorKind::glyph_image ? "glyph" : "tabular";
}

void to_json(nlohmann::json &j, const GeneratorConfig &c)
{
    j = {{"kind", to_string(c.kind)},
         {"n_train", c.n_train},
         {"n_val", c.n_val},
         {"n_test", c.n_test},
         {"num_views", c.num_views},
         {"num_classes", c.num_classes},
         {"shared_dim", c.shared_dim},
         {"view_dims", c.view_dims},
         {"image_side", c.image_side},
         {"private_noise_std", c.private_noise_std},
         {"class_separation", c.class_separation},
         {"linear", c.linear},
         {"overlay_glyph", c.overlay_glyph},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json &j, GeneratorConfig &c)
{
    reject_unknown_keys(j,
                        {"kind", "n_train", "n_val", "n_test", "num_views", "num_classes", "shared_dim", "view_dims",
                         "image_side", "private_noise_std", "class_separation", "linear", "overlay_glyph", "seed"},
                        "generator");
    const std::string kind = j.value("kind", std::string("tabular"));
    if (kind == "tabular")
        c = GeneratorConfig::tabular_defaults();
    else if (kind == "glyph")
        c = GeneratorConfig::glyph_defaults();
    else
        throw ConfigError("generator.kind: expected 'tabular' or 'glyph', got '" + kind + "'");
    c.n_train = j.value("n_train", c.n_train);
    c.n_val = j.value("n_val", c.n_val);
    c.n_test = j.value("n_test", c.n_test);
    c.num_views = j.value("num_views", c.num_views);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.shared_dim = j.value("shared_dim", c.shared_dim);
    c.view_dims = j.value("view_dims", c.view_dims);
    c.image_side = j.value("image_side", c.image_side);
    c.private_noise_std = j.value("private_noise_std", c.private_noise_std);
    c.class_separation = j.value("class_separation", c.class_separation);
    c.linear = j.value("linear", c.linear);
    c.overlay_glyph = j.value("overlay_glyph", c.overlay_glyph);
    c.seed = j.value("seed", c.seed);
}

DatasetTriplet gen_tabular(const GeneratorConfig &config)
{
    config.validate();
    if (config.kind != GeneratorKind::tabular)
        throw std::invalid_argument("gen_tabular: config kind is not tabular");
    const int V = config.num_views;
    const int S = config.shared_dim;

    DatasetSchema schema;
    schema.num_views = V;
    schema.num_classes = config.num_classes;
    for (int v = 0; v < V; ++v) {
        schema.view_shapes.push_back(ViewShape::flat(config.view_dim(v)));
        schema.view_likelihood.push_back(ViewLikelihood::gaussian_unit_variance);
    }

    Rng dir_rng = make_rng(config.seed, kClassDirectionStream);
    Matrix class_means(config.num_classes, S);
    for (int c = 0; c < config.num_classes; ++c) {
        Vector u(S);
        for (int k = 0; k < S; ++k)
            u(k) = standard_normal(dir_rng);
        class_means.row(c) = config.class_separation * u.normalized().transpose();
    }
    std::vector<Matrix> mixing;
    Rng mix_rng = make_rng(config.seed, kMixingStream);
    for (int v = 0; v < V; ++v)
        mixing.push_back(standard_normal(mix_rng, S, config.view_dim(v)) / std::sqrt(static_cast<double>(S)));

    DatasetTriplet out;
    Dataset *splits[3] = {&out.train, &out.val, &out.test};
    const SplitTag tags[3] = {SplitTag::train, SplitTag::val, SplitTag::test};
    for (int si = 0; si < 3; ++si) {
        Dataset &d = *splits[si];
        d = empty_split(schema, tags[si]);
        const int n = split_sizes(config)[static_cast<std::size_t>(si)];
        const std::int64_t base = first_id(config, si);
        d.samples.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Rng rng = make_rng(derive_seed(config.seed, sample_stream(si)), static_cast<std::uint64_t>(i));
            MultiViewSample &s = d.samples[static_cast<std::size_t>(i)];
            s.sample_id = base + i;
            const int y = uniform_index(rng, config.num_classes);
            s.label = y;
            Eigen::RowVectorXd code = class_means.row(y);
            for (int k = 0; k < S; ++k)
                code(k) += standard_normal(rng);
            s.views.resize(static_cast<std::size_t>(V));
            for (int v = 0; v < V; ++v) {
                Eigen::RowVectorXd x = code * mixing[static_cast<std::size_t>(v)];
                Features f(static_cast<std::size_t>(x.size()));
                for (Eigen::Index k = 0; k < x.size(); ++k) {
                    const double clean = config.linear ? x(k) : std::tanh(x(k));
                    f[static_cast<std::size_t>(k)] =
                        static_cast<float>(clean + config.private_noise_std * standard_normal(rng));
                }
                s.views[static_cast<std::size_t>(v)] = std::move(f);
            }
        }
    }

    nlohmann::json means = nlohmann::json::array();
    for (int c = 0; c < config.num_classes; ++c)
        means.push_back(std::vector<double>(class_means.row(c).data(), class_means.row(c).data() + S));
    out.calibration = {{"class_separation", config.class_separation},
                       {"private_noise_std", config.private_noise_std},
                       {"shared_dim", S},
                       {"nonlinearity", config.linear ? "linear" : "tanh"},
                       {"class_means", means}};
    return out;
}

GlyphSet make_glyph_set(int num_classes, std::uint64_t seed)
{
    for (std::uint64_t attempt = seed;; ++attempt) {
        Rng rng(derive_seed(attempt, 0));
        std::vector<Glyph> glyphs(static_cast<std::size_t>(num_classes));
        for (auto &g : glyphs)
            for (auto &px : g)
                px = uniform01(rng) < 0.5 ? 1 : 0;
        bool ok = true;
        for (std::size_t a = 0; a < glyphs.size() && ok; ++a) {
            for (std::size_t b = a + 1; b < glyphs.size() && ok; ++b) {
                int dist = 0;
                for (std::size_t k = 0; k < glyphs[a].size(); ++k)
                    dist += glyphs[a][k] != glyphs[b][k] ? 1 : 0;
                ok = dist >= kGlyphMinHamming;
            }
        }
        if (ok)
            return {std::move(glyphs), attempt};
    }
}

DatasetTriplet gen_glyph_images(const GeneratorConfig &config)
{
    config.validate();
    if (config.kind != GeneratorKind::glyph_image)
        throw std::invalid_argument("gen_glyph_images: config kind is not glyph");
    const int V = config.num_views;
    const int side = config.image_side;
    const int bg_size = kBackgroundScale * side;

    DatasetSchema schema;
    schema.num_views = V;
    schema.num_classes = config.num_classes;
    for (int v = 0; v < V; ++v) {
        schema.view_shapes.push_back(ViewShape::image(side));
        schema.view_likelihood.push_back(ViewLikelihood::bernoulli);
    }

    const GlyphSet glyphs = make_glyph_set(config.num_classes, config.seed);
    std::vector<Matrix> backgrounds;
    for (int v = 0; v < V; ++v)
        backgrounds.push_back(make_background(config.seed, v, bg_size));

    DatasetTriplet out;
    Dataset *splits[3] = {&out.train, &out.val, &out.test};
    const SplitTag tags[3] = {SplitTag::train, SplitTag::val, SplitTag::test};
    for (int si = 0; si < 3; ++si) {
        Dataset &d = *splits[si];
        d = empty_split(schema, tags[si]);
        const int n = split_sizes(config)[static_cast<std::size_t>(si)];
        const std::int64_t base = first_id(config, si);
        d.samples.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Rng rng = make_rng(derive_seed(config.seed, sample_stream(si)), static_cast<std::uint64_t>(i));
            MultiViewSample &s = d.samples[static_cast<std::size_t>(i)];
            s.sample_id = base + i;
            const int y = uniform_index(rng, config.num_classes);
            s.label = y;
            const Glyph &g = glyphs.glyphs[static_cast<std::size_t>(y)];
            s.views.resize(static_cast<std::size_t>(V));
            for (int v = 0; v < V; ++v) {
                const Matrix &bg = backgrounds[static_cast<std::size_t>(v)];
                const int crop_r = uniform_index(rng, bg_size - side + 1);
                const int crop_c = uniform_index(rng, bg_size - side + 1);
                const int gr = uniform_index(rng, side - kGlyphSide + 1);
                const int gc = uniform_index(rng, side - kGlyphSide + 1);
                Features f(static_cast<std::size_t>(side * side));
                for (int r = 0; r < side; ++r)
                    for (int c = 0; c < side; ++c)
                        f[static_cast<std::size_t>(r * side + c)] = static_cast<float>(bg(crop_r + r, crop_c + c));
                if (config.overlay_glyph) {
                    for (int r = 0; r < kGlyphSide; ++r)
                        for (int c = 0; c < kGlyphSide; ++c)
                            if (g[static_cast<std::size_t>(r * kGlyphSide + c)])
                                f[static_cast<std::size_t>((gr + r) * side + gc + c)] = 1.0f;
                }
                s.views[static_cast<std::size_t>(v)] = std::move(f);
            }
        }
    }
    out.calibration = {{"glyph_seed_used", glyphs.seed_used},
                       {"glyph_side", kGlyphSide},
                       {"background_size", bg_size},
                       {"background_max", kBackgroundMax},
                       {"overlay_glyph", config.overlay_glyph}};
    return out;
}

DatasetTriplet generate(const GeneratorConfig &config)
{
    return config.kind == GeneratorKind::glyph_image ? gen_glyph_images(config) : gen_tabular(config);
}

Dataset inject_missingness(const Dataset &dataset, double drop_rate, std::uint64_t seed, MissingnessStats *stats)
{
    if (!(drop_rate >= 0.0 && drop_rate < 1.0))
        throw std::invalid_argument("inject_missingness: drop_rate must lie in [0, 1)");
    const int V = dataset.schema.num_views;
    MissingnessStats local;
    local.dropped.assign(static_cast<std::size_t>(V), 0);
    local.eligible.assign(static_cast<std::size_t>(V), 0);

    Dataset out = dataset;
    for (auto &s : out.samples) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(s.sample_id));
        std::vector<int> original;
        std::vector<std::optional<Features>> removed(static_cast<std::size_t>(V));
        for (int v = 0; v < V; ++v) {
            const double u = uniform01(rng);
            if (!s.present(v))
                continue;
            original.push_back(v);
            ++local.eligible[static_cast<std::size_t>(v)];
            if (u < drop_rate) {
                ++local.dropped[static_cast<std::size_t>(v)];
                removed[static_cast<std::size_t>(v)] = std::move(s.views[static_cast<std::size_t>(v)]);
                s.views[static_cast<std::size_t>(v)].reset();
            }
        }
        if (s.num_present() == 0 && !original.empty()) {
            const int v = original[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(original.size())))];
            s.views[static_cast<std::size_t>(v)] = std::move(removed[static_cast<std::size_t>(v)]);
            ++local.restored;
        }
    }
    if (stats)
        *stats = std::move(local);
    return out;
}

LabelReduction reduce_labels(const Dataset &dataset, double keep_fraction, std::uint64_t seed)
{
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("reduce_labels: keep_fraction must lie in (0, 1]");
    const int K = dataset.schema.num_classes;
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(K));
    for (std::size_t i = 0; i < dataset.samples.size(); ++i)
        if (const auto &l = dataset.samples[i].label)
            by_class.at(static_cast<std::size_t>(*l)).push_back(i);

    LabelReduction out;
    out.dataset = dataset;
    out.kept_per_class.assign(static_cast<std::size_t>(K), 0);
    for (int c = 0; c < K; ++c) {
        auto &idx = by_class[static_cast<std::size_t>(c)];
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(c));
        shuffle(idx, rng);
        const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = keep; k < idx.size(); ++k)
            out.dataset.samples[idx[k]].label.reset();
        out.kept_per_class[static_cast<std::size_t>(c)] = keep;
        if (keep == 0)
            out.warnings.push_back("class " + std::to_string(c) + " has no labels left after reduction");
    }
    return out;
}

Standardizer Standardizer::fit(const Dataset &train)
{
    const int V = train.schema.num_views;
    Standardizer st;
    st.mean_.resize(static_cast<std::size_t>(V));
    st.std_.resize(static_cast<std::size_t>(V));
    st.active_.resize(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        const int d = train.schema.view_dim(v);
        st.active_[vi] = train.schema.view_likelihood[vi] == ViewLikelihood::gaussian_unit_variance;
        std::vector<double> sum(static_cast<std::size_t>(d), 0.0), sq(static_cast<std::size_t>(d), 0.0);
        std::size_t n = 0;
        for (const auto &s : train.samples) {
            if (!s.present(v))
                continue;
            ++n;
            const auto &f = *s.views[vi];
            for (int k = 0; k < d; ++k)
                sum[static_cast<std::size_t>(k)] += f[static_cast<std::size_t>(k)];
        }
        std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
        if (n > 0)
            for (int k = 0; k < d; ++k)
                mean[static_cast<std::size_t>(k)] = sum[static_cast<std::size_t>(k)] / static_cast<double>(n);
        for (const auto &s : train.samples) {
            if (!s.present(v))
                continue;
            const auto &f = *s.views[vi];
            for (int k = 0; k < d; ++k) {
                const double diff = f[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
                sq[static_cast<std::size_t>(k)] += diff * diff;
            }
        }
        std::vector<double> sd(static_cast<std::size_t>(d), 1.0);
        if (n > 0)
            for (int k = 0; k < d; ++k)
                sd[static_cast<std::size_t>(k)] =
                    std::max(std::sqrt(sq[static_cast<std::size_t>(k)] / static_cast<double>(n)), kStdFloor);
        st.mean_[vi] = std::move(mean);
        st.std_[vi] = std::move(sd);
    }
    return st;
}

Dataset Standardizer::apply(const Dataset &dataset) const
{
    if (static_cast<std::size_t>(dataset.schema.num_views) != mean_.size())
        throw std::invalid_argument("Standardizer: view count differs from the fitted dataset");
    Dataset out = dataset;
    for (auto &s : out.samples) {
        for (std::size_t v = 0; v < mean_.size(); ++v) {
            if (!active_[v] || !s.views[v])
                continue;
            auto &f = *s.views[v];
            if (f.size() != mean_[v].size())
                throw std::invalid_argument("Standardizer: feature width differs from the fitted dataset");
            for (std::size_t k = 0; k < f.size(); ++k)
                f[k] = static_cast<float>((f[k] - mean_[v][k]) / std_[v][k]);
        }
    }
    return out;
}

nlohmann::json Standardizer::to_json() const
{
    return {{"mean", mean_}, {"std", std_}};
}

DatasetSplits split_dataset(const Dataset &dataset, std::array<double, 3> fractions, bool stratified,
                            std::uint64_t seed)
{
    const double total = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(total - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0)
        throw std::invalid_argument("split_dataset: fractions must be non-negative and sum to 1");

    std::map<int, std::vector<std::size_t>> groups;
    std::vector<std::size_t> unlabeled;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto &l = dataset.samples[i].label;
        if (!l)
            unlabeled.push_back(i);
        else
            groups[stratified ? *l : 0].push_back(i);
    }

    std::array<std::vector<std::size_t>, 3> parts;
    for (auto &[key, idx] : groups) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(key));
        shuffle(idx, rng);
        const double n = static_cast<double>(idx.size());
        const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * n));
        const auto n_val = std::min(idx.size() - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
        for (std::size_t k = 0; k < idx.size(); ++k)
            parts[k < n_train ? 0 : (k < n_train + n_val ? 1 : 2)].push_back(idx[k]);
    }
    parts[0].insert(parts[0].end(), unlabeled.begin(), unlabeled.end());

    DatasetSplits out;
    Dataset *dst[3] = {&out.train, &out.val, &out.test};
    const SplitTag tags[3] = {SplitTag::train, SplitTag::val, SplitTag::test};
    for (int p = 0; p < 3; ++p) {
        auto &idx = parts[static_cast<std::size_t>(p)];
        std::sort(idx.begin(), idx.end());
        *dst[p] = dataset.subset(idx);
        dst[p]->split = tags[p];
    }
    return out;
}

std::vector<Features> present_feature_means(const Dataset &dataset)
{
    std::vector<Features> out;
    for (int v = 0; v < dataset.schema.num_views; ++v) {
        const auto d = static_cast<std::size_t>(dataset.schema.view_dim(v));
        std::vector<double> acc(d, 0.0);
        std::size_t n = 0;
        for (const auto &s : dataset.samples) {
            if (!s.present(v))
                continue;
            ++n;
            const auto &f = *s.views[static_cast<std::size_t>(v)];
            for (std::size_t k = 0; k < d; ++k)
                acc[k] += f[k];
        }
        Features m(d, 0.0f);
        if (n > 0)
            for (std::size_t k = 0; k < d; ++k)
                m[k] = static_cast<float>(acc[k] / static_cast<double>(n));
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace mvsemi
