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

// Multi-view datasets: in-memory representation, synthetic generators,
// missingness injection, label reduction, standardization and splitting.

#ifndef MVSEMI_DATA_HPP_
#define MVSEMI_DATA_HPP_

#include "mvsemi/rng.hpp"
#include "mvsemi/schema.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvsemi {

using Features = std::vector<float>;

struct MultiViewSample {
    std::vector<std::optional<Features>> views;
    std::optional<int> label;
    std::int64_t sample_id = 0;

    bool present(int v) const { return views.at(static_cast<std::size_t>(v)).has_value(); }
    int num_present() const;
    std::vector<bool> mask() const;
    bool operator==(const MultiViewSample &) const = default;
};

struct Dataset {
    DatasetSchema schema;
    std::vector<MultiViewSample> samples;
    SplitTag split = SplitTag::train;

    /// Throws std::invalid_argument on the first violated invariant: unique
    /// sample ids, at least one present view, shapes matching the schema,
    /// labels within range.
    void validate() const;

    std::size_t size() const { return samples.size(); }
    std::size_t labeled_count() const;
    Dataset labeled_only() const;
    Dataset subset(const std::vector<std::size_t> &indices) const;
    bool operator==(const Dataset &) const = default;
};

enum class GeneratorKind { tabular, glyph_image };

struct GeneratorConfig {
    GeneratorKind kind = GeneratorKind::tabular;
    int n_train = 10000;
    int n_val = 2500;
    int n_test = 3000;
    int num_views = 4;
    int num_classes = 2;
    int shared_dim = 16;
    /// Tabular only. Empty means 100 features for every view.
    std::vector<int> view_dims;
    /// Glyph only.
    int image_side = 14;
    double private_noise_std = 0.5;
    double class_separation = 2.0;
    /// Tabular: drop the tanh so views are linear in the shared code.
    bool linear = false;
    /// Glyph: disable to produce background-only images.
    bool overlay_glyph = true;
    std::uint64_t seed = 0;

    static GeneratorConfig tabular_defaults();
    static GeneratorConfig glyph_defaults();
    void validate() const;
    int view_dim(int v) const;
};

void to_json(nlohmann::json &j, const GeneratorConfig &c);
void from_json(const nlohmann::json &j, GeneratorConfig &c);
std::string to_string(GeneratorKind k);

struct DatasetTriplet {
    Dataset train;
    Dataset val;
    Dataset test;
    /// Generator facts worth persisting in a manifest (class directions,
    /// glyph seed actually used, and so on).
    nlohmann::json calibration;
};

DatasetTriplet gen_tabular(const GeneratorConfig &config);
DatasetTriplet gen_glyph_images(const GeneratorConfig &config);
DatasetTriplet generate(const GeneratorConfig &config);

inline constexpr int kGlyphSide = 7;
inline constexpr int kGlyphMinHamming = 10;
using Glyph = std::array<std::uint8_t, kGlyphSide * kGlyphSide>;

struct GlyphSet {
    std::vector<Glyph> glyphs;
    /// Seed that produced a set satisfying the pairwise distance constraint.
    std::uint64_t seed_used = 0;
};

/// Seeded binary glyphs, one per class, pairwise Hamming distance at least
/// kGlyphMinHamming. Retries with seed + 1 until the constraint holds.
GlyphSet make_glyph_set(int num_classes, std::uint64_t seed);

struct MissingnessStats {
    /// Drops per view before any restoration.
    std::vector<std::size_t> dropped;
    /// Present (sample, view) slots before injection, per view.
    std::vector<std::size_t> eligible;
    std::size_t restored = 0;
};

/// Drops each present (sample, view) with probability drop_rate using a
/// per-sample stream; a sample left empty gets one of its original views back.
Dataset inject_missingness(const Dataset &dataset, double drop_rate, std::uint64_t seed,
                           MissingnessStats *stats = nullptr);

struct LabelReduction {
    Dataset dataset;
    std::vector<std::size_t> kept_per_class;
    std::vector<std::string> warnings;
};

/// Stratified: per class, keeps round(keep_fraction * count) labels.
LabelReduction reduce_labels(const Dataset &dataset, double keep_fraction, std::uint64_t seed);

/// Per-feature z-scoring fitted on the present entries of a training split.
/// Only gaussian views are transformed; bernoulli (image) views pass through.
class Standardizer {
  public:
    static constexpr double kStdFloor = 1e-8;

    static Standardizer fit(const Dataset &train);
    Dataset apply(const Dataset &dataset) const;

    const std::vector<std::vector<double>> &means() const { return mean_; }
    const std::vector<std::vector<double>> &stds() const { return std_; }
    nlohmann::json to_json() const;

  private:
    std::vector<std::vector<double>> mean_;
    std::vector<std::vector<double>> std_;
    std::vector<bool> active_;
};

struct DatasetSplits {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Disjoint, exhaustive split; labeled samples are stratified by class when
/// requested and unlabeled samples always go to train.
DatasetSplits split_dataset(const Dataset &dataset, std::array<double, 3> fractions = {0.64, 0.16, 0.20},
                            bool stratified = true, std::uint64_t seed = 0);

/// Per-view feature means over present entries, used for mean imputation.
std::vector<Features> present_feature_means(const Dataset &dataset);

} // namespace mvsemi

#endif // MVSEMI_DATA_HPP_
