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

// On-disk dataset format. One directory per split:
//   view_<v>.csv              flat views: header "sample_id,f0,...", one row per present sample
//   view_<v>.bin              image views: row-major little-endian float32, one row per present sample
//   view_<v>.meta.json        shape, dtype, count and sample ids for view_<v>.bin
//   labels.csv                "sample_id,label", every sample in dataset order, empty label when missing
//   manifest.json             schema, split, generator config, seed, calibration, sha256 checksums

#ifndef MVSEMI_DATASET_IO_HPP_
#define MVSEMI_DATASET_IO_HPP_

#include "mvsemi/data.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsemi {

class MalformedInput : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IntegrityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::filesystem::path &path);
std::string sha256_bytes(std::string_view bytes);

/// Writes the split directory; `extra` is merged into manifest.json
/// (generator config, seed, calibration values).
void write_dataset_dir(const Dataset &dataset, const std::filesystem::path &dir,
                       const nlohmann::json &extra = nlohmann::json::object());

/// Reads a split directory. With verify set, every file listed in the
/// manifest must match its recorded checksum (IntegrityError otherwise).
Dataset read_dataset_dir(const std::filesystem::path &dir, bool verify = true);

nlohmann::json read_manifest(const std::filesystem::path &dir);

/// Aligns per-view CSV files (header row, first column sample_id) into a
/// dataset. A sample missing from a view file has that view absent. Labels
/// map sample_id to class; an empty cell or a missing row means unlabeled.
/// Samples are ordered by ascending sample_id.
Dataset load_tabular_csv(const std::vector<std::filesystem::path> &view_paths,
                         const std::optional<std::filesystem::path> &label_path, const DatasetSchema &schema,
                         SplitTag split = SplitTag::train);

void write_view_csv(const Dataset &dataset, int view, const std::filesystem::path &path);
void write_labels_csv(const Dataset &dataset, const std::filesystem::path &path);

} // namespace mvsemi

#endif // MVSEMI_DATASET_IO_HPP_
