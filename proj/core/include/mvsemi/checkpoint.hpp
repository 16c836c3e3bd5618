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

// Checkpoint directory: params.bin (parameter blobs of every trained part)
// and manifest.json (schema, configs, seed, code version, metrics). The
// manifest is readable on its own.

#ifndef MVSEMI_CHECKPOINT_HPP_
#define MVSEMI_CHECKPOINT_HPP_

#include "mvsemi/baselines.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace mvsemi {

/// Version string baked in at configure time (git describe).
std::string code_version();

struct CheckpointManifest {
    int format_version = 1;
    BaselineKind method = BaselineKind::ours;
    DatasetSchema schema;
    ModelConfig model;
    TrainConfig train;
    MvaeConfig mvae;
    std::uint64_t seed = 0;
    std::string code_version;
    /// Per-view trained flags of the base method.
    std::vector<bool> base_trained;
    nlohmann::json metrics = nlohmann::json::object();
    /// Dataset provenance (checksums of the data the run consumed).
    nlohmann::json data = nlohmann::json::object();
    std::string params_sha256;
    std::uint64_t params_fingerprint = 0;
};

void to_json(nlohmann::json &j, const CheckpointManifest &m);
void from_json(const nlohmann::json &j, CheckpointManifest &m);

void save_checkpoint(const std::filesystem::path &dir, const MethodRun &run, CheckpointManifest manifest);

struct LoadedCheckpoint {
    CheckpointManifest manifest;
    MethodRun run;
};

CheckpointManifest read_checkpoint_manifest(const std::filesystem::path &dir);
LoadedCheckpoint load_checkpoint(const std::filesystem::path &dir);

} // namespace mvsemi

#endif // MVSEMI_CHECKPOINT_HPP_
