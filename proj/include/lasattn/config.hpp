// Copyright 2026 The lasattn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lasattn/data.hpp"
#include "lasattn/model.hpp"
#include "lasattn/train.hpp"

namespace lasattn {

struct SweepConfig {
  std::vector<int> chunk_sizes{16, 32, 64, 128};
  std::vector<double> fractions{0.1, 0.5, 1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct BenchConfig {
  std::vector<Variant> variants{Variant::kVanilla, Variant::kLas};
  std::vector<int> lengths{512, 1024, 2048};
  int trials = 20;
};

/// Everything one CLI command needs. Vocabulary size, class count and maximum
/// length default to the dataset's when not given.
struct RunConfig {
  std::string preset;
  std::uint64_t seed = 1;
  std::string out = "runs/default";
  ModelConfig model;
  std::optional<int> vocab_size, num_classes, max_length;
  TrainConfig train;
  data::TaskSpec task;
  SweepConfig sweep;
  BenchConfig bench;

  /// The model config with unset sizes taken from `dataset`.
  ModelConfig resolve_model(const data::SequenceDataset& dataset) const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// SchemaError naming the dotted key. A "preset" key is applied before the
/// other keys.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

/// Writes `dir`/run_config.json.
void write_run_config(const std::filesystem::path& dir, const RunConfig& config);

std::vector<std::string> preset_names();
/// Defaults with the named preset applied.
RunConfig preset(const std::string& name);

nlohmann::json to_json(const ModelConfig& model);
ModelConfig model_from_json(const nlohmann::json& doc);

}  // namespace lasattn
