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
#include <string>
#include <vector>

#include "lasattn/attention.hpp"

namespace lasattn {

struct BenchResult {
  std::string variant;
  Eigen::Index length = 0;
  int d_model = 0;
  int heads = 0;
  int chunk_size = 0;
  int trials = 0;
  double median_seconds = 0.0;
  double iqr_seconds = 0.0;
  std::size_t peak_bytes = 0;
};

/// Transient bytes of one forward pass without caches: projections, output
/// and the largest per-head working set.
std::size_t estimate_forward_bytes(const AttentionConfig& config, Eigen::Index length,
                                   std::size_t scalar_bytes);

/// Median and interquartile range of multi_head_attention forward time in
/// 32-bit floats. Input and weights come from `seed` alone, so every variant
/// sees the same data; the plan (masks, pooling profiles) is built before the
/// timed region. `warmups` >= 2 untimed runs precede `trials` >= 5 timed ones.
BenchResult time_forward(const AttentionConfig& config, Eigen::Index length, int trials,
                         std::uint64_t seed = 0, int warmups = 2);

/// Appends one row per result under a fresh run id (1 for a new file).
/// An empty list still leaves a file with the header.
void report(const std::vector<BenchResult>& results, const std::filesystem::path& path);

inline constexpr const char* kBenchHeader =
    "run_id,variant,L,d_model,heads,chunk,trials,median_seconds,iqr_seconds,peak_bytes";

}  // namespace lasattn
