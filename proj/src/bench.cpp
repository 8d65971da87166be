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


#include "lasattn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lasattn {

namespace {

double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * (sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

int last_run_id(const std::filesystem::path& path) {
  std::ifstream f(path);
  std::string line;
  int last = 0;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    last = std::max(last, std::atoi(line.substr(0, line.find(',')).c_str()));
  }
  return last;
}

}  // namespace

std::size_t estimate_forward_bytes(const AttentionConfig& config, Eigen::Index length,
                                   std::size_t scalar_bytes) {
  const auto block = static_cast<std::size_t>(
      config.chunk_size > 0 ? std::min<Eigen::Index>(config.chunk_size, length) : length);
  const auto len = static_cast<std::size_t>(length);
  const auto d = static_cast<std::size_t>(config.d_model);
  const auto dk = static_cast<std::size_t>(config.d_k());
  // q, k, v, concat, output; per head block: q, k, v slices, head output, weights.
  return scalar_bytes * (5 * len * d + 4 * block * dk + block * block);
}

BenchResult time_forward(const AttentionConfig& config, Eigen::Index length, int trials,
                         std::uint64_t seed, int warmups) {
  if (trials < 5) throw ParameterError("time_forward: trials must be >= 5");
  if (warmups < 2) throw ParameterError("time_forward: warmups must be >= 2");
  config.validate();
  Rng rng(seed);
  const MatrixF x = random_uniform<float>(length, config.d_model, -1.0f, 1.0f, rng);
  const auto w = AttentionWeights<float>::random(config.d_model, rng);
  const AttentionPlan<float> plan(config, length);

  using Clock = std::chrono::steady_clock;
  float sink = 0.0f;
  for (int i = 0; i < warmups; ++i) sink += multi_head_attention(x, w, plan)(0, 0);
  std::vector<double> samples;
  for (int i = 0; i < trials; ++i) {
    const auto start = Clock::now();
    const MatrixF out = multi_head_attention(x, w, plan);
    samples.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    sink += out(0, 0);
  }
  if (!std::isfinite(sink)) throw NumericError("time_forward: non-finite output");
  std::sort(samples.begin(), samples.end());

  BenchResult r;
  r.variant = to_string(config.variant);
  r.length = length;
  r.d_model = config.d_model;
  r.heads = config.heads;
  r.chunk_size = config.chunk_size;
  r.trials = trials;
  r.median_seconds = quantile(samples, 0.5);
  r.iqr_seconds = quantile(samples, 0.75) - quantile(samples, 0.25);
  r.peak_bytes = estimate_forward_bytes(config, length, sizeof(float));
  return r;
}

void report(const std::vector<BenchResult>& results, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  const int run_id = fresh ? 1 : last_run_id(path) + 1;
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  if (fresh) f << kBenchHeader << '\n';
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof(line), "%d,%s,%lld,%d,%d,%d,%d,%.9g,%.9g,%zu", run_id,
                  r.variant.c_str(), static_cast<long long>(r.length), r.d_model, r.heads,
                  r.chunk_size, r.trials, r.median_seconds, r.iqr_seconds, r.peak_bytes);
    f << line << '\n';
  }
}

}  // namespace lasattn
