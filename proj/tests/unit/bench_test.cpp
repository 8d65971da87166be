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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lasattn/bench.hpp"

namespace lasattn {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(f, l);) out.push_back(l);
  return out;
}

AttentionConfig small(Variant v) {
  AttentionConfig c;
  c.heads = 4;
  c.d_model = 32;
  c.variant = v;
  return c;
}

TEST(Bench, TimeForwardFields) {
  const auto r = time_forward(small(Variant::kLas), 64, 5, 3);
  EXPECT_EQ(r.variant, "las");
  EXPECT_EQ(r.length, 64);
  EXPECT_EQ(r.trials, 5);
  EXPECT_GT(r.median_seconds, 0.0);
  EXPECT_GE(r.iqr_seconds, 0.0);
  EXPECT_EQ(r.peak_bytes, estimate_forward_bytes(small(Variant::kLas), 64, 4));
  EXPECT_THROW(time_forward(small(Variant::kLas), 64, 4), ParameterError);
  EXPECT_THROW(time_forward(small(Variant::kLas), 64, 5, 0, 1), ParameterError);
}

TEST(Bench, ChunkingBoundsWorkingSet) {
  AttentionConfig c = small(Variant::kLas);
  const auto full = estimate_forward_bytes(c, 4096, 4);
  c.chunk_size = 128;
  const auto chunked = estimate_forward_bytes(c, 4096, 4);
  EXPECT_LT(chunked * 20, full);
}

TEST(Bench, ChunkedTimeGrowsRoughlyLinearly) {
  AttentionConfig c;
  c.variant = Variant::kLas;
  c.chunk_size = 128;
  const double t2k = time_forward(c, 2048, 9).median_seconds;
  const double t4k = time_forward(c, 4096, 9).median_seconds;
  EXPECT_LT(t4k, 2.5 * t2k);
}

TEST(Bench, ReportHeaderAndRunIds) {
  const fs::path path = fs::temp_directory_path() / "lasattn_bench_test" / "bench.csv";
  fs::remove(path);
  report({}, path);
  EXPECT_EQ(lines(path), std::vector<std::string>{kBenchHeader});

  BenchResult r;
  r.variant = "vanilla";
  r.length = 16;
  r.d_model = 8;
  r.heads = 2;
  r.trials = 5;
  r.median_seconds = 0.25;
  r.iqr_seconds = 0.125;
  r.peak_bytes = 100;
  report({r, r}, path);
  r.variant = "las";
  report({r}, path);
  const auto l = lines(path);
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], kBenchHeader);
  EXPECT_EQ(l[1], "1,vanilla,16,8,2,0,5,0.25,0.125,100");
  EXPECT_EQ(l[3], "2,las,16,8,2,0,5,0.25,0.125,100");
}

}  // namespace
}  // namespace lasattn
