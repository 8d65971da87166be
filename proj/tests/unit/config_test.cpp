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

#include "lasattn/config.hpp"

namespace lasattn {
namespace {

using nlohmann::json;

std::string rejected_key(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const SchemaError& e) {
    return e.key();
  }
  return "<accepted>";
}

TEST(RunConfig, DefaultsParseFromEmptyObject) {
  const RunConfig rc = parse_run_config(json::object());
  EXPECT_EQ(rc.model.depth, 2);
  EXPECT_EQ(rc.model.attention.d_model, 64);
  EXPECT_EQ(rc.model.attention.heads, 8);
  EXPECT_EQ(rc.task.task, data::Task::kSelectiveCopy);
  EXPECT_EQ(rc.train.batch_size, 32);
}

TEST(RunConfig, ImageRowAccepted) {
  const RunConfig rc = parse_run_config(
      {{"attention", {{"variant", "las"}, {"pool_window", 3}, {"decay_bound", 0.001}}}});
  EXPECT_EQ(rc.model.attention.variant, Variant::kLas);
  EXPECT_EQ(rc.model.attention.pool_window, 3);
  EXPECT_DOUBLE_EQ(rc.model.attention.decay_bound, 0.001);
}

TEST(RunConfig, OutOfRangeValuesNameTheKey) {
  EXPECT_EQ(rejected_key({{"attention", {{"decay_bound", 1.5}}}}), "attention.decay_bound");
  EXPECT_EQ(rejected_key({{"attention", {{"decay_bound", 0.0}}}}), "attention.decay_bound");
  EXPECT_EQ(rejected_key({{"attention", {{"pool_window", 4}}}}), "attention.pool_window");
  EXPECT_EQ(rejected_key({{"attention", {{"heads", 3}}}}), "attention.d_model");
  EXPECT_EQ(rejected_key({{"train", {{"epochs", 0}}}}), "train.epochs");
  EXPECT_EQ(rejected_key({{"task", {{"train_fraction", 1.0}}}}), "task.train_fraction");
  EXPECT_EQ(rejected_key({{"sweep", {{"fractions", {0.5, 2.0}}}}}), "sweep.fractions[1]");
  EXPECT_EQ(rejected_key({{"bench", {{"trials", 3}}}}), "bench.trials");
}

TEST(RunConfig, UnknownKeysAndTypesRejected) {
  EXPECT_EQ(rejected_key({{"attention", {{"decay_bond", 0.01}}}}), "attention.decay_bond");
  EXPECT_EQ(rejected_key({{"learning_rate", 0.01}}), "learning_rate");
  EXPECT_EQ(rejected_key({{"train", {{"epochs", 2.5}}}}), "train.epochs");
  EXPECT_EQ(rejected_key({{"attention", {{"variant", "linear"}}}}), "attention.variant");
  EXPECT_EQ(rejected_key({{"model", 3}}), "model");
  EXPECT_EQ(rejected_key({{"preset", "imagenet"}}), "preset");
  EXPECT_EQ(rejected_key({{"task", {{"name", "smnist"}}}}), "task.images");
}

TEST(RunConfig, RoundTripThroughJson) {
  RunConfig rc = preset("listops");
  rc.vocab_size = 20;
  rc.model.attention.alibi_slope = 0.25;
  rc.sweep.seeds = {4, 5};
  const json doc = to_json(rc);
  EXPECT_EQ(to_json(parse_run_config(doc)), doc);
}

TEST(RunConfig, PresetsAndOverrides) {
  const auto names = preset_names();
  EXPECT_EQ(names.size(), 10u);
  for (const auto& n : names) EXPECT_EQ(preset(n).preset, n);
  const RunConfig image = preset("image");
  EXPECT_EQ(image.model.depth, 6);
  EXPECT_EQ(image.model.attention.d_model, 256);
  EXPECT_FALSE(image.model.prenorm);
  EXPECT_EQ(image.train.epochs, 100);
  EXPECT_EQ(image.model.attention.pool_window, 3);
  const RunConfig text = preset("text");
  EXPECT_DOUBLE_EQ(text.model.attention.decay_bound, 0.0001);
  EXPECT_EQ(text.model.attention.pool_window, 5);
  const RunConfig grid = preset("grid-b0.0001-p3");
  EXPECT_DOUBLE_EQ(grid.model.attention.decay_bound, 0.0001);
  EXPECT_EQ(grid.model.attention.pool_window, 3);
  const RunConfig over = parse_run_config({{"preset", "image"}, {"model", {{"depth", 2}}}});
  EXPECT_EQ(over.model.depth, 2);
  EXPECT_EQ(over.model.attention.d_model, 256);
}

TEST(RunConfig, ResolveModelFromDataset) {
  RunConfig rc;
  rc.num_classes = 12;
  data::SequenceDataset d;
  d.vocab_size = 14;
  d.num_classes = 8;
  d.max_length = 64;
  const ModelConfig m = rc.resolve_model(d);
  EXPECT_EQ(m.vocab_size, 14);
  EXPECT_EQ(m.num_classes, 12);
  EXPECT_EQ(m.max_length, 64);
  EXPECT_EQ(model_from_json(to_json(m)).num_classes, 12);
  EXPECT_THROW(model_from_json(json{{"model", {{"depth", 1}}}}), SchemaError);
}

TEST(RunConfig, WritesResolvedFile) {
  const auto dir = std::filesystem::temp_directory_path() / "lasattn_config_test";
  RunConfig rc;
  rc.seed = 77;
  write_run_config(dir, rc);
  EXPECT_EQ(load_run_config(dir / "run_config.json").seed, 77u);
  std::ofstream(dir / "broken.json") << "{";
  EXPECT_THROW(load_run_config(dir / "broken.json"), SchemaError);
}

}  // namespace
}  // namespace lasattn
