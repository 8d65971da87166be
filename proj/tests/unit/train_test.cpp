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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lasattn/checkpoint.hpp"
#include "lasattn/train.hpp"

namespace lasattn {
namespace {

namespace fs = std::filesystem;

ModelConfig tiny_model() {
  ModelConfig m;
  m.depth = 1;
  m.ffn_multiplier = 2;
  m.attention.d_model = 16;
  m.attention.heads = 2;
  m.attention.variant = Variant::kLas;
  return m;
}

data::Split copy_split(int length, int examples, std::uint64_t seed = 1) {
  data::TaskSpec t;
  t.length = length;
  t.num_examples = examples;
  return data::split(data::gen_selective_copy(t, seed), 0.8);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

ModelParams<double> scalar_params(double value) {
  ModelParams<double> p;
  p.embedding = MatrixD::Constant(1, 1, value);
  return p;
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto p = init_params<double>(tiny_model(), 1);
  const auto before = p;
  auto state = OptimizerState<double>::init(p, 0.1, 0.0);
  for (int i = 0; i < 3; ++i) adam_step(state, p, p.zeros_like());
  EXPECT_EQ(p.embedding, before.embedding);
  EXPECT_EQ(p.layers[0].wq, before.layers[0].wq);
  EXPECT_EQ(state.step, 3);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = scalar_params(0.5);
  auto state = OptimizerState<double>::init(p, 0.1, 0.0);
  adam_step(state, p, scalar_params(1.0));
  EXPECT_NEAR(p.embedding(0, 0) - 0.5, -0.1, 1e-6);
  auto q = scalar_params(0.5);
  auto s2 = OptimizerState<double>::init(q, 0.1, 0.0);
  adam_step(s2, q, scalar_params(-40.0));
  EXPECT_NEAR(q.embedding(0, 0) - 0.5, 0.1, 1e-6);
}

TEST(Adam, DecoupledDecayAppliedFirst) {
  auto p = scalar_params(2.0);
  auto state = OptimizerState<double>::init(p, 0.1, 0.5);
  adam_step(state, p, scalar_params(0.0));
  EXPECT_DOUBLE_EQ(p.embedding(0, 0), 2.0 * (1.0 - 0.05));
}

TEST(Adam, NonFiniteGradientNamesTensor) {
  auto p = init_params<double>(tiny_model(), 1);
  auto g = p.zeros_like();
  g.layers[0].ffn_w2(0, 0) = std::numeric_limits<double>::quiet_NaN();
  auto state = OptimizerState<double>::init(p, 0.1, 0.0);
  try {
    adam_step(state, p, g);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer0.ffn_w2"), std::string::npos);
  }
}

TEST(Clip, GlobalNormBound) {
  Rng rng(2);
  auto g = init_params<double>(tiny_model(), 3);
  g.visit([&](const std::string&, MatrixD& m) { m = random_uniform<double>(m.rows(), m.cols(), -5, 5, rng); });
  const double before = clip_global_norm(g, 1.0);
  EXPECT_GT(before, 1.0);
  EXPECT_LE(global_norm(g), 1.0 + 1e-6);
  auto small = g;
  small.visit([](const std::string&, MatrixD& m) { m *= 1e-3; });
  const auto copy = small;
  clip_global_norm(small, 1.0);
  EXPECT_EQ(small.embedding, copy.embedding);
}

TEST(Train, MetricsAreBitwiseReproducible) {
  const auto split = copy_split(16, 200);
  ModelConfig m = fit_to_dataset(tiny_model(), split.train);
  TrainConfig c;
  c.epochs = 2;
  c.record_timing = false;
  const fs::path dir = fs::temp_directory_path() / "lasattn_train_test";
  write_metrics_csv(dir / "a.csv", train(m, split, c, 7).metrics);
  write_metrics_csv(dir / "b.csv", train(m, split, c, 7).metrics);
  const std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), "epoch,split,loss,accuracy,seconds");
  write_metrics_csv(dir / "c.csv", train(m, split, c, 8).metrics);
  EXPECT_NE(a, slurp(dir / "c.csv"));
}

TEST(Train, ThreadCountDoesNotChangeResults) {
  const auto split = copy_split(12, 120);
  ModelConfig m = fit_to_dataset(tiny_model(), split.train);
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 16;
  c.record_timing = false;
  const auto one = train(m, split, c, 3);
  c.threads = 3;
  const auto three = train(m, split, c, 3);
  EXPECT_EQ(one.batch_losses, three.batch_losses);
  EXPECT_EQ(one.params.layers[0].wq, three.params.layers[0].wq);
}

TEST(Train, ThreadsCappedByEnvironment) {
  ::setenv("LASATTN_THREADS", "2", 1);
  EXPECT_EQ(resolve_threads(8), 2);
  EXPECT_EQ(resolve_threads(1), 1);
  ::unsetenv("LASATTN_THREADS");
  EXPECT_EQ(resolve_threads(8), 8);
}

TEST(Train, AddingLossFallsWithinOneEpoch) {
  data::TaskSpec t;
  t.task = data::Task::kAdding;
  t.length = 16;
  t.num_examples = 125;
  const auto split = data::split(data::make_dataset(t, 4), 0.8);
  ModelConfig m = fit_to_dataset(tiny_model(), split.train);
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 10;
  c.learning_rate = 3e-3;
  const auto r = train(m, split, c, 4);
  const auto& l = r.batch_losses;
  ASSERT_EQ(l.size(), 10u);
  // Least-squares slope of batch loss against step.
  const double n = l.size(), mx = (n - 1) / 2;
  const double my = std::accumulate(l.begin(), l.end(), 0.0) / n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    num += (i - mx) * (l[i] - my);
    den += (i - mx) * (i - mx);
  }
  EXPECT_LT(num / den, 0.0);
}

TEST(Train, ShuffledLabelsStayNearChance) {
  data::TaskSpec t;
  t.length = 16;
  t.num_examples = 2000;
  const auto shuffled = data::shuffle_labels(data::gen_selective_copy(t, 5), 6);
  const auto split = data::split(shuffled, 0.5);
  ModelConfig m = fit_to_dataset(tiny_model(), split.train);
  TrainConfig c;
  c.epochs = 3;
  const auto r = train(m, split, c, 5);
  EXPECT_NEAR(r.metrics.final_accuracy("val"), 1.0 / 8, 0.05);
}

TEST(Train, RejectsMismatchedModel) {
  const auto split = copy_split(16, 40);
  ModelConfig m = tiny_model();
  m.vocab_size = 4;
  EXPECT_THROW(train(m, split, TrainConfig{}, 1), ParameterError);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(train(fit_to_dataset(m, split.train), split, bad, 1), ParameterError);
}

TEST(Sweep, FullChunkAndFullFractionReproduceBaseline) {
  const auto split = copy_split(16, 100);
  ModelConfig m = fit_to_dataset(tiny_model(), split.train);
  TrainConfig c;
  c.epochs = 1;
  c.record_timing = false;
  const double base = train(m, split, c, 2).metrics.final_accuracy();
  const auto chunk = sweep_chunk(m, split, c, {16}, {2});
  ASSERT_EQ(chunk.size(), 1u);
  EXPECT_EQ(chunk[0].accuracy, base);
  const auto frac = sweep_data(m, split, c, {1.0}, {2});
  EXPECT_EQ(frac[0].accuracy, base);
  const fs::path path = fs::temp_directory_path() / "lasattn_train_test" / "sweep.csv";
  write_sweep_csv(path, "chunk", chunk);
  EXPECT_EQ(slurp(path).substr(0, 20), "chunk,seed,accuracy\n");
}

TEST(Sweep, MonotoneShare) {
  const std::vector<SweepRow> rows{{0.1, 1, 0.2}, {0.5, 1, 0.3}, {1.0, 1, 0.4},
                                   {0.1, 2, 0.5}, {0.5, 2, 0.3}, {1.0, 2, 0.6}};
  EXPECT_DOUBLE_EQ(monotone_share(rows), 0.5);
  EXPECT_DOUBLE_EQ(monotone_share({{1, 1, 0.3}, {2, 1, 0.1}}, true), 1.0);
}

TEST(Checkpoint, RoundTrip) {
  const ModelConfig m = tiny_model();
  const auto p = init_params<float>(m, 11);
  const fs::path path = fs::temp_directory_path() / "lasattn_train_test" / "model.ckpt";
  save_checkpoint(path, p, {{"seed", 11}});
  auto back = init_params<float>(m, 12);
  load_checkpoint(path, back);
  EXPECT_EQ(back.layers[0].ffn_w1, p.layers[0].ffn_w1);
  EXPECT_EQ(back.classifier_b, p.classifier_b);
  EXPECT_EQ(checkpoint_meta(path)["seed"], 11);
  ModelConfig deeper = m;
  deeper.depth = 2;
  auto wrong = init_params<float>(deeper, 1);
  EXPECT_THROW(load_checkpoint(path, wrong), FormatError);
}

}  // namespace
}  // namespace lasattn
