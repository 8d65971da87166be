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

#include "lasattn/grad_check.hpp"
#include "lasattn/model.hpp"

namespace lasattn {
namespace {

ModelConfig small_config(Variant variant) {
  ModelConfig c;
  c.depth = 2;
  c.ffn_multiplier = 2;
  c.vocab_size = 6;
  c.num_classes = 3;
  c.max_length = 8;
  c.attention.heads = 2;
  c.attention.d_model = 8;
  c.attention.variant = variant;
  c.attention.decay_bound = 0.3;
  return c;
}

std::vector<MatrixD> flatten(const ModelParams<double>& p) {
  std::vector<MatrixD> out;
  p.visit([&](const std::string&, const MatrixD& m) { out.push_back(m); });
  return out;
}

ModelParams<double> unflatten(ModelParams<double> layout, const std::vector<MatrixD>& list) {
  std::size_t i = 0;
  layout.visit([&](const std::string&, MatrixD& m) { m = list.at(i++); });
  return layout;
}

TEST(Model, DepthZeroBypass) {
  ModelConfig c = small_config(Variant::kLas);
  c.depth = 0;
  const auto p = init_params<double>(c, 1);
  EXPECT_TRUE(p.layers.empty());
  const MatrixD logits = forward(p, {1, 2, 3}, c);
  EXPECT_EQ(logits.rows(), 1);
  EXPECT_EQ(logits.cols(), 3);
  EXPECT_TRUE(logits.allFinite());
}

TEST(Model, Deterministic) {
  const ModelConfig c = small_config(Variant::kLas);
  const auto p = init_params<double>(c, 3);
  const std::vector<int> tokens{0, 5, 2, 2, 1};
  EXPECT_EQ(forward(p, tokens, c), forward(p, tokens, c));
}

TEST(Model, BadInputs) {
  const ModelConfig c = small_config(Variant::kVanilla);
  const auto p = init_params<double>(c, 3);
  EXPECT_THROW(forward(p, {0, 6}, c), InputError);
  EXPECT_THROW(forward(p, {0, -1}, c), InputError);
  EXPECT_THROW(forward(p, {}, c), InputError);
  EXPECT_THROW(forward(p, std::vector<int>(9, 0), c), InputError);
}

TEST(Model, GradientsMatchFiniteDifferences) {
  for (Variant v : {Variant::kVanilla, Variant::kLas}) {
    for (bool prenorm : {true, false}) {
      ModelConfig c = small_config(v);
      c.prenorm = prenorm;
      const auto p = init_params<double>(c, 17);
      const std::vector<int> tokens{3, 1, 4, 1, 5, 0, 2, 5};
      const int label = 2;
      ModelParams<double> grads = p.zeros_like();
      loss_and_grad(p, tokens, label, c, &grads);
      const double err = finite_diff_check(
          [&](const std::vector<MatrixD>& in) {
            // Extended precision keeps the difference quotient clear of
            // 64-bit roundoff on gradients of order 1e-7.
            return loss_and_grad(unflatten(p, in).cast<long double>(), tokens, label, c,
                                 static_cast<ModelParams<long double>*>(nullptr));
          },
          flatten(p), flatten(grads));
      EXPECT_LT(err, 1e-4) << to_string(v) << " prenorm=" << prenorm;
    }
  }
}

TEST(Model, ParameterCountClosedForm) {
  ModelConfig c;
  c.depth = 2;
  c.attention.d_model = 64;
  c.attention.heads = 8;
  c.vocab_size = 16;
  c.num_classes = 10;
  c.max_length = 128;
  const std::size_t d = 64, h = 256;
  const std::size_t per_layer = 4 * d * d + 4 * d + d * h + h + h * d + d;
  const std::size_t want = 16 * d + 128 * d + 2 * per_layer + 2 * d + d * 10 + 10;
  EXPECT_EQ(parameter_count(c), want);
  EXPECT_EQ(init_params<float>(c, 0).count(), want);
}

TEST(Model, LasAddsNoParameters) {
  ModelConfig las = small_config(Variant::kLas);
  ModelConfig vanilla = small_config(Variant::kVanilla);
  EXPECT_EQ(parameter_count(las), parameter_count(vanilla));
  EXPECT_EQ(init_params<double>(las, 0).count(), init_params<double>(vanilla, 0).count());
}

TEST(Model, InitIsSeededAndBounded) {
  const ModelConfig c = small_config(Variant::kLas);
  const auto a = init_params<float>(c, 42);
  const auto b = init_params<float>(c, 42);
  const auto other = init_params<float>(c, 43);
  const auto la = flatten(a.cast<double>()), lb = flatten(b.cast<double>());
  ASSERT_EQ(la.size(), lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(la[i], lb[i]);
  EXPECT_NE(a.embedding, other.embedding);
  for (const auto& layer : a.layers) {
    const float s = 1.0f / std::sqrt(8.0f);
    EXPECT_LE(layer.wq.cwiseAbs().maxCoeff(), s);
    EXPECT_LE(layer.ffn_w1.cwiseAbs().maxCoeff(), s);
    EXPECT_LE(layer.ffn_w2.cwiseAbs().maxCoeff(), 1.0f / std::sqrt(16.0f));
  }
}

TEST(Model, SuffixDoesNotReachInteriorReadout) {
  Rng rng(4);
  std::uniform_int_distribution<int> token(0, 5);
  for (Variant v : {Variant::kVanilla, Variant::kAlibi, Variant::kLocal, Variant::kSmooth,
                    Variant::kLas}) {
    ModelConfig c = small_config(v);
    c.readout = 3;
    const auto p = init_params<double>(c, 9);
    std::vector<int> tokens(8);
    for (int& t : tokens) t = token(rng);
    const MatrixD base = forward(p, tokens, c);
    for (int trial = 0; trial < 10; ++trial) {
      auto changed = tokens;
      for (std::size_t i = 4; i < changed.size(); ++i) changed[i] = token(rng);
      EXPECT_EQ(forward(p, changed, c), base) << to_string(v);
    }
  }
}

TEST(Model, LasWithoutDecayOrPoolingIsVanilla) {
  ModelConfig las = small_config(Variant::kLas);
  las.attention.heads = 1;
  las.attention.head0_vanilla = false;
  las.attention.pool_window = 1;
  ModelConfig vanilla = las;
  vanilla.attention.variant = Variant::kVanilla;
  const auto p = init_params<double>(las, 5);
  const std::vector<int> tokens{1, 2, 3, 4, 5, 0, 1};
  EXPECT_LT((forward(p, tokens, las) - forward(p, tokens, vanilla)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Model, AttentionMapsShape) {
  const ModelConfig c = small_config(Variant::kLas);
  const auto p = init_params<double>(c, 5);
  const auto maps = attention_maps(p, {1, 2, 3, 4}, c);
  ASSERT_EQ(maps.size(), 2u);
  ASSERT_EQ(maps[0].size(), 2u);
  EXPECT_EQ(maps[1][1].rows(), 4);
  EXPECT_EQ(maps[1][1].cols(), 4);
}

}  // namespace
}  // namespace lasattn
