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
#include <string>
#include <vector>

#include "lasattn/attention.hpp"
#include "lasattn/tensor.hpp"

namespace lasattn {

/// Causal transformer classifier. Width and head count live in `attention`.
struct ModelConfig {
  int depth = 2;
  int ffn_multiplier = 4;
  bool prenorm = true;
  int vocab_size = 16;
  int num_classes = 8;
  int max_length = 128;
  int readout = -1;  // token position fed to the classifier, -1 = last
  AttentionConfig attention;

  int d_model() const { return attention.d_model; }
  int heads() const { return attention.heads; }
  void validate() const;
};

template <typename Scalar>
struct LayerParams {
  Matrix<Scalar> wq, wk, wv, wo;
  Matrix<Scalar> ln1_gamma, ln1_beta;
  Matrix<Scalar> ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Matrix<Scalar> ln2_gamma, ln2_beta;
};

template <typename Scalar>
struct ModelParams {
  Matrix<Scalar> embedding;   // vocab x d
  Matrix<Scalar> positional;  // max_length x d
  std::vector<LayerParams<Scalar>> layers;
  Matrix<Scalar> final_gamma, final_beta;  // empty unless prenorm
  Matrix<Scalar> classifier_w, classifier_b;

  /// Calls f(name, matrix) for every non-empty tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Matrix<Scalar>& m) { n += m.size(); });
    return n;
  }

  /// Same layout, every entry zero.
  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.visit([](const std::string&, Matrix<Scalar>& m) { m.setZero(); });
    return z;
  }

  template <typename Other>
  ModelParams<Other> cast() const;

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("embedding"), self.embedding);
    f(std::string("positional"), self.positional);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& p = self.layers[l];
      const std::string pre = "layer" + std::to_string(l) + ".";
      f(pre + "wq", p.wq);
      f(pre + "wk", p.wk);
      f(pre + "wv", p.wv);
      f(pre + "wo", p.wo);
      f(pre + "ln1_gamma", p.ln1_gamma);
      f(pre + "ln1_beta", p.ln1_beta);
      f(pre + "ffn_w1", p.ffn_w1);
      f(pre + "ffn_b1", p.ffn_b1);
      f(pre + "ffn_w2", p.ffn_w2);
      f(pre + "ffn_b2", p.ffn_b2);
      f(pre + "ln2_gamma", p.ln2_gamma);
      f(pre + "ln2_beta", p.ln2_beta);
    }
    if (self.final_gamma.size() > 0) {
      f(std::string("final_gamma"), self.final_gamma);
      f(std::string("final_beta"), self.final_beta);
    }
    f(std::string("classifier_w"), self.classifier_w);
    f(std::string("classifier_b"), self.classifier_b);
  }
};

template <typename Scalar>
template <typename Other>
ModelParams<Other> ModelParams<Scalar>::cast() const {
  ModelParams<Other> out;
  out.layers.resize(layers.size());
  std::vector<const Matrix<Scalar>*> src;
  visit([&](const std::string&, const Matrix<Scalar>& m) { src.push_back(&m); });
  // Empty final-norm slots are skipped by visit, so size them first.
  if (final_gamma.size() > 0) {
    out.final_gamma.resize(1, 1);
    out.final_beta.resize(1, 1);
  }
  std::size_t i = 0;
  out.visit([&](const std::string&, Matrix<Other>& m) { m = src.at(i++)->template cast<Other>(); });
  return out;
}

/// Closed-form number of learnable scalars for `config`.
std::size_t parameter_count(const ModelConfig& config);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, unit norm
/// scales, N(0, 0.02) embedding and positional tables.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed);

/// Logits (1 x num_classes) for one token sequence.
template <typename Scalar>
Matrix<Scalar> forward(const ModelParams<Scalar>& params, const std::vector<int>& tokens,
                       const ModelConfig& config);

/// Cross-entropy loss of `label`; parameter gradients are added into `grads`
/// (which must have the layout of `params`) when non-null.
template <typename Scalar>
Scalar loss_and_grad(const ModelParams<Scalar>& params, const std::vector<int>& tokens, int label,
                     const ModelConfig& config, ModelParams<Scalar>* grads,
                     Matrix<Scalar>* logits = nullptr);

/// Attention matrices of every layer and head, [layer][head], each L x L.
template <typename Scalar>
std::vector<std::vector<MatrixD>> attention_maps(const ModelParams<Scalar>& params,
                                                 const std::vector<int>& tokens,
                                                 const ModelConfig& config);

}  // namespace lasattn
