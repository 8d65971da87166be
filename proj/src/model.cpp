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

#include "lasattn/model.hpp"

#include <cmath>
#include <memory>

#include "lasattn/tape.hpp"

namespace lasattn {

void ModelConfig::validate() const {
  attention.validate();
  if (depth < 0) throw ParameterError("model: depth must be >= 0");
  if (ffn_multiplier < 1) throw ParameterError("model: ffn_multiplier must be >= 1");
  if (vocab_size < 1) throw ParameterError("model: vocab_size must be >= 1");
  if (num_classes < 2) throw ParameterError("model: num_classes must be >= 2");
  if (max_length < 1) throw ParameterError("model: max_length must be >= 1");
  if (readout < -1 || readout >= max_length) throw ParameterError("model: readout out of range");
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model();
  const std::size_t hidden = d * c.ffn_multiplier;
  const std::size_t per_layer = 4 * d * d            // wq, wk, wv, wo
                                + 2 * 2 * d          // two layer norms
                                + d * hidden + hidden  // ffn in
                                + hidden * d + d;    // ffn out
  std::size_t total = c.vocab_size * d + c.max_length * d + c.depth * per_layer;
  if (c.prenorm) total += 2 * d;
  total += d * c.num_classes + c.num_classes;
  return total;
}

template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int d = config.d_model();
  const int hidden = d * config.ffn_multiplier;
  auto uniform = [&](int fan_in, int fan_out) {
    const Scalar s = Scalar(1) / std::sqrt(static_cast<Scalar>(fan_in));
    return random_uniform<Scalar>(fan_in, fan_out, -s, s, rng);
  };
  ModelParams<Scalar> p;
  p.embedding = random_normal<Scalar>(config.vocab_size, d, Scalar(0), Scalar(0.02), rng);
  p.positional = random_normal<Scalar>(config.max_length, d, Scalar(0), Scalar(0.02), rng);
  for (int l = 0; l < config.depth; ++l) {
    LayerParams<Scalar> layer;
    layer.wq = uniform(d, d);
    layer.wk = uniform(d, d);
    layer.wv = uniform(d, d);
    layer.wo = uniform(d, d);
    layer.ln1_gamma = Matrix<Scalar>::Ones(1, d);
    layer.ln1_beta = Matrix<Scalar>::Zero(1, d);
    layer.ffn_w1 = uniform(d, hidden);
    layer.ffn_b1 = Matrix<Scalar>::Zero(1, hidden);
    layer.ffn_w2 = uniform(hidden, d);
    layer.ffn_b2 = Matrix<Scalar>::Zero(1, d);
    layer.ln2_gamma = Matrix<Scalar>::Ones(1, d);
    layer.ln2_beta = Matrix<Scalar>::Zero(1, d);
    p.layers.push_back(std::move(layer));
  }
  if (config.prenorm) {
    p.final_gamma = Matrix<Scalar>::Ones(1, d);
    p.final_beta = Matrix<Scalar>::Zero(1, d);
  }
  p.classifier_w = uniform(d, config.num_classes);
  p.classifier_b = Matrix<Scalar>::Zero(1, config.num_classes);
  return p;
}

namespace {

template <typename Scalar>
struct Graph {
  Tape<Scalar> tape;
  typename Tape<Scalar>::Var logits;
};

template <typename Scalar>
Graph<Scalar> build_graph(const ModelParams<Scalar>& p, const std::vector<int>& tokens,
                          const ModelConfig& config, ModelParams<Scalar>* grads) {
  using Var = typename Tape<Scalar>::Var;
  const auto len = static_cast<Eigen::Index>(tokens.size());
  if (len < 1) throw InputError("forward: empty sequence");
  if (len > config.max_length) {
    throw InputError("forward: sequence length " + std::to_string(len) + " exceeds max_length " +
                     std::to_string(config.max_length));
  }
  const Eigen::Index readout = config.readout < 0 ? len - 1 : config.readout;
  if (readout >= len) throw InputError("forward: readout position beyond the sequence");

  Graph<Scalar> g;
  Tape<Scalar>& t = g.tape;
  auto param = [&](const Matrix<Scalar>& value, Matrix<Scalar>* sink) {
    return t.parameter(value, grads ? sink : nullptr);
  };
  auto plan = std::make_shared<const AttentionPlan<Scalar>>(config.attention, len);

  Var x = t.add(t.gather_rows(param(p.embedding, grads ? &grads->embedding : nullptr), tokens),
                t.slice_rows(param(p.positional, grads ? &grads->positional : nullptr), 0, len));

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& w = p.layers[l];
    LayerParams<Scalar>* gw = grads ? &grads->layers[l] : nullptr;
    auto sink = [&](Matrix<Scalar> LayerParams<Scalar>::*member) {
      return gw ? &(gw->*member) : nullptr;
    };
    auto attend = [&](Var in) {
      return t.attention(in, param(w.wq, sink(&LayerParams<Scalar>::wq)),
                         param(w.wk, sink(&LayerParams<Scalar>::wk)),
                         param(w.wv, sink(&LayerParams<Scalar>::wv)),
                         param(w.wo, sink(&LayerParams<Scalar>::wo)), plan);
    };
    auto ffn = [&](Var in) {
      Var h = t.relu(t.add_row_bias(t.matmul(in, param(w.ffn_w1, sink(&LayerParams<Scalar>::ffn_w1))),
                                    param(w.ffn_b1, sink(&LayerParams<Scalar>::ffn_b1))));
      return t.add_row_bias(t.matmul(h, param(w.ffn_w2, sink(&LayerParams<Scalar>::ffn_w2))),
                            param(w.ffn_b2, sink(&LayerParams<Scalar>::ffn_b2)));
    };
    auto norm1 = [&](Var in) {
      return t.layer_norm(in, param(w.ln1_gamma, sink(&LayerParams<Scalar>::ln1_gamma)),
                          param(w.ln1_beta, sink(&LayerParams<Scalar>::ln1_beta)));
    };
    auto norm2 = [&](Var in) {
      return t.layer_norm(in, param(w.ln2_gamma, sink(&LayerParams<Scalar>::ln2_gamma)),
                          param(w.ln2_beta, sink(&LayerParams<Scalar>::ln2_beta)));
    };
    if (config.prenorm) {
      x = t.add(x, attend(norm1(x)));
      x = t.add(x, ffn(norm2(x)));
    } else {
      x = norm1(t.add(x, attend(x)));
      x = norm2(t.add(x, ffn(x)));
    }
  }
  if (config.prenorm && p.final_gamma.size() > 0) {
    x = t.layer_norm(x, param(p.final_gamma, grads ? &grads->final_gamma : nullptr),
                     param(p.final_beta, grads ? &grads->final_beta : nullptr));
  }
  Var r = t.slice_rows(x, readout, 1);
  g.logits = t.add_row_bias(t.matmul(r, param(p.classifier_w, grads ? &grads->classifier_w : nullptr)),
                            param(p.classifier_b, grads ? &grads->classifier_b : nullptr));
  return g;
}

}  // namespace

template <typename Scalar>
Matrix<Scalar> forward(const ModelParams<Scalar>& params, const std::vector<int>& tokens,
                       const ModelConfig& config) {
  auto g = build_graph<Scalar>(params, tokens, config, nullptr);
  return g.tape.value(g.logits);
}

template <typename Scalar>
Scalar loss_and_grad(const ModelParams<Scalar>& params, const std::vector<int>& tokens, int label,
                     const ModelConfig& config, ModelParams<Scalar>* grads,
                     Matrix<Scalar>* logits) {
  auto g = build_graph(params, tokens, config, grads);
  auto loss = g.tape.cross_entropy(g.logits, label);
  if (logits) *logits = g.tape.value(g.logits);
  if (grads) g.tape.backward(loss);
  return g.tape.value(loss)(0, 0);
}

template <typename Scalar>
std::vector<std::vector<MatrixD>> attention_maps(const ModelParams<Scalar>& params,
                                                 const std::vector<int>& tokens,
                                                 const ModelConfig& config) {
  auto g = build_graph<Scalar>(params, tokens, config, nullptr);
  const AttentionPlan<Scalar> plan(config.attention, static_cast<Eigen::Index>(tokens.size()));
  std::vector<std::vector<MatrixD>> maps;
  for (const auto& cache : g.tape.attention_caches()) {
    std::vector<MatrixD> layer;
    for (int h = 0; h < config.heads(); ++h)
      layer.push_back(attention_map(plan, *cache, h).template cast<double>());
    maps.push_back(std::move(layer));
  }
  return maps;
}

#define LASATTN_INSTANTIATE(Scalar)                                                             \
  template ModelParams<Scalar> init_params<Scalar>(const ModelConfig&, std::uint64_t);          \
  template Matrix<Scalar> forward<Scalar>(const ModelParams<Scalar>&, const std::vector<int>&,  \
                                          const ModelConfig&);                                  \
  template Scalar loss_and_grad<Scalar>(const ModelParams<Scalar>&, const std::vector<int>&,   \
                                        int, const ModelConfig&, ModelParams<Scalar>*,          \
                                        Matrix<Scalar>*);                                       \
  template std::vector<std::vector<MatrixD>> attention_maps<Scalar>(                            \
      const ModelParams<Scalar>&, const std::vector<int>&, const ModelConfig&);

LASATTN_INSTANTIATE(float)
LASATTN_INSTANTIATE(double)
LASATTN_INSTANTIATE(long double)

#undef LASATTN_INSTANTIATE

}  // namespace lasattn
