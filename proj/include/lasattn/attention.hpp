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

// Causal attention heads with an exponentially decaying locality mask (ELD)
// and row smoothing by average pooling, plus the vanilla / Alibi / ablation
// variants and block-local (chunked) execution.
//
// Head pipeline, in order:
//   scores = Q K^T / sqrt(d_k)
//   [alibi]        scores -= m * D
//   [eld, scores]  scores *= exp(-alpha * D)
//   causal softmax (keys j > i get weight 0)
//   [eld, probs]   probs *= exp(-alpha * D)
//   [pool]         1-D average pooling of every row, window P, zero padded
//   [strict]       weights on keys j > i re-zeroed
//   [renormalize]  rows rescaled to sum to one
//   out = weights V
// D is the causal distance matrix, D[i][j] = i - j below the diagonal.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lasattn/ops.hpp"
#include "lasattn/tensor.hpp"

namespace lasattn {

enum class Variant { kVanilla, kAlibi, kLocal, kSmooth, kLas };
enum class EldMode { kScoreScale, kProbScale };

std::string_view to_string(Variant v);
std::string_view to_string(EldMode m);
Variant parse_variant(std::string_view name);
EldMode parse_eld_mode(std::string_view name);

struct AttentionConfig {
  int heads = 8;
  int d_model = 64;
  Variant variant = Variant::kLas;
  double decay_bound = 0.001;  // B, in (0, 1)
  int pool_window = 3;         // P, odd
  int chunk_size = 0;          // 0 means full attention
  EldMode eld_mode = EldMode::kScoreScale;
  bool strict_causal = true;
  bool renormalize_rows = false;
  bool head0_vanilla = true;
  // Alibi only: one slope for every head instead of the geometric ladder.
  std::optional<double> alibi_slope;

  int d_k() const { return d_model / heads; }
  /// Throws ParameterError when an invariant is violated.
  void validate() const;
};

/// D[i][j] = i - j for i >= j, 0 above the diagonal.
template <typename Scalar = double>
Matrix<Scalar> build_distance_matrix(Eigen::Index length) {
  if (length < 1) throw ParameterError("build_distance_matrix: length must be >= 1");
  Matrix<Scalar> d = Matrix<Scalar>::Zero(length, length);
  for (Eigen::Index i = 0; i < length; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) d(i, j) = static_cast<Scalar>(i - j);
  return d;
}

/// exp(-alpha * D_L), stored by its first column since the matrix is Toeplitz.
template <typename Scalar>
class EldMask {
 public:
  EldMask(double alpha, Eigen::Index length) : alpha_(alpha), length_(length) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
      throw ParameterError("build_eld_mask: alpha must be finite and >= 0");
    }
    if (length < 1) throw ParameterError("build_eld_mask: length must be >= 1");
    decay_.resize(length);
    for (Eigen::Index t = 0; t < length; ++t)
      decay_(t) = static_cast<Scalar>(std::exp(-alpha * static_cast<double>(t)));
    decay_(0) = Scalar(1);
  }

  double alpha() const { return alpha_; }
  Eigen::Index length() const { return length_; }

  /// decay()(t) = exp(-alpha * t).
  const Vector<Scalar>& decay() const { return decay_; }

  /// Entry (i, j); above the diagonal D is 0 so the entry is 1.
  Scalar operator()(Eigen::Index i, Eigen::Index j) const {
    return j > i ? Scalar(1) : decay_(i - j);
  }

  /// Full L x L matrix, built on request.
  Matrix<Scalar> materialize() const {
    Matrix<Scalar> m(length_, length_);
    for (Eigen::Index i = 0; i < length_; ++i)
      for (Eigen::Index j = 0; j < length_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

 private:
  double alpha_;
  Eigen::Index length_;
  Vector<Scalar> decay_;
};

template <typename Scalar>
EldMask<Scalar> build_eld_mask(double alpha, Eigen::Index length) {
  return EldMask<Scalar>(alpha, length);
}

/// Per-head decay rates: alpha_0 = 0, exp(-alpha_c) = B * c / (H - 1).
std::vector<double> alpha_schedule(int heads, double decay_bound);

/// Alibi slopes m_h = 2^(-8 (h + 1) / H).
std::vector<double> alibi_slopes(int heads);

// ------------------------------------------------------------------ heads

/// Fully resolved recipe for one head.
template <typename Scalar>
struct HeadSpec {
  enum class Bias { kNone, kEldScores, kEldProbs, kAlibi };

  Bias bias = Bias::kNone;
  double rate = 0.0;  // alpha for ELD, slope for Alibi
  int pool_window = 1;
  bool strict_causal = true;
  bool renormalize = false;
  // profile(t) at distance t is stored reversed so that a row prefix of
  // length i + 1 lines up with a contiguous segment.
  Vector<Scalar> profile_rev;

  Eigen::Index capacity() const { return profile_rev.size(); }

  auto row_profile(Eigen::Index i) const {
    return profile_rev.segment(capacity() - 1 - i, i + 1);
  }
};

template <typename Scalar>
HeadSpec<Scalar> make_vanilla_head() {
  return HeadSpec<Scalar>{};
}

/// Head spec for one of the variants at decay rate / slope `rate`, able to
/// serve blocks of up to `capacity` tokens.
template <typename Scalar>
HeadSpec<Scalar> make_head_spec(Variant variant, double rate, int pool_window, EldMode mode,
                                bool strict_causal, bool renormalize, Eigen::Index capacity) {
  using Bias = typename HeadSpec<Scalar>::Bias;
  ops::check_pool_window(pool_window);
  if (capacity < 1) throw ParameterError("make_head_spec: capacity must be >= 1");
  HeadSpec<Scalar> spec;
  spec.rate = rate;
  spec.strict_causal = strict_causal;
  spec.renormalize = renormalize;
  const bool eld = variant == Variant::kLocal || variant == Variant::kLas;
  const bool pool = variant == Variant::kSmooth || variant == Variant::kLas;
  if (eld) spec.bias = mode == EldMode::kScoreScale ? Bias::kEldScores : Bias::kEldProbs;
  if (variant == Variant::kAlibi) spec.bias = Bias::kAlibi;
  if (pool) spec.pool_window = pool_window;

  spec.profile_rev.resize(capacity);
  if (spec.bias == Bias::kAlibi) {
    if (!std::isfinite(rate)) throw ParameterError("alibi slope must be finite");
    for (Eigen::Index t = 0; t < capacity; ++t)
      spec.profile_rev(capacity - 1 - t) = static_cast<Scalar>(-rate * static_cast<double>(t));
  } else if (spec.bias != Bias::kNone) {
    const EldMask<Scalar> mask(rate, capacity);
    spec.profile_rev = mask.decay().reverse();
  } else {
    spec.profile_rev.setZero();
  }
  return spec;
}

/// Values the backward pass needs from one head evaluation.
template <typename Scalar>
struct HeadCache {
  Matrix<Scalar> softmax;  // causal softmax output
  Matrix<Scalar> weights;  // final attention matrix multiplied into V
  Vector<Scalar> row_sums; // pre-renormalisation sums
};

template <typename Scalar>
struct HeadGrads {
  Matrix<Scalar> q;
  Matrix<Scalar> k;
  Matrix<Scalar> v;
};

namespace detail {

// In-place causal softmax of row prefix [0, i]; entries past i are zeroed.
template <typename Row>
void causal_softmax_row(Row&& row, Eigen::Index i) {
  using Scalar = typename std::decay_t<Row>::Scalar;
  auto seg = row.head(i + 1);
  const Scalar m = seg.maxCoeff();
  seg = (seg.array() - m).exp().matrix();
  seg /= seg.sum();
  row.tail(row.size() - i - 1).setZero();
}

}  // namespace detail

/// Attention matrix of one head for a block of L tokens (L x L, row-stochastic
/// before pooling). Writes the pipeline intermediates into `cache` if given.
template <typename Scalar>
Matrix<Scalar> attention_weights(const Matrix<Scalar>& q, const Matrix<Scalar>& k,
                                 const HeadSpec<Scalar>& spec, HeadCache<Scalar>* cache = nullptr) {
  using Bias = typename HeadSpec<Scalar>::Bias;
  const Eigen::Index len = q.rows();
  if (len < 1) throw ParameterError("attention_head: empty sequence");
  if (k.rows() != len || k.cols() != q.cols()) {
    throw DimensionError("attention_head: Q " + shape_str(q.rows(), q.cols()) + " vs K " +
                         shape_str(k.rows(), k.cols()));
  }
  if (spec.bias != Bias::kNone && spec.capacity() < len) {
    throw ParameterError("attention_head: head spec built for shorter sequences");
  }
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));

  Matrix<Scalar> w(len, len);
  w.noalias() = (q * k.transpose()) * scale;
  if (!w.allFinite()) throw NumericError("attention_head: non-finite attention scores");

  for (Eigen::Index i = 0; i < len; ++i) {
    auto row = w.row(i);
    if (spec.bias == Bias::kEldScores) {
      row.head(i + 1).array() *= spec.row_profile(i).transpose().array();
    } else if (spec.bias == Bias::kAlibi) {
      row.head(i + 1) += spec.row_profile(i).transpose();
    }
    detail::causal_softmax_row(row, i);
  }
  if (cache) cache->softmax = w;
  if (spec.bias == Bias::kEldProbs) {
    for (Eigen::Index i = 0; i < len; ++i)
      w.row(i).head(i + 1).array() *= spec.row_profile(i).transpose().array();
  }

  if (spec.pool_window > 1) {
    RowVector<Scalar> buf(len);
    for (Eigen::Index i = 0; i < len; ++i) {
      auto row = w.row(i);
      if (spec.strict_causal) {
        // Inputs beyond i are zero after the causal softmax, so pooling the
        // prefix alone gives the same values on keys 0..i.
        auto out = buf.head(i + 1);
        ops::pool_row_into(row.head(i + 1), out, spec.pool_window);
        row.head(i + 1) = out;
      } else {
        ops::pool_row_into(row, buf, spec.pool_window);
        row = buf;
      }
    }
  }
  if (spec.renormalize || cache) {
    Vector<Scalar> sums = w.rowwise().sum();
    if (spec.renormalize) w.array().colwise() /= sums.array();
    if (cache) cache->row_sums = std::move(sums);
  }
  if (cache) cache->weights = w;
  return w;
}

/// One attention head: weights(Q, K) * V.
template <typename Scalar>
Matrix<Scalar> attention_head(const Matrix<Scalar>& q, const Matrix<Scalar>& k,
                              const Matrix<Scalar>& v, const HeadSpec<Scalar>& spec,
                              HeadCache<Scalar>* cache = nullptr) {
  if (v.rows() != q.rows()) {
    throw DimensionError("attention_head: V has " + std::to_string(v.rows()) + " rows, Q has " +
                         std::to_string(q.rows()));
  }
  const Matrix<Scalar> w = attention_weights(q, k, spec, cache);
  Matrix<Scalar> out(q.rows(), v.cols());
  out.noalias() = w * v;
  return out;
}

template <typename Scalar>
HeadGrads<Scalar> attention_head_backward(const Matrix<Scalar>& q, const Matrix<Scalar>& k,
                                          const Matrix<Scalar>& v, const HeadSpec<Scalar>& spec,
                                          const HeadCache<Scalar>& cache,
                                          const Matrix<Scalar>& grad_out) {
  using Bias = typename HeadSpec<Scalar>::Bias;
  const Eigen::Index len = q.rows();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));

  HeadGrads<Scalar> g;
  g.v.noalias() = cache.weights.transpose() * grad_out;
  Matrix<Scalar> gw(len, len);
  gw.noalias() = grad_out * v.transpose();

  RowVector<Scalar> buf(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    auto row = gw.row(i);
    if (spec.renormalize) {
      const Scalar dot = row.dot(cache.weights.row(i));
      row = (row.array() - dot) / cache.row_sums(i);
    }
    if (spec.strict_causal) row.tail(len - i - 1).setZero();
    if (spec.pool_window > 1) {
      if (spec.strict_causal) {
        auto out = buf.head(i + 1);
        ops::pool_row_into(row.head(i + 1), out, spec.pool_window);
        row.head(i + 1) = out;
      } else {
        ops::pool_row_into(row, buf, spec.pool_window);
        row = buf;
      }
    }
    // Only keys 0..i carry a dependency on the scores.
    row.tail(len - i - 1).setZero();
    auto seg = row.head(i + 1);
    if (spec.bias == Bias::kEldProbs) seg.array() *= spec.row_profile(i).transpose().array();
    const auto p = cache.softmax.row(i).head(i + 1);
    const Scalar dot = seg.dot(p);
    seg = ((seg.array() - dot) * p.array()).matrix();
    if (spec.bias == Bias::kEldScores) seg.array() *= spec.row_profile(i).transpose().array();
  }
  g.q.noalias() = (gw * k) * scale;
  g.k.noalias() = (gw.transpose() * q) * scale;
  return g;
}

// -------------------------------------------------------------- multi-head

/// Projection weights. Head h owns columns [h d_k, (h + 1) d_k) of wq, wk, wv,
/// which is the same parameter set as H separate d_model x d_k matrices.
template <typename Scalar>
struct AttentionWeights {
  Matrix<Scalar> wq;
  Matrix<Scalar> wk;
  Matrix<Scalar> wv;
  Matrix<Scalar> wo;

  static AttentionWeights random(int d_model, Rng& rng) {
    const Scalar s = Scalar(1) / std::sqrt(static_cast<Scalar>(d_model));
    AttentionWeights w;
    w.wq = random_uniform<Scalar>(d_model, d_model, -s, s, rng);
    w.wk = random_uniform<Scalar>(d_model, d_model, -s, s, rng);
    w.wv = random_uniform<Scalar>(d_model, d_model, -s, s, rng);
    w.wo = random_uniform<Scalar>(d_model, d_model, -s, s, rng);
    return w;
  }

  template <typename Other>
  AttentionWeights<Other> cast() const {
    return {wq.template cast<Other>(), wk.template cast<Other>(), wv.template cast<Other>(),
            wo.template cast<Other>()};
  }
};

/// Per-head specs for a given configuration, sized for blocks of up to
/// `max_length` tokens. Input independent, so it can be built once and reused.
template <typename Scalar>
struct AttentionPlan {
  AttentionConfig config;
  Eigen::Index capacity = 0;
  std::vector<HeadSpec<Scalar>> heads;

  AttentionPlan(const AttentionConfig& cfg, Eigen::Index max_length) : config(cfg) {
    config.validate();
    if (max_length < 1) throw ParameterError("attention plan: length must be >= 1");
    capacity = config.chunk_size > 0 ? std::min<Eigen::Index>(max_length, config.chunk_size)
                                     : max_length;
    const auto alphas = alpha_schedule(config.heads, config.decay_bound);
    std::vector<double> slopes = alibi_slopes(config.heads);
    if (config.alibi_slope) slopes.assign(config.heads, *config.alibi_slope);
    for (int h = 0; h < config.heads; ++h) {
      Variant v = config.variant;
      const bool decaying = v == Variant::kLocal || v == Variant::kSmooth || v == Variant::kLas;
      if (h == 0 && decaying && config.head0_vanilla) v = Variant::kVanilla;
      const double rate = v == Variant::kAlibi ? slopes[h] : alphas[h];
      heads.push_back(make_head_spec<Scalar>(v, rate, config.pool_window, config.eld_mode,
                                             config.strict_causal, config.renormalize_rows,
                                             capacity));
    }
  }

  /// Consecutive [begin, length) blocks covering a sequence of `len` tokens.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks(Eigen::Index len) const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    const Eigen::Index c = config.chunk_size > 0 ? config.chunk_size : len;
    for (Eigen::Index b = 0; b < len; b += c) out.emplace_back(b, std::min(c, len - b));
    return out;
  }
};

template <typename Scalar>
struct AttentionCache {
  Matrix<Scalar> input;
  Matrix<Scalar> q, k, v;
  Matrix<Scalar> concat;
  std::vector<std::vector<HeadCache<Scalar>>> heads;  // [head][block]
};

template <typename Scalar>
struct AttentionGrads {
  Matrix<Scalar> input;
  AttentionWeights<Scalar> weights;
};

template <typename Scalar>
Matrix<Scalar> multi_head_attention(const Matrix<Scalar>& x, const AttentionWeights<Scalar>& w,
                                    const AttentionPlan<Scalar>& plan,
                                    AttentionCache<Scalar>* cache = nullptr) {
  const auto& cfg = plan.config;
  const Eigen::Index len = x.rows();
  if (len < 1) throw ParameterError("multi_head_attention: empty sequence");
  if (x.cols() != cfg.d_model) {
    throw DimensionError("multi_head_attention: input width " + std::to_string(x.cols()) +
                         " != d_model " + std::to_string(cfg.d_model));
  }
  if (cfg.chunk_size == 0 && len > plan.capacity) {
    throw ParameterError("multi_head_attention: sequence longer than plan capacity");
  }
  const int dk = cfg.d_k();
  Matrix<Scalar> q = ops::matmul(x, w.wq);
  Matrix<Scalar> k = ops::matmul(x, w.wk);
  Matrix<Scalar> v = ops::matmul(x, w.wv);
  Matrix<Scalar> concat(len, cfg.d_model);
  const auto blocks = plan.blocks(len);
  if (cache) cache->heads.assign(cfg.heads, std::vector<HeadCache<Scalar>>(blocks.size()));

  for (int h = 0; h < cfg.heads; ++h) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto [start, n] = blocks[b];
      const Matrix<Scalar> qb = q.block(start, h * dk, n, dk);
      const Matrix<Scalar> kb = k.block(start, h * dk, n, dk);
      const Matrix<Scalar> vb = v.block(start, h * dk, n, dk);
      concat.block(start, h * dk, n, dk) =
          attention_head(qb, kb, vb, plan.heads[h], cache ? &cache->heads[h][b] : nullptr);
    }
  }
  Matrix<Scalar> out = ops::matmul(concat, w.wo);
  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> multi_head_attention(const Matrix<Scalar>& x, const AttentionWeights<Scalar>& w,
                                    const AttentionConfig& config) {
  return multi_head_attention(x, w, AttentionPlan<Scalar>(config, x.rows()));
}

/// Block-local attention: the configured variant runs independently on
/// consecutive blocks of `chunk_size` tokens; the last block may be shorter.
template <typename Scalar>
Matrix<Scalar> chunked_attention(const Matrix<Scalar>& x, const AttentionWeights<Scalar>& w,
                                 AttentionConfig config, int chunk_size) {
  if (chunk_size < 1) throw ParameterError("chunked_attention: chunk size must be >= 1");
  config.chunk_size = chunk_size;
  return multi_head_attention(x, w, AttentionPlan<Scalar>(config, x.rows()));
}

template <typename Scalar>
AttentionGrads<Scalar> multi_head_attention_backward(const AttentionWeights<Scalar>& w,
                                                     const AttentionPlan<Scalar>& plan,
                                                     const AttentionCache<Scalar>& cache,
                                                     const Matrix<Scalar>& grad_out) {
  const auto& cfg = plan.config;
  const int dk = cfg.d_k();
  const Eigen::Index len = cache.input.rows();
  AttentionGrads<Scalar> g;
  auto out_grads = ops::matmul_backward(cache.concat, w.wo, grad_out);
  g.weights.wo = std::move(out_grads.rhs);
  const Matrix<Scalar>& gconcat = out_grads.lhs;

  Matrix<Scalar> gq(len, cfg.d_model), gk(len, cfg.d_model), gv(len, cfg.d_model);
  const auto blocks = plan.blocks(len);
  for (int h = 0; h < cfg.heads; ++h) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto [start, n] = blocks[b];
      const Matrix<Scalar> qb = cache.q.block(start, h * dk, n, dk);
      const Matrix<Scalar> kb = cache.k.block(start, h * dk, n, dk);
      const Matrix<Scalar> vb = cache.v.block(start, h * dk, n, dk);
      const Matrix<Scalar> gb = gconcat.block(start, h * dk, n, dk);
      auto hg = attention_head_backward(qb, kb, vb, plan.heads[h], cache.heads[h][b], gb);
      gq.block(start, h * dk, n, dk) = hg.q;
      gk.block(start, h * dk, n, dk) = hg.k;
      gv.block(start, h * dk, n, dk) = hg.v;
    }
  }
  g.weights.wq.noalias() = cache.input.transpose() * gq;
  g.weights.wk.noalias() = cache.input.transpose() * gk;
  g.weights.wv.noalias() = cache.input.transpose() * gv;
  g.input.noalias() = gq * w.wq.transpose();
  g.input.noalias() += gk * w.wk.transpose();
  g.input.noalias() += gv * w.wv.transpose();
  return g;
}

/// Full L x L attention map of head `h` (block diagonal under chunking).
template <typename Scalar>
Matrix<Scalar> attention_map(const AttentionPlan<Scalar>& plan, const AttentionCache<Scalar>& cache,
                             int head) {
  const Eigen::Index len = cache.input.rows();
  Matrix<Scalar> map = Matrix<Scalar>::Zero(len, len);
  const auto blocks = plan.blocks(len);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto [start, n] = blocks[b];
    map.block(start, start, n, n) = cache.heads.at(head).at(b).weights;
  }
  return map;
}

// ------------------------------------------------------------ map export

/// Min-max normalisation to [0, 1]; a constant matrix maps to all zeros.
MatrixD normalize_min_max(const MatrixD& m);

/// Mean |W[i][j+1] - W[i][j]| over the whole map; lower is smoother.
double row_roughness(const MatrixD& m);

/// Writes `<stem>.csv` (17 significant digits) and `<stem>.pgm` (binary P5,
/// maxval 255) holding the min-max normalised map.
void export_attention_map(const MatrixD& map, const std::string& stem);

}  // namespace lasattn
