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

// Differentiable primitives as explicit forward/backward pairs.
//
// Every backward takes the upstream gradient of the op's output and returns
// gradients with respect to its inputs. Nothing here keeps state; callers
// hold on to whatever the backward needs (see tape.hpp).

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lasattn/tensor.hpp"

namespace lasattn::ops {

template <typename Scalar>
struct BinaryGrads {
  Matrix<Scalar> lhs;
  Matrix<Scalar> rhs;
};

// ---------------------------------------------------------------- matmul

template <typename Scalar>
Matrix<Scalar> matmul(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner extents differ " + shape_str(a.rows(), a.cols()) + " * " +
                         shape_str(b.rows(), b.cols()));
  }
  Matrix<Scalar> out(a.rows(), b.cols());
  out.noalias() = a * b;
  return out;
}

template <typename Scalar>
BinaryGrads<Scalar> matmul_backward(const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                                    const Matrix<Scalar>& grad) {
  if (grad.rows() != a.rows() || grad.cols() != b.cols()) {
    throw DimensionError("matmul_backward: gradient shape " + shape_str(grad.rows(), grad.cols()));
  }
  BinaryGrads<Scalar> g;
  g.lhs.noalias() = grad * b.transpose();
  g.rhs.noalias() = a.transpose() * grad;
  return g;
}

// ----------------------------------------------------------- elementwise

template <typename Scalar>
Matrix<Scalar> add(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  require_same_shape(a, b, "add");
  return a + b;
}

// d(a+b) passes the upstream gradient to both operands unchanged.
template <typename Scalar>
BinaryGrads<Scalar> add_backward(const Matrix<Scalar>& grad) {
  return {grad, grad};
}

template <typename Scalar>
Matrix<Scalar> elementwise_mul(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  require_same_shape(a, b, "elementwise_mul");
  return a.cwiseProduct(b);
}

template <typename Scalar>
BinaryGrads<Scalar> elementwise_mul_backward(const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                                             const Matrix<Scalar>& grad) {
  require_same_shape(a, grad, "elementwise_mul_backward");
  return {grad.cwiseProduct(b), grad.cwiseProduct(a)};
}

/// Adds a 1 x n bias to every row of an m x n matrix.
template <typename Scalar>
Matrix<Scalar> add_row_bias(const Matrix<Scalar>& x, const Matrix<Scalar>& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_row_bias: bias " + shape_str(bias.rows(), bias.cols()) +
                         " for input " + shape_str(x.rows(), x.cols()));
  }
  Matrix<Scalar> out = x;
  out.rowwise() += bias.row(0);
  return out;
}

template <typename Scalar>
BinaryGrads<Scalar> add_row_bias_backward(const Matrix<Scalar>& grad) {
  return {grad, grad.colwise().sum()};
}

template <typename Scalar>
Matrix<Scalar> relu(const Matrix<Scalar>& x) {
  return x.cwiseMax(Scalar(0));
}

template <typename Scalar>
Matrix<Scalar> relu_backward(const Matrix<Scalar>& x, const Matrix<Scalar>& grad) {
  require_same_shape(x, grad, "relu_backward");
  return (x.array() > Scalar(0)).select(grad, Scalar(0));
}

// ---------------------------------------------------------------- softmax

/// Row-wise softmax. -inf entries are masked keys and come out as exact zeros.
template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& s) {
  constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
  Matrix<Scalar> out(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const auto row = s.row(i);
    if ((row.array().isNaN()).any() || (row.array() == -kNegInf).any()) {
      throw NumericError("softmax_rows: row " + std::to_string(i) + " has NaN or +inf");
    }
    const Scalar m = row.maxCoeff();
    if (m == kNegInf) {
      throw DegenerateRowError("softmax_rows: row " + std::to_string(i) + " is fully masked");
    }
    auto o = out.row(i);
    o = (row.array() - m).exp().matrix();
    o = (row.array() == kNegInf).select(Scalar(0), o.array()).matrix();
    o /= o.sum();
  }
  return out;
}

/// Vector-Jacobian product of softmax_rows given its output y.
template <typename Scalar>
Matrix<Scalar> softmax_rows_backward(const Matrix<Scalar>& y, const Matrix<Scalar>& grad) {
  require_same_shape(y, grad, "softmax_rows_backward");
  const Vector<Scalar> dots = grad.cwiseProduct(y).rowwise().sum();
  Matrix<Scalar> out = grad;
  out.colwise() -= dots;
  return out.cwiseProduct(y);
}

// ---------------------------------------------------------------- pooling

inline void check_pool_window(int window) {
  if (window < 1 || window % 2 == 0) {
    throw ParameterError("avg_pool_rows: window must be odd and positive, got " +
                         std::to_string(window));
  }
}

/// Centered moving sum of `in` written into `out` (same length), zero padded,
/// divided by the full window. Works on any pair of equally sized row blocks.
template <typename In, typename Out>
void pool_row_into(const In& in, Out&& out, int window) {
  using Scalar = typename std::decay_t<Out>::Scalar;
  const Eigen::Index n = in.size();
  const Eigen::Index half = (window - 1) / 2;
  out.setZero();
  for (Eigen::Index o = -half; o <= half; ++o) {
    const Eigen::Index j0 = std::max<Eigen::Index>(0, -o);
    const Eigen::Index j1 = std::min<Eigen::Index>(n, n - o);
    if (j1 > j0) out.segment(j0, j1 - j0) += in.segment(j0 + o, j1 - j0);
  }
  out *= Scalar(1) / Scalar(window);
}

/// 1-D average pooling along each row; output keeps the input shape.
template <typename Scalar>
Matrix<Scalar> avg_pool_rows(const Matrix<Scalar>& a, int window) {
  check_pool_window(window);
  if (window == 1) return a;
  Matrix<Scalar> out(a.rows(), a.cols());
  const Eigen::Index half = (window - 1) / 2;
  out.setZero();
  for (Eigen::Index o = -half; o <= half; ++o) {
    const Eigen::Index n = a.cols();
    const Eigen::Index j0 = std::max<Eigen::Index>(0, -o);
    const Eigen::Index j1 = std::min<Eigen::Index>(n, n - o);
    if (j1 > j0) out.middleCols(j0, j1 - j0) += a.middleCols(j0 + o, j1 - j0);
  }
  out *= Scalar(1) / Scalar(window);
  return out;
}

// The stencil is symmetric, so its transpose is the same pooling.
template <typename Scalar>
Matrix<Scalar> avg_pool_rows_backward(const Matrix<Scalar>& grad, int window) {
  return avg_pool_rows(grad, window);
}

// ------------------------------------------------------------- layer norm

template <typename Scalar>
struct LayerNormCache {
  Matrix<Scalar> normalized;  // (x - mean) * rstd
  Vector<Scalar> rstd;
};

template <typename Scalar>
struct LayerNormGrads {
  Matrix<Scalar> input;
  Matrix<Scalar> gamma;
  Matrix<Scalar> beta;
};

/// Normalises each row of x, then applies the learned 1 x d scale and shift.
template <typename Scalar>
Matrix<Scalar> layer_norm(const Matrix<Scalar>& x, const Matrix<Scalar>& gamma,
                          const Matrix<Scalar>& beta, LayerNormCache<Scalar>* cache = nullptr,
                          Scalar eps = Scalar(1e-5)) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols()) {
    throw DimensionError("layer_norm: gamma " + shape_str(gamma.rows(), gamma.cols()));
  }
  require_same_shape(gamma, beta, "layer_norm");
  const Scalar inv_d = Scalar(1) / Scalar(x.cols());
  Matrix<Scalar> xhat = x;
  xhat.colwise() -= (x.rowwise().sum() * inv_d).eval();
  Vector<Scalar> rstd =
      ((xhat.array().square().rowwise().sum() * inv_d) + eps).rsqrt().matrix();
  xhat.array().colwise() *= rstd.array();
  Matrix<Scalar> out = xhat.array().rowwise() * gamma.row(0).array();
  out.rowwise() += beta.row(0);
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return out;
}

template <typename Scalar>
LayerNormGrads<Scalar> layer_norm_backward(const LayerNormCache<Scalar>& cache,
                                           const Matrix<Scalar>& gamma,
                                           const Matrix<Scalar>& grad) {
  require_same_shape(cache.normalized, grad, "layer_norm_backward");
  const auto& xhat = cache.normalized;
  LayerNormGrads<Scalar> g;
  g.gamma = grad.cwiseProduct(xhat).colwise().sum();
  g.beta = grad.colwise().sum();
  const Matrix<Scalar> gx = grad.array().rowwise() * gamma.row(0).array();
  const Scalar inv_d = Scalar(1) / Scalar(grad.cols());
  const Vector<Scalar> mean_g = gx.rowwise().sum() * inv_d;
  const Vector<Scalar> mean_gx = gx.cwiseProduct(xhat).rowwise().sum() * inv_d;
  g.input = gx;
  g.input.colwise() -= mean_g;
  g.input -= (xhat.array().colwise() * mean_gx.array()).matrix();
  g.input.array().colwise() *= cache.rstd.array();
  return g;
}

// ---------------------------------------------------------- cross entropy

/// Negative log-likelihood of `label` under softmax(logits), logits being 1 x K.
template <typename Scalar>
Scalar cross_entropy(const Matrix<Scalar>& logits, int label) {
  if (logits.rows() != 1) throw DimensionError("cross_entropy: logits must be a single row");
  if (label < 0 || label >= logits.cols()) {
    throw ParameterError("cross_entropy: label " + std::to_string(label) + " out of range");
  }
  require_finite(logits, "cross_entropy");
  const Scalar m = logits.maxCoeff();
  const Scalar lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(0, label);
}

template <typename Scalar>
Matrix<Scalar> cross_entropy_backward(const Matrix<Scalar>& logits, int label, Scalar grad = 1) {
  Matrix<Scalar> p = softmax_rows(logits);
  p(0, label) -= Scalar(1);
  return p * grad;
}

}  // namespace lasattn::ops
