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

// One attention head realising a causal convolution y = k * u.
//
// Given a nonnegative kernel k_1..k_L, the head has hidden size L + 1, an
// indicator positional encoding and one trailing empty token with value 0:
//
//   Wq[i][j]   = ln A_k[i][j]      i, j < L
//   Wq[i][L]   = ln c_i            c_i = k_{i+2} + ... + k_L   (0-based row i)
//   Wq[L][L]   = ln c              c   = k_1 + ... + k_L
//   all other entries ln 0 = -inf
//   Wk = sqrt(d_k) I,  Wv = c I
//
// Every row of exp(Wq) sums to c, so softmax(Wq) restricted to the leading
// L x L block is A_k / c, and multiplying by c u recovers A_k u.

#pragma once

#include <cstdint>
#include <vector>

#include "lasattn/tensor.hpp"

namespace lasattn::ssm {

/// Taps k_1..k_L of a causal convolution kernel.
struct ConvKernel {
  std::vector<double> taps;

  Eigen::Index length() const { return static_cast<Eigen::Index>(taps.size()); }
  double sum() const;
  /// Nonnegative with positive mass; throws otherwise.
  void validate() const;
};

/// Lower-triangular Toeplitz A_k with A_k[i][j] = k_{i-j+1}.
MatrixD build_kernel_matrix(const ConvKernel& kernel);

/// y_i = sum_{j <= i} k_{i-j+1} u_j by a direct double loop.
Eigen::VectorXd causal_conv_oracle(const ConvKernel& kernel, const Eigen::VectorXd& u);

struct ConstructedHead {
  MatrixD wq;
  MatrixD wk;
  MatrixD wv;
  double total = 0.0;           // c
  std::vector<double> tails;    // c_i for rows 0..L-1
  Eigen::Index d_k = 0;         // L + 1

  /// Indicator encodings of positions 0..L stacked as rows: I_{L+1}.
  MatrixD positional_encoding() const { return MatrixD::Identity(d_k, d_k); }
};

ConstructedHead theorem1_construct(const ConvKernel& kernel);

/// Matrix product over the extended reals with 0 * (+-inf) = 0, needed
/// because the query weights carry ln 0 sentinels.
MatrixD extended_matmul(const MatrixD& a, const MatrixD& b);

/// Softmax score matrix of the constructed head, (L + 1) x (L + 1).
MatrixD constructed_attention_matrix(const ConstructedHead& head);

/// Runs the head on u (empty token appended with value 0) and returns the
/// L real outputs.
Eigen::VectorXd constructed_head_output(const ConstructedHead& head, const Eigen::VectorXd& u);

/// max_i |head(u)_i - (A_k u)_i|, the reference coming from causal_conv_oracle.
double theorem1_verify(const ConvKernel& kernel, const Eigen::VectorXd& u);

struct VerifyRow {
  int kernel_id = 0;
  Eigen::Index length = 0;
  double max_error = 0.0;
  bool pass = false;
};

/// Random nonnegative kernels (some taps zeroed) and inputs; one row per pair.
/// Row order and values depend only on `seed`.
std::vector<VerifyRow> theorem1_suite(const std::vector<Eigen::Index>& lengths, int per_length,
                                      std::uint64_t seed, double tolerance);

}  // namespace lasattn::ssm
