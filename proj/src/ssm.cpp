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

#include "lasattn/ssm.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "lasattn/ops.hpp"

namespace lasattn::ssm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

double ConvKernel::sum() const { return std::accumulate(taps.begin(), taps.end(), 0.0); }

void ConvKernel::validate() const {
  if (taps.empty()) throw ParameterError("conv kernel: empty");
  for (std::size_t t = 0; t < taps.size(); ++t) {
    if (!std::isfinite(taps[t])) throw NumericError("conv kernel: non-finite tap");
    if (taps[t] < 0.0) {
      throw UnsupportedKernelError("conv kernel: tap " + std::to_string(t + 1) +
                                   " is negative; ln k is undefined");
    }
  }
  if (!(sum() > 0.0)) throw DegenerateKernelError("conv kernel: taps sum to zero");
}

MatrixD build_kernel_matrix(const ConvKernel& kernel) {
  if (kernel.taps.empty()) throw ParameterError("build_kernel_matrix: empty kernel");
  const Eigen::Index n = kernel.length();
  MatrixD a = MatrixD::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = kernel.taps[i - j];
  return a;
}

Eigen::VectorXd causal_conv_oracle(const ConvKernel& kernel, const Eigen::VectorXd& u) {
  if (kernel.length() != u.size()) {
    throw DimensionError("causal_conv_oracle: kernel length " + std::to_string(kernel.length()) +
                         " != input length " + std::to_string(u.size()));
  }
  const Eigen::Index n = u.size();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) acc += kernel.taps[i - j] * u(j);
    y(i) = acc;
  }
  return y;
}

ConstructedHead theorem1_construct(const ConvKernel& kernel) {
  kernel.validate();
  const Eigen::Index n = kernel.length();
  const MatrixD ak = build_kernel_matrix(kernel);

  ConstructedHead head;
  head.d_k = n + 1;
  head.total = kernel.sum();
  head.tails.resize(n);
  // c_i: mass of the taps the causal row i does not reach.
  for (Eigen::Index i = 0; i < n; ++i) {
    double tail = 0.0;
    for (Eigen::Index t = i + 1; t < n; ++t) tail += kernel.taps[t];
    head.tails[i] = tail;
  }

  head.wq = MatrixD::Constant(n + 1, n + 1, kNegInf);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) head.wq(i, j) = safe_log(ak(i, j));
    head.wq(i, n) = safe_log(head.tails[i]);
  }
  head.wq(n, n) = std::log(head.total);
  head.wk = std::sqrt(static_cast<double>(head.d_k)) * MatrixD::Identity(n + 1, n + 1);
  head.wv = head.total * MatrixD::Identity(n + 1, n + 1);
  return head;
}

MatrixD extended_matmul(const MatrixD& a, const MatrixD& b) {
  if (a.cols() != b.rows()) throw DimensionError("extended_matmul: inner extents differ");
  MatrixD out = MatrixD::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index m = 0; m < a.cols(); ++m) {
        const double x = a(i, m);
        const double y = b(m, j);
        if (x == 0.0 || y == 0.0) continue;
        acc += x * y;
      }
      out(i, j) = acc;
    }
  }
  return out;
}

MatrixD constructed_attention_matrix(const ConstructedHead& head) {
  const MatrixD pe = head.positional_encoding();
  const MatrixD q = extended_matmul(pe, head.wq);
  const MatrixD k = extended_matmul(pe, head.wk);
  const MatrixD scores = extended_matmul(q, k.transpose()) / std::sqrt(static_cast<double>(head.d_k));
  return ops::softmax_rows(scores);
}

Eigen::VectorXd constructed_head_output(const ConstructedHead& head, const Eigen::VectorXd& u) {
  const Eigen::Index n = head.d_k - 1;
  if (u.size() != n) {
    throw DimensionError("constructed_head_output: input length " + std::to_string(u.size()) +
                         " != kernel length " + std::to_string(n));
  }
  Eigen::VectorXd values(n + 1);
  values.head(n) = u;
  values(n) = 0.0;  // empty token
  const MatrixD z = constructed_attention_matrix(head);
  const Eigen::VectorXd out = z * (head.wv * values);
  return out.head(n);
}

double theorem1_verify(const ConvKernel& kernel, const Eigen::VectorXd& u) {
  const ConstructedHead head = theorem1_construct(kernel);
  const Eigen::VectorXd attn = constructed_head_output(head, u);
  const Eigen::VectorXd ref = causal_conv_oracle(kernel, u);
  return (attn - ref).cwiseAbs().maxCoeff();
}

std::vector<VerifyRow> theorem1_suite(const std::vector<Eigen::Index>& lengths, int per_length,
                                      std::uint64_t seed, double tolerance) {
  std::vector<VerifyRow> rows;
  int id = 0;
  for (const Eigen::Index n : lengths) {
    for (int r = 0; r < per_length; ++r, ++id) {
      // Each pair draws from its own stream so rows can be computed in any order.
      Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(id + 1)));
      std::uniform_real_distribution<double> tap(0.0, 1.0);
      std::uniform_real_distribution<double> val(-1.0, 1.0);
      std::bernoulli_distribution zero(0.2);
      ConvKernel k;
      k.taps.resize(n);
      for (auto& t : k.taps) t = zero(rng) ? 0.0 : tap(rng);
      if (!(k.sum() > 0.0)) k.taps[0] = 1.0;
      Eigen::VectorXd u(n);
      for (Eigen::Index i = 0; i < n; ++i) u(i) = val(rng);
      VerifyRow row;
      row.kernel_id = id;
      row.length = n;
      row.max_error = theorem1_verify(k, u);
      row.pass = row.max_error < tolerance;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace lasattn::ssm
