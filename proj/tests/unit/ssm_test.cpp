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

#include <chrono>
#include <cmath>
#include <limits>

#include "lasattn/ssm.hpp"

namespace lasattn::ssm {
namespace {

ConvKernel random_kernel(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> tap(0.0, 1.0);
  ConvKernel k;
  for (Eigen::Index t = 0; t < n; ++t) k.taps.push_back(tap(rng));
  return k;
}

TEST(KernelMatrix, IdentityKernel) {
  EXPECT_EQ(build_kernel_matrix({{1, 0, 0}}), MatrixD::Identity(3, 3));
}

TEST(KernelMatrix, FirstColumnIsKernel) {
  const MatrixD a = build_kernel_matrix({{1, 2}});
  EXPECT_EQ(a(0, 0), 1.0);
  EXPECT_EQ(a(1, 0), 2.0);
  EXPECT_EQ(a(1, 1), 1.0);
  EXPECT_EQ(a(0, 1), 0.0);
  EXPECT_THROW(build_kernel_matrix({{}}), ParameterError);
}

TEST(ConvOracle, Cases) {
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  EXPECT_EQ(causal_conv_oracle({{1, 0, 0, 0, 0}}, u), u);
  ConvKernel flat{std::vector<double>(5, 0.2)};
  const Eigen::VectorXd y = causal_conv_oracle(flat, u);
  double prefix = 0.0;
  for (int i = 0; i < 5; ++i) {
    prefix += u(i);
    EXPECT_NEAR(y(i), 0.2 * prefix, 1e-15);
  }
  EXPECT_THROW(causal_conv_oracle(flat, Eigen::VectorXd::Ones(4)), DimensionError);
}

TEST(ConvOracle, MatchesKernelMatrixProduct) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvKernel k = random_kernel(16, rng);
    const Eigen::VectorXd u = random_uniform<double>(16, 1, -1.0, 1.0, rng);
    EXPECT_LT((build_kernel_matrix(k) * u - causal_conv_oracle(k, u)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Construct, IdentityKernelRow) {
  const auto head = theorem1_construct({{1, 0, 0}});
  EXPECT_EQ(head.wq(0, 0), 0.0);
  for (int j = 1; j < 4; ++j) EXPECT_EQ(head.wq(0, j), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(head.d_k, 4);
  EXPECT_EQ(head.wv, MatrixD::Identity(4, 4));
  EXPECT_EQ(head.wk, 2.0 * MatrixD::Identity(4, 4));
}

TEST(Construct, TwoOnesKernel) {
  const auto head = theorem1_construct({{1, 1}});
  EXPECT_EQ(head.total, 2.0);
  EXPECT_EQ(head.tails[0], 1.0);
  EXPECT_EQ(head.tails[1], 0.0);
  EXPECT_EQ(head.wq(0, 0), 0.0);
  EXPECT_EQ(head.wq(0, 1), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(head.wq(0, 2), 0.0);
  const MatrixD z = constructed_attention_matrix(head);
  EXPECT_NEAR(z(0, 0), 0.5, 1e-15);
  EXPECT_EQ(z(0, 1), 0.0);
  EXPECT_NEAR(z(0, 2), 0.5, 1e-15);
}

TEST(Construct, RowExponentialsSumToTotal) {
  Rng rng(8);
  for (int n : {1, 4, 16, 64}) {
    ConvKernel k = random_kernel(n, rng);
    if (n > 2) k.taps[1] = 0.0;
    const auto head = theorem1_construct(k);
    for (Eigen::Index i = 0; i < head.wq.rows(); ++i) {
      EXPECT_NEAR(head.wq.row(i).array().exp().sum(), head.total, 1e-9 * head.total);
    }
  }
}

TEST(Construct, SoftmaxBlockIsScaledKernelMatrix) {
  Rng rng(9);
  const ConvKernel k = random_kernel(12, rng);
  const auto head = theorem1_construct(k);
  const MatrixD z = constructed_attention_matrix(head);
  const MatrixD want = build_kernel_matrix(k) / k.sum();
  EXPECT_LT((z.topLeftCorner(12, 12) - want).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Construct, RejectsInvalidKernels) {
  EXPECT_THROW(theorem1_construct({{1.0, -0.5}}), UnsupportedKernelError);
  EXPECT_THROW(theorem1_construct({{0.0, 0.0}}), DegenerateKernelError);
  EXPECT_THROW(theorem1_construct({{}}), ParameterError);
}

TEST(Theorem1Verify, IdentityKernelIsExact) {
  Rng rng(10);
  const Eigen::VectorXd u = random_uniform<double>(4, 1, -3.0, 3.0, rng);
  EXPECT_LE(theorem1_verify({{1, 0, 0, 0}}, u), 1e-15);
}

TEST(Theorem1Verify, UniformKernelOnOnes) {
  const int n = 8;
  const auto head = theorem1_construct({std::vector<double>(n, 1.0 / n)});
  const Eigen::VectorXd out = constructed_head_output(head, Eigen::VectorXd::Ones(n));
  for (int i = 0; i < n; ++i) EXPECT_NEAR(out(i), (i + 1.0) / n, 1e-12);
}

TEST(Theorem1Verify, ScaleCovariance) {
  Rng rng(12);
  ConvKernel k = random_kernel(10, rng);
  const Eigen::VectorXd u = random_uniform<double>(10, 1, 0.5, 1.5, rng);
  const auto base = theorem1_construct(k);
  ConvKernel scaled = k;
  for (double& t : scaled.taps) t *= 3.5;
  const auto big = theorem1_construct(scaled);
  EXPECT_LT((constructed_attention_matrix(base) - constructed_attention_matrix(big)).cwiseAbs().maxCoeff(),
            1e-9);
  const Eigen::VectorXd ratio =
      constructed_head_output(big, u).cwiseQuotient(constructed_head_output(base, u));
  EXPECT_LT((ratio.array() - 3.5).abs().maxCoeff(), 1e-9);
}

TEST(Theorem1Verify, RandomSuite) {
  const auto start = std::chrono::steady_clock::now();
  const auto rows = theorem1_suite({4, 16, 64}, 100, 2026, 1e-6);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(rows.size(), 300u);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.kernel_id << " L=" << r.length << " " << r.max_error;
  EXPECT_LT(seconds, 30.0);
  const auto again = theorem1_suite({4, 16, 64}, 100, 2026, 1e-6);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].max_error, again[i].max_error);
}

}  // namespace
}  // namespace lasattn::ssm
