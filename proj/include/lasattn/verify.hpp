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
#include <functional>
#include <string>
#include <vector>

#include "lasattn/ssm.hpp"
#include "lasattn/tensor.hpp"

namespace lasattn::verify {

/// Row pooling used by the pooling checks; replaceable to test the checks.
using PoolFn = std::function<MatrixD(const MatrixD&, int)>;

struct Options {
  bool quick = false;         // sequence lengths <= 16 and fewer trials
  std::uint64_t seed = 2026;
  PoolFn pool;                // empty: the library's avg_pool_rows
};

struct Check {
  std::string name;
  double value = 0.0;         // worst observed error, or a runtime in seconds
  double tolerance = 0.0;
  bool pass = false;
};

// Tolerances pinned by the acceptance criteria.
inline constexpr double kTheoremTol = 1e-6;
inline constexpr double kTheoremSeconds = 30.0;
inline constexpr double kGradTol = 1e-4;
inline constexpr double kIdentityTol = 1e-12;
inline constexpr double kCausalTol = 1e-12;
inline constexpr double kStochasticTol = 1e-12;

/// Randomized construction suite, 100 kernels per length in {4, 16, 64}
/// ({4, 16} when quick). `rows` receives the per-pair report.
std::vector<Check> theorem1_checks(const Options& opt, std::vector<ssm::VerifyRow>* rows = nullptr);

/// Central finite differences for every differentiable op, every head
/// variant, multi-head attention and a 2-layer model at L = 8.
std::vector<Check> gradient_checks(const Options& opt);

/// las(0, 1) = vanilla, alibi(0) = vanilla, chunk >= L = full, pool(1) = identity.
std::vector<Check> identity_checks(const Options& opt);

/// Suffix perturbations never move earlier output rows (strict mode, every variant).
std::vector<Check> causality_checks(const Options& opt);

/// Mask shape, alpha schedule, stochastic rows, pooling mass, parameter parity.
std::vector<Check> structure_checks(const Options& opt);

std::vector<Check> run_all(const Options& opt, std::vector<ssm::VerifyRow>* theorem_rows = nullptr);

/// "check,value,tolerance,pass" followed by one line per check.
std::string summary_csv(const std::vector<Check>& checks);

/// "kernel_id,L,max_error,pass".
std::string theorem_csv(const std::vector<ssm::VerifyRow>& rows);

}  // namespace lasattn::verify
