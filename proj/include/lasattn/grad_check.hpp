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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "lasattn/tensor.hpp"

namespace lasattn {

/// Scalar objective of a list of 64-bit inputs.
using ScalarObjective = std::function<double(const std::vector<MatrixD>&)>;

/// |a - n| / max(|a|, |n|, 1e-8): the comparison used by every gradient check.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

/// Central-difference check of `analytic` (one gradient per input) against
/// `objective`. Returns the worst relative error over every input entry.
///
/// The difference quotient is formed in the objective's return type, so an
/// objective that evaluates in long double pushes the roundoff floor of the
/// numeric side well below the 1e-8 denominator floor.
template <typename Objective>
double finite_diff_check(const Objective& objective, std::vector<MatrixD> inputs,
                         const std::vector<MatrixD>& analytic, double step = 1e-5) {
  using Value = decltype(objective(inputs));
  if (analytic.size() != inputs.size()) {
    throw DimensionError("finite_diff_check: one gradient per input expected");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    require_same_shape(inputs[k], analytic[k], "finite_diff_check");
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      double& x = inputs[k].data()[i];
      const double saved = x;
      x = saved + step;
      const Value up = objective(inputs);
      x = saved - step;
      const Value down = objective(inputs);
      x = saved;
      if (!std::isfinite(static_cast<double>(up)) || !std::isfinite(static_cast<double>(down))) {
        throw NumericError("finite_diff_check: objective is not finite");
      }
      const auto numeric = static_cast<double>((up - down) / (Value(2) * Value(step)));
      const double a = analytic[k].data()[i];
      if (!std::isfinite(a)) throw NumericError("finite_diff_check: analytic gradient not finite");
      worst = std::max(worst, relative_error(a, numeric));
    }
  }
  return worst;
}

}  // namespace lasattn
