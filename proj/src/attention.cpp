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

#include "lasattn/attention.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>

namespace lasattn {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kVanilla: return "vanilla";
    case Variant::kAlibi: return "alibi";
    case Variant::kLocal: return "l";
    case Variant::kSmooth: return "s";
    case Variant::kLas: return "las";
  }
  return "?";
}

std::string_view to_string(EldMode m) {
  return m == EldMode::kScoreScale ? "score-scale" : "prob-scale";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kVanilla, Variant::kAlibi, Variant::kLocal, Variant::kSmooth,
                 Variant::kLas}) {
    if (to_string(v) == name) return v;
  }
  throw ParameterError("unknown attention variant '" + std::string(name) + "'");
}

EldMode parse_eld_mode(std::string_view name) {
  if (name == "score-scale") return EldMode::kScoreScale;
  if (name == "prob-scale") return EldMode::kProbScale;
  throw ParameterError("unknown eld_mode '" + std::string(name) + "'");
}

void AttentionConfig::validate() const {
  if (heads < 1) throw ParameterError("attention: heads must be >= 1");
  if (d_model < 1 || d_model % heads != 0) {
    throw ParameterError("attention: d_model must be a positive multiple of heads");
  }
  if (!(decay_bound > 0.0 && decay_bound < 1.0)) {
    throw ParameterError("attention: B must lie in (0, 1)");
  }
  ops::check_pool_window(pool_window);
  if (chunk_size < 0) throw ParameterError("attention: chunk_size must be >= 0");
  if (alibi_slope && !(std::isfinite(*alibi_slope) && *alibi_slope >= 0.0)) {
    throw ParameterError("attention: alibi slope must be finite and >= 0");
  }
}

std::vector<double> alpha_schedule(int heads, double decay_bound) {
  if (heads < 1) throw ParameterError("alpha_schedule: heads must be >= 1");
  if (!(decay_bound > 0.0 && decay_bound < 1.0)) {
    throw ParameterError("alpha_schedule: B must lie in (0, 1)");
  }
  std::vector<double> alphas(heads, 0.0);
  for (int c = 1; c < heads; ++c) {
    alphas[c] = -std::log(decay_bound * static_cast<double>(c) / static_cast<double>(heads - 1));
  }
  return alphas;
}

std::vector<double> alibi_slopes(int heads) {
  if (heads < 1) throw ParameterError("alibi_slopes: heads must be >= 1");
  std::vector<double> slopes(heads);
  for (int h = 0; h < heads; ++h) slopes[h] = std::exp2(-8.0 * (h + 1) / heads);
  return slopes;
}

MatrixD normalize_min_max(const MatrixD& m) {
  require_finite(m, "normalize_min_max");
  if (m.size() == 0) return m;
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  if (hi == lo) return MatrixD::Zero(m.rows(), m.cols());
  return (m.array() - lo) / (hi - lo);
}

double row_roughness(const MatrixD& m) {
  if (m.cols() < 2) return 0.0;
  const MatrixD diff = m.rightCols(m.cols() - 1) - m.leftCols(m.cols() - 1);
  return diff.cwiseAbs().mean();
}

void export_attention_map(const MatrixD& map, const std::string& stem) {
  const MatrixD norm = normalize_min_max(map);

  std::ofstream csv(stem + ".csv");
  if (!csv) throw std::runtime_error("cannot write " + stem + ".csv");
  csv << std::setprecision(17);
  for (Eigen::Index i = 0; i < norm.rows(); ++i) {
    for (Eigen::Index j = 0; j < norm.cols(); ++j) {
      if (j) csv << ',';
      csv << norm(i, j);
    }
    csv << '\n';
  }

  std::ofstream pgm(stem + ".pgm", std::ios::binary);
  if (!pgm) throw std::runtime_error("cannot write " + stem + ".pgm");
  pgm << "P5\n" << norm.cols() << ' ' << norm.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < norm.rows(); ++i) {
    for (Eigen::Index j = 0; j < norm.cols(); ++j) {
      const auto byte = static_cast<std::uint8_t>(std::lround(norm(i, j) * 255.0));
      pgm.put(static_cast<char>(byte));
    }
  }
}

}  // namespace lasattn
