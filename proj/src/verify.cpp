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


#include "lasattn/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lasattn/attention.hpp"
#include "lasattn/grad_check.hpp"
#include "lasattn/model.hpp"
#include "lasattn/ops.hpp"

namespace lasattn::verify {

namespace {

using MatrixL = Matrix<long double>;

constexpr Variant kVariants[] = {Variant::kVanilla, Variant::kAlibi, Variant::kLocal,
                                 Variant::kSmooth, Variant::kLas};

Check below(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value < tol};
}

Check at_most(std::string name, double value, double tol) {
  return {std::move(name), value, tol, value <= tol};
}

MatrixD rand_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return random_uniform<double>(r, c, lo, hi, rng);
}

double max_abs(const MatrixD& a, const MatrixD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  const double d = (a - b).cwiseAbs().maxCoeff();
  return std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
}

PoolFn pool_of(const Options& opt) {
  if (opt.pool) return opt.pool;
  return [](const MatrixD& a, int window) { return ops::avg_pool_rows(a, window); };
}

// Finite-difference error with the objective evaluated in long double.
template <typename F>
double fd_error(F&& f, const std::vector<MatrixD>& inputs, const std::vector<MatrixD>& analytic) {
  return finite_diff_check(
      [&](const std::vector<MatrixD>& in) {
        std::vector<MatrixL> ext;
        for (const auto& m : in) ext.push_back(m.cast<long double>());
        return f(ext);
      },
      inputs, analytic);
}

MatrixL ext(const MatrixD& m) { return m.cast<long double>(); }

AttentionConfig small_attention(Variant v, int heads, int d_model) {
  AttentionConfig c;
  c.heads = heads;
  c.d_model = d_model;
  c.variant = v;
  c.decay_bound = 0.3;
  return c;
}

}  // namespace

std::vector<Check> theorem1_checks(const Options& opt, std::vector<ssm::VerifyRow>* rows) {
  const std::vector<Eigen::Index> lengths =
      opt.quick ? std::vector<Eigen::Index>{4, 16} : std::vector<Eigen::Index>{4, 16, 64};
  const auto start = std::chrono::steady_clock::now();
  const auto suite = ssm::theorem1_suite(lengths, 100, opt.seed, kTheoremTol);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  for (const auto& r : suite) worst = std::max(worst, std::isnan(r.max_error) ? INFINITY : r.max_error);
  if (rows) *rows = suite;
  return {below("theorem1.max_error", worst, kTheoremTol),
          below("theorem1.seconds", seconds, kTheoremSeconds)};
}

std::vector<Check> gradient_checks(const Options& opt) {
  Rng rng(opt.seed);
  std::vector<Check> out;
  auto add = [&](const std::string& name, double err) { out.push_back(below("grad." + name, err, kGradTol)); };

  {
    const MatrixD a = rand_mat(3, 4, rng), b = rand_mat(4, 2, rng), g = rand_mat(3, 2, rng);
    const auto an = ops::matmul_backward(a, b, g);
    add("matmul", fd_error([&](const auto& in) { return ops::matmul(in[0], in[1]).cwiseProduct(ext(g)).sum(); },
                           {a, b}, {an.lhs, an.rhs}));
  }
  {
    const MatrixD a = rand_mat(3, 4, rng), b = rand_mat(3, 4, rng), g = rand_mat(3, 4, rng);
    const auto an = ops::add_backward(g);
    add("add", fd_error([&](const auto& in) { return ops::add(in[0], in[1]).cwiseProduct(ext(g)).sum(); },
                        {a, b}, {an.lhs, an.rhs}));
    const auto mn = ops::elementwise_mul_backward(a, b, g);
    add("elementwise_mul",
        fd_error([&](const auto& in) { return ops::elementwise_mul(in[0], in[1]).cwiseProduct(ext(g)).sum(); },
                 {a, b}, {mn.lhs, mn.rhs}));
  }
  {
    const MatrixD x = rand_mat(5, 3, rng), bias = rand_mat(1, 3, rng), g = rand_mat(5, 3, rng);
    const auto an = ops::add_row_bias_backward(g);
    add("add_row_bias",
        fd_error([&](const auto& in) { return ops::add_row_bias(in[0], in[1]).cwiseProduct(ext(g)).sum(); },
                 {x, bias}, {an.lhs, an.rhs}));
  }
  {
    // Keep inputs clear of the kink at zero.
    MatrixD x = rand_mat(4, 5, rng);
    x = x.unaryExpr([](double v) { return v >= 0 ? v + 0.05 : v - 0.05; });
    const MatrixD g = rand_mat(4, 5, rng);
    add("relu", fd_error([&](const auto& in) { return ops::relu(in[0]).cwiseProduct(ext(g)).sum(); }, {x},
                         {ops::relu_backward(x, g)}));
  }
  {
    MatrixD s = rand_mat(4, 5, rng, -2.0, 2.0);
    s(0, 4) = -std::numeric_limits<double>::infinity();
    const MatrixD g = rand_mat(4, 5, rng);
    const MatrixD y = ops::softmax_rows(s);
    MatrixD an = ops::softmax_rows_backward(y, g);
    // The masked entry is a constant, not an input.
    MatrixD s_in = s;
    s_in(0, 4) = 0.0;
    an(0, 4) = 0.0;
    add("softmax_rows", fd_error(
                            [&](const auto& in) {
                              MatrixL m = in[0];
                              m(0, 4) = -std::numeric_limits<long double>::infinity();
                              return ops::softmax_rows(m).cwiseProduct(ext(g)).sum();
                            },
                            {s_in}, {an}));
  }
  {
    const PoolFn pool = pool_of(opt);
    for (int window : {3, 5}) {
      const MatrixD x = rand_mat(3, 9, rng), g = rand_mat(3, 9, rng);
      const double err = finite_diff_check(
          [&](const std::vector<MatrixD>& in) { return pool(in[0], window).cwiseProduct(g).sum(); }, {x},
          {ops::avg_pool_rows_backward(g, window)});
      add("avg_pool_rows.P" + std::to_string(window), err);
    }
  }
  {
    const MatrixD x = rand_mat(4, 6, rng), gamma = rand_mat(1, 6, rng, 0.5, 1.5),
                  beta = rand_mat(1, 6, rng), g = rand_mat(4, 6, rng);
    ops::LayerNormCache<double> cache;
    ops::layer_norm(x, gamma, beta, &cache);
    const auto an = ops::layer_norm_backward(cache, gamma, g);
    add("layer_norm", fd_error(
                          [&](const auto& in) {
                            return ops::layer_norm<long double>(in[0], in[1], in[2], nullptr)
                                .cwiseProduct(ext(g))
                                .sum();
                          },
                          {x, gamma, beta}, {an.input, an.gamma, an.beta}));
  }
  {
    const MatrixD logits = rand_mat(1, 6, rng, -2.0, 2.0);
    add("cross_entropy", fd_error([&](const auto& in) { return ops::cross_entropy(in[0], 4); }, {logits},
                                  {ops::cross_entropy_backward(logits, 4)}));
  }

  // Heads: every variant, both ELD placements, strict and relaxed pooling.
  const Eigen::Index len = 8, dk = 4;
  for (Variant v : kVariants) {
    for (EldMode mode : {EldMode::kScoreScale, EldMode::kProbScale}) {
      if (mode == EldMode::kProbScale && v != Variant::kLocal && v != Variant::kLas) continue;
      for (bool strict : {true, false}) {
        const double rate = v == Variant::kAlibi ? 0.4 : 0.6;
        const auto spec = make_head_spec<double>(v, rate, 3, mode, strict, false, len);
        const auto spec_l = make_head_spec<long double>(v, rate, 3, mode, strict, false, len);
        const MatrixD q = rand_mat(len, dk, rng), k = rand_mat(len, dk, rng), val = rand_mat(len, dk, rng),
                      g = rand_mat(len, dk, rng);
        HeadCache<double> cache;
        attention_head(q, k, val, spec, &cache);
        const auto an = attention_head_backward(q, k, val, spec, cache, g);
        const double err = fd_error(
            [&](const auto& in) { return attention_head(in[0], in[1], in[2], spec_l).cwiseProduct(ext(g)).sum(); },
            {q, k, val}, {an.q, an.k, an.v});
        add("head." + std::string(to_string(v)) + "." + std::string(to_string(mode)) +
                (strict ? ".strict" : ".relaxed"),
            err);
      }
    }
  }

  // Multi-head attention with projections, full and chunked.
  for (Variant v : kVariants) {
    for (int chunk : {0, 3}) {
      AttentionConfig c = small_attention(v, 2, 8);
      c.chunk_size = chunk;
      const AttentionPlan<double> plan(c, len);
      const AttentionPlan<long double> plan_l(c, len);
      const auto w = AttentionWeights<double>::random(8, rng);
      const MatrixD x = rand_mat(len, 8, rng), g = rand_mat(len, 8, rng);
      AttentionCache<double> cache;
      multi_head_attention(x, w, plan, &cache);
      const auto an = multi_head_attention_backward(w, plan, cache, g);
      const double err = fd_error(
          [&](const auto& in) {
            const AttentionWeights<long double> wl{in[1], in[2], in[3], in[4]};
            return multi_head_attention(in[0], wl, plan_l).cwiseProduct(ext(g)).sum();
          },
          {x, w.wq, w.wk, w.wv, w.wo},
          {an.input, an.weights.wq, an.weights.wk, an.weights.wv, an.weights.wo});
      add("multi_head." + std::string(to_string(v)) + (chunk ? ".chunk3" : ".full"), err);
    }
  }

  // Two-layer model at L = 8, gradients of the loss for every parameter.
  for (Variant v : {Variant::kVanilla, Variant::kLas}) {
    ModelConfig m;
    m.depth = 2;
    m.ffn_multiplier = 2;
    m.vocab_size = 6;
    m.num_classes = 3;
    m.max_length = 8;
    m.attention = small_attention(v, 2, 8);
    const auto params = init_params<double>(m, opt.seed);
    std::uniform_int_distribution<int> tok(0, 5);
    std::vector<int> tokens(8);
    for (int& t : tokens) t = tok(rng);
    auto grads = params.zeros_like();
    loss_and_grad(params, tokens, 1, m, &grads);
    std::vector<MatrixD> flat, flat_grads;
    params.visit([&](const std::string&, const MatrixD& p) { flat.push_back(p); });
    grads.visit([&](const std::string&, const MatrixD& p) { flat_grads.push_back(p); });
    const auto layout = params.cast<long double>();
    const double err = fd_error(
        [&](const std::vector<MatrixL>& in) {
          auto p = layout;
          std::size_t i = 0;
          p.visit([&](const std::string&, MatrixL& dst) { dst = in[i++]; });
          return loss_and_grad<long double>(p, tokens, 1, m, nullptr);
        },
        flat, flat_grads);
    add("model." + std::string(to_string(v)) + ".L8", err);
  }
  return out;
}

std::vector<Check> identity_checks(const Options& opt) {
  Rng rng(opt.seed + 1);
  std::vector<Check> out;
  const Eigen::Index len = opt.quick ? 12 : 32;

  {
    double worst = 0.0;
    for (bool strict : {true, false}) {
      const MatrixD q = rand_mat(len, 8, rng), k = rand_mat(len, 8, rng), v = rand_mat(len, 8, rng);
      const auto las = make_head_spec<double>(Variant::kLas, 0.0, 1, EldMode::kScoreScale, strict, false, len);
      worst = std::max(worst, max_abs(attention_head(q, k, v, las),
                                      attention_head(q, k, v, make_vanilla_head<double>())));
    }
    AttentionConfig c = small_attention(Variant::kLas, 1, 16);
    c.pool_window = 1;
    c.head0_vanilla = false;
    AttentionConfig vanilla = c;
    vanilla.variant = Variant::kVanilla;
    const auto w = AttentionWeights<double>::random(16, rng);
    const MatrixD x = rand_mat(len, 16, rng);
    worst = std::max(worst, max_abs(multi_head_attention(x, w, c), multi_head_attention(x, w, vanilla)));
    out.push_back(at_most("identity.las_alpha0_P1", worst, kIdentityTol));
  }
  {
    AttentionConfig c = small_attention(Variant::kAlibi, 4, 16);
    c.alibi_slope = 0.0;
    AttentionConfig vanilla = c;
    vanilla.variant = Variant::kVanilla;
    const auto w = AttentionWeights<double>::random(16, rng);
    const MatrixD x = rand_mat(len, 16, rng);
    out.push_back(at_most("identity.alibi_m0",
                          max_abs(multi_head_attention(x, w, c), multi_head_attention(x, w, vanilla)),
                          kIdentityTol));
  }
  {
    double worst = 0.0;
    for (Variant v : kVariants) {
      const AttentionConfig c = small_attention(v, 4, 16);
      const auto w = AttentionWeights<double>::random(16, rng);
      const MatrixD x = rand_mat(len, 16, rng);
      const MatrixD full = multi_head_attention(x, w, c);
      for (int chunk : {static_cast<int>(len), static_cast<int>(2 * len)})
        worst = std::max(worst, max_abs(chunked_attention(x, w, c, chunk), full));
    }
    out.push_back(at_most("identity.chunk_ge_L", worst, kIdentityTol));
  }
  {
    const MatrixD x = rand_mat(6, len, rng);
    out.push_back(at_most("identity.avg_pool_P1", max_abs(pool_of(opt)(x, 1), x), kIdentityTol));
  }
  return out;
}

std::vector<Check> causality_checks(const Options& opt) {
  Rng rng(opt.seed + 2);
  std::vector<Check> out;
  const Eigen::Index len = opt.quick ? 16 : 32;
  const int trials = opt.quick ? 5 : 20;
  for (Variant v : kVariants) {
    for (int chunk : {0, 8}) {
      AttentionConfig c = small_attention(v, 4, 16);
      c.strict_causal = true;
      c.pool_window = 5;
      c.chunk_size = chunk;
      const AttentionPlan<double> plan(c, len);
      double worst = 0.0;
      for (int t = 0; t < trials; ++t) {
        const auto w = AttentionWeights<double>::random(16, rng);
        const MatrixD x = rand_mat(len, 16, rng);
        std::uniform_int_distribution<Eigen::Index> cut(1, len - 1);
        const Eigen::Index p = cut(rng);
        MatrixD y = x;
        y.bottomRows(len - p) = rand_mat(len - p, 16, rng, -3.0, 3.0);
        worst = std::max(worst, max_abs(multi_head_attention(x, w, plan).topRows(p),
                                        multi_head_attention(y, w, plan).topRows(p)));
      }
      out.push_back(at_most("causality." + std::string(to_string(v)) + (chunk ? ".chunk8" : ".full"),
                            worst, kCausalTol));
    }
  }
  return out;
}

std::vector<Check> structure_checks(const Options& opt) {
  Rng rng(opt.seed + 3);
  std::vector<Check> out;
  const PoolFn pool = pool_of(opt);

  {
    std::uniform_real_distribution<double> rate(0.0, 5.0);
    double violations = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const MatrixD m = build_eld_mask<double>(trial == 0 ? 0.0 : rate(rng), 16).materialize();
      for (int i = 0; i < 16; ++i) {
        violations += m(i, i) != 1.0;
        for (int j = 1; j <= i; ++j) {
          violations += m(i, j) != m(i - 1, j - 1);
          violations += m(i, j - 1) > m(i, j);
        }
      }
    }
    out.push_back(at_most("structure.eld_toeplitz_monotone", violations, 0.0));
  }
  {
    double worst = 0.0;
    for (int h : {1, 2, 4, 8, 16}) {
      for (double b : {0.0001, 0.001, 0.5}) {
        const auto a = alpha_schedule(h, b);
        worst = std::max(worst, std::abs(a[0]));
        if (h == 1) continue;
        worst = std::max(worst, std::abs(std::exp(-a[h - 1]) - b) / b);
        for (int c = 1; c < h; ++c)
          worst = std::max(worst, std::abs(std::exp(-a[c]) - b * c / (h - 1)) / b);
      }
    }
    out.push_back(at_most("structure.alpha_schedule", worst, 1e-12));
  }
  {
    double worst = 0.0;
    const Eigen::Index len = opt.quick ? 16 : 32;
    for (Variant v : kVariants) {
      for (EldMode mode : {EldMode::kScoreScale, EldMode::kProbScale}) {
        const auto spec = make_head_spec<double>(v, 0.7, 5, mode, true, false, len);
        HeadCache<double> cache;
        attention_weights<double>(rand_mat(len, 8, rng, -2, 2), rand_mat(len, 8, rng, -2, 2), spec, &cache);
        worst = std::max(worst, (cache.softmax.rowwise().sum().array() - 1.0).abs().maxCoeff());
      }
    }
    out.push_back(at_most("structure.rows_stochastic_before_pooling", worst, kStochasticTol));
  }
  {
    double worst = 0.0;
    for (int window : {3, 5}) {
      const int h = (window - 1) / 2;
      MatrixD x = rand_mat(6, 20, rng, 0.0, 1.0);
      x.leftCols(h).setZero();
      x.rightCols(h).setZero();
      const MatrixD y = pool(x, window);
      worst = std::max(worst, max_abs(y.rowwise().sum(), x.rowwise().sum()));
    }
    out.push_back(at_most("structure.pool_mass_interior", worst, 1e-12));
  }
  {
    double worst = 0.0;
    const Eigen::Index len = opt.quick ? 12 : 24;
    for (Variant v : {Variant::kSmooth, Variant::kLas}) {
      for (int window : {3, 5}) {
        const auto spec = make_head_spec<double>(v, 0.5, window, EldMode::kScoreScale, true, false, len);
        HeadCache<double> cache;
        attention_weights<double>(rand_mat(len, 8, rng), rand_mat(len, 8, rng), spec, &cache);
        MatrixD want = pool(cache.softmax, window);
        want.triangularView<Eigen::StrictlyUpper>().setZero();
        worst = std::max(worst, max_abs(cache.weights, want));
      }
    }
    out.push_back(at_most("structure.head_pooling_matches_avg_pool", worst, 1e-12));
  }
  {
    ModelConfig las;
    las.attention.variant = Variant::kLas;
    ModelConfig vanilla = las;
    vanilla.attention.variant = Variant::kVanilla;
    const double diff = std::abs(static_cast<double>(parameter_count(las)) -
                                 static_cast<double>(parameter_count(vanilla))) +
                        std::abs(static_cast<double>(init_params<float>(las, 0).count()) -
                                 static_cast<double>(init_params<float>(vanilla, 0).count()));
    out.push_back(at_most("structure.las_parameter_count_equals_vanilla", diff, 0.0));
  }
  return out;
}

std::vector<Check> run_all(const Options& opt, std::vector<ssm::VerifyRow>* theorem_rows) {
  std::vector<Check> all;
  for (auto part : {theorem1_checks(opt, theorem_rows), gradient_checks(opt), identity_checks(opt),
                    causality_checks(opt), structure_checks(opt)}) {
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

std::string summary_csv(const std::vector<Check>& checks) {
  std::ostringstream s;
  s << "check,value,tolerance,pass\n";
  char buf[64];
  for (const auto& c : checks) {
    s << c.name << ',';
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g", c.value, c.tolerance);
    s << buf << ',' << (c.pass ? "true" : "false") << '\n';
  }
  return s.str();
}

std::string theorem_csv(const std::vector<ssm::VerifyRow>& rows) {
  std::ostringstream s;
  s << "kernel_id,L,max_error,pass\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6g", r.max_error);
    s << r.kernel_id << ',' << r.length << ',' << buf << ',' << (r.pass ? "true" : "false") << '\n';
  }
  return s.str();
}

}  // namespace lasattn::verify
