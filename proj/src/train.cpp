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


#include "lasattn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

namespace lasattn {

namespace {

constexpr std::uint64_t kShuffleSalt = 0x9E3779B97F4A7C15ULL;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int argmax(const MatrixF& logits) {
  Eigen::Index best = 0;
  logits.row(0).maxCoeff(&best);
  return static_cast<int>(best);
}

// Runs f(i) for i in [0, n) on up to `threads` workers, contiguous slices each.
template <typename F>
void parallel_for(int n, int threads, F&& f) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const int per = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t * per; i < std::min(n, (t + 1) * per); ++i) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("train: epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ParameterError("train: learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ParameterError("train: weight_decay must be >= 0");
  if (!(clip_norm > 0.0)) throw ParameterError("train: clip_norm must be > 0");
  if (threads < 1) throw ParameterError("train: threads must be >= 1");
}

template <typename Scalar>
OptimizerState<Scalar> OptimizerState<Scalar>::init(const ModelParams<Scalar>& params, double lr,
                                                    double weight_decay) {
  OptimizerState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  s.lr = lr;
  s.weight_decay = weight_decay;
  return s;
}

template <typename Scalar>
void adam_step(OptimizerState<Scalar>& state, ModelParams<Scalar>& params,
               const ModelParams<Scalar>& grads) {
  std::vector<std::pair<std::string, const Matrix<Scalar>*>> g;
  grads.visit([&](const std::string& name, const Matrix<Scalar>& m) { g.emplace_back(name, &m); });
  std::vector<Matrix<Scalar>*> m1, m2;
  state.m.visit([&](const std::string&, Matrix<Scalar>& m) { m1.push_back(&m); });
  state.v.visit([&](const std::string&, Matrix<Scalar>& m) { m2.push_back(&m); });

  std::size_t i = 0;
  params.visit([&](const std::string& name, const Matrix<Scalar>& p) {
    if (i >= g.size() || g[i].first != name || g[i].second->rows() != p.rows() ||
        g[i].second->cols() != p.cols() || m1[i]->rows() != p.rows()) {
      throw DimensionError("adam_step: gradient layout differs at " + name);
    }
    if (!g[i].second->allFinite()) {
      throw NumericError("adam_step: non-finite gradient in " + name);
    }
    ++i;
  });
  if (i != g.size()) throw DimensionError("adam_step: gradient layout differs");

  ++state.step;
  const auto t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(state.beta1), b2 = static_cast<Scalar>(state.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(state.beta1, t));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(state.beta2, t));
  const auto lr = static_cast<Scalar>(state.lr), eps = static_cast<Scalar>(state.eps);
  const auto decay = static_cast<Scalar>(1.0 - state.lr * state.weight_decay);
  i = 0;
  params.visit([&](const std::string& name, Matrix<Scalar>& p) {
    const auto& gr = g[i].second->array();
    auto m = m1[i]->array();
    auto v = m2[i]->array();
    if (state.weight_decay != 0.0) p *= decay;
    m = b1 * m + (Scalar(1) - b1) * gr;
    v = b2 * v + (Scalar(1) - b2) * gr.square();
    p.array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
    if (!p.allFinite()) throw NumericError("adam_step: parameter " + name + " became non-finite");
    ++i;
  });
}

template <typename Scalar>
double global_norm(const ModelParams<Scalar>& grads) {
  double sq = 0.0;
  grads.visit([&](const std::string&, const Matrix<Scalar>& m) {
    sq += m.template cast<double>().squaredNorm();
  });
  return std::sqrt(sq);
}

template <typename Scalar>
double clip_global_norm(ModelParams<Scalar>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const auto scale = static_cast<Scalar>(max_norm / norm);
    grads.visit([&](const std::string&, Matrix<Scalar>& m) { m *= scale; });
  }
  return norm;
}

std::vector<EpochMetrics> Metrics::split(const std::string& name) const {
  std::vector<EpochMetrics> out;
  for (const auto& r : rows)
    if (r.split == name) out.push_back(r);
  return out;
}

double Metrics::final_accuracy(const std::string& name) const {
  const auto s = split(name);
  if (s.empty()) throw ParameterError("metrics: no rows for split " + name);
  return s.back().accuracy;
}

void write_metrics_csv(const std::filesystem::path& path, const Metrics& metrics) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "epoch,split,loss,accuracy,seconds\n";
  for (const auto& r : metrics.rows) {
    f << r.epoch << ',' << r.split << ',' << fmt(r.loss) << ',' << fmt(r.accuracy) << ','
      << fmt(r.seconds) << '\n';
  }
}

template <typename Scalar>
EvalResult evaluate(const ModelParams<Scalar>& params, const data::SequenceDataset& dataset,
                    const ModelConfig& config, int threads) {
  const int n = static_cast<int>(dataset.size());
  if (n == 0) throw ParameterError("evaluate: empty dataset");
  std::vector<double> losses(n);
  std::vector<int> correct(n);
  parallel_for(n, threads, [&](int i) {
    const auto& e = dataset.examples[i];
    Matrix<Scalar> logits;
    losses[i] = static_cast<double>(
        loss_and_grad<Scalar>(params, e.tokens, e.label, config, nullptr, &logits));
    Eigen::Index best = 0;
    logits.row(0).maxCoeff(&best);
    correct[i] = best == e.label;
  });
  EvalResult r;
  r.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
  r.accuracy = std::accumulate(correct.begin(), correct.end(), 0.0) / n;
  return r;
}

int resolve_threads(int requested) {
  int threads = std::max(requested, 1);
  if (const char* env = std::getenv("LASATTN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) threads = std::min(threads, cap);
  }
  return threads;
}

ModelConfig fit_to_dataset(ModelConfig model, const data::SequenceDataset& dataset) {
  model.vocab_size = dataset.vocab_size;
  model.num_classes = dataset.num_classes;
  model.max_length = dataset.max_length;
  return model;
}

TrainResult train(const ModelConfig& model, const data::Split& data, const TrainConfig& config,
                  std::uint64_t seed, const EpochCallback& on_epoch) {
  model.validate();
  config.validate();
  for (const auto* d : {&data.train, &data.validation}) {
    if (d->vocab_size > model.vocab_size || d->num_classes > model.num_classes ||
        d->max_length > model.max_length) {
      throw ParameterError("train: model vocabulary, classes or length smaller than the dataset");
    }
  }
  const int threads = resolve_threads(config.threads);
  using Clock = std::chrono::steady_clock;

  TrainResult result;
  ModelParams<float>& params = result.params = init_params<float>(model, seed);
  auto opt = OptimizerState<float>::init(params, config.learning_rate, config.weight_decay);
  Rng shuffle_rng(seed ^ kShuffleSalt);
  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  const ModelParams<float> zero = params.zeros_like();
  std::vector<ModelParams<float>> per_example;
  if (threads > 1) per_example.assign(config.batch_size, zero);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0, correct = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const int count = static_cast<int>(std::min<std::size_t>(config.batch_size, order.size() - b));
      std::vector<double> losses(count);
      std::vector<int> hits(count);
      ModelParams<float> grads = zero;
      auto run = [&](int i, ModelParams<float>* sink) {
        const auto& e = data.train.examples[order[b + i]];
        MatrixF logits;
        losses[i] = loss_and_grad<float>(params, e.tokens, e.label, model, sink, &logits);
        hits[i] = argmax(logits) == e.label;
      };
      if (threads > 1) {
        parallel_for(count, threads, [&](int i) {
          per_example[i] = zero;
          run(i, &per_example[i]);
        });
        // Fixed-order reduction keeps results independent of the thread count.
        for (int i = 0; i < count; ++i) {
          std::vector<MatrixF*> dst;
          grads.visit([&](const std::string&, MatrixF& m) { dst.push_back(&m); });
          std::size_t k = 0;
          per_example[i].visit([&](const std::string&, const MatrixF& m) { *dst[k++] += m; });
        }
      } else {
        for (int i = 0; i < count; ++i) run(i, &grads);
      }
      const float inv = 1.0f / static_cast<float>(count);
      grads.visit([&](const std::string&, MatrixF& m) { m *= inv; });
      clip_global_norm(grads, config.clip_norm);
      adam_step(opt, params, grads);

      const double batch_loss = std::accumulate(losses.begin(), losses.end(), 0.0);
      result.batch_losses.push_back(batch_loss / count);
      loss_sum += batch_loss;
      correct += std::accumulate(hits.begin(), hits.end(), 0.0);
    }
    const double train_seconds =
        config.record_timing ? std::chrono::duration<double>(Clock::now() - start).count() : 0.0;
    const double n = static_cast<double>(order.size());
    EpochMetrics tr{epoch, "train", loss_sum / n, correct / n, train_seconds};
    result.metrics.rows.push_back(tr);
    if (on_epoch) on_epoch(tr);

    const auto val_start = Clock::now();
    const EvalResult ev = evaluate(params, data.validation, model, threads);
    const double val_seconds =
        config.record_timing ? std::chrono::duration<double>(Clock::now() - val_start).count() : 0.0;
    EpochMetrics va{epoch, "val", ev.loss, ev.accuracy, val_seconds};
    result.metrics.rows.push_back(va);
    if (on_epoch) on_epoch(va);
  }
  return result;
}

TrainResult train(const ModelConfig& model, const data::TaskSpec& task, const TrainConfig& config,
                  std::uint64_t seed, const EpochCallback& on_epoch) {
  const auto dataset = data::make_dataset(task, seed);
  return train(model, data::split(dataset, task.train_fraction), config, seed, on_epoch);
}

std::vector<SweepRow> sweep_chunk(const ModelConfig& model, const data::Split& data,
                                  const TrainConfig& config, const std::vector<int>& chunk_sizes,
                                  const std::vector<std::uint64_t>& seeds) {
  std::vector<SweepRow> rows;
  for (int chunk : chunk_sizes) {
    if (chunk < 1) throw ParameterError("sweep_chunk: chunk sizes must be >= 1");
    ModelConfig m = model;
    m.attention.chunk_size = chunk;
    for (std::uint64_t seed : seeds) {
      const auto r = train(m, data, config, seed);
      rows.push_back({static_cast<double>(chunk), seed, r.metrics.final_accuracy("val")});
    }
  }
  return rows;
}

std::vector<SweepRow> sweep_data(const ModelConfig& model, const data::Split& data,
                                 const TrainConfig& config, const std::vector<double>& fractions,
                                 const std::vector<std::uint64_t>& seeds) {
  std::vector<SweepRow> rows;
  for (double fraction : fractions) {
    for (std::uint64_t seed : seeds) {
      const data::Split sub{data::subsample(data.train, fraction, seed), data.validation};
      const auto r = train(model, sub, config, seed);
      rows.push_back({fraction, seed, r.metrics.final_accuracy("val")});
    }
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::string& value_name,
                     const std::vector<SweepRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << value_name << ",seed,accuracy\n";
  for (const auto& r : rows) f << fmt(r.value) << ',' << r.seed << ',' << fmt(r.accuracy) << '\n';
}

double monotone_share(const std::vector<SweepRow>& rows, bool decreasing) {
  std::map<std::uint64_t, std::vector<std::pair<double, double>>> by_seed;
  for (const auto& r : rows) by_seed[r.seed].emplace_back(r.value, r.accuracy);
  if (by_seed.empty()) return 0.0;
  int good = 0;
  for (auto& [seed, points] : by_seed) {
    std::sort(points.begin(), points.end());
    bool ok = true;
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double step = points[i].second - points[i - 1].second;
      if (decreasing ? step > 0.0 : step < 0.0) ok = false;
    }
    good += ok;
  }
  return static_cast<double>(good) / by_seed.size();
}

#define LASATTN_INSTANTIATE(Scalar)                                                            \
  template struct OptimizerState<Scalar>;                                                      \
  template void adam_step<Scalar>(OptimizerState<Scalar>&, ModelParams<Scalar>&,               \
                                  const ModelParams<Scalar>&);                                 \
  template double global_norm<Scalar>(const ModelParams<Scalar>&);                             \
  template double clip_global_norm<Scalar>(ModelParams<Scalar>&, double);                      \
  template EvalResult evaluate<Scalar>(const ModelParams<Scalar>&, const data::SequenceDataset&, \
                                       const ModelConfig&, int);

LASATTN_INSTANTIATE(float)
LASATTN_INSTANTIATE(double)

#undef LASATTN_INSTANTIATE

}  // namespace lasattn
