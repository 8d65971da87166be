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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lasattn/data.hpp"
#include "lasattn/model.hpp"

namespace lasattn {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double clip_norm = 1.0;
  int threads = 1;             // capped by LASATTN_THREADS when set
  bool record_timing = true;   // false writes 0 in the seconds column

  void validate() const;
};

/// Adam with decoupled weight decay.
template <typename Scalar>
struct OptimizerState {
  ModelParams<Scalar> m, v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  static OptimizerState init(const ModelParams<Scalar>& params, double lr, double weight_decay);
};

/// One update. Weight decay scales the parameters by (1 - lr * wd) before the
/// moments move. A non-finite gradient throws NumericError naming the tensor.
template <typename Scalar>
void adam_step(OptimizerState<Scalar>& state, ModelParams<Scalar>& params,
               const ModelParams<Scalar>& grads);

template <typename Scalar>
double global_norm(const ModelParams<Scalar>& grads);

/// Rescales grads to norm max_norm if larger; returns the norm before clipping.
template <typename Scalar>
double clip_global_norm(ModelParams<Scalar>& grads, double max_norm);

struct EpochMetrics {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

struct Metrics {
  std::vector<EpochMetrics> rows;

  /// Rows of one split in epoch order.
  std::vector<EpochMetrics> split(const std::string& name) const;
  double final_accuracy(const std::string& name = "val") const;
};

/// Header "epoch,split,loss,accuracy,seconds".
void write_metrics_csv(const std::filesystem::path& path, const Metrics& metrics);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

template <typename Scalar>
EvalResult evaluate(const ModelParams<Scalar>& params, const data::SequenceDataset& dataset,
                    const ModelConfig& config, int threads = 1);

struct TrainResult {
  Metrics metrics;
  ModelParams<float> params;
  std::vector<double> batch_losses;  // mean loss of every optimizer step, in order
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch training in 32-bit floats. All randomness (initialisation,
/// per-epoch shuffles) derives from `seed`.
TrainResult train(const ModelConfig& model, const data::Split& data, const TrainConfig& config,
                  std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Generates or loads the task with `seed`, splits it and trains.
TrainResult train(const ModelConfig& model, const data::TaskSpec& task, const TrainConfig& config,
                  std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Copies vocabulary size, class count and maximum length from the dataset.
ModelConfig fit_to_dataset(ModelConfig model, const data::SequenceDataset& dataset);

/// Worker threads for batch work: `requested`, capped by LASATTN_THREADS.
int resolve_threads(int requested);

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

/// One run per (chunk size, seed); accuracy is the last validation accuracy.
std::vector<SweepRow> sweep_chunk(const ModelConfig& model, const data::Split& data,
                                  const TrainConfig& config, const std::vector<int>& chunk_sizes,
                                  const std::vector<std::uint64_t>& seeds);

/// One run per (fraction, seed) on nested stratified subsets of the training split.
std::vector<SweepRow> sweep_data(const ModelConfig& model, const data::Split& data,
                                 const TrainConfig& config, const std::vector<double>& fractions,
                                 const std::vector<std::uint64_t>& seeds);

/// Header "<value_name>,seed,accuracy".
void write_sweep_csv(const std::filesystem::path& path, const std::string& value_name,
                     const std::vector<SweepRow>& rows);

/// Fraction of seeds whose accuracy is non-decreasing in the swept value
/// (rows grouped by seed, sorted by value); `decreasing` flips the order.
double monotone_share(const std::vector<SweepRow>& rows, bool decreasing = false);

}  // namespace lasattn
