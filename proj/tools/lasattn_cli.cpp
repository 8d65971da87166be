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


// Command-line entry point: verify, train, sweep-chunk, sweep-data, bench,
// export-attn.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lasattn/bench.hpp"
#include "lasattn/checkpoint.hpp"
#include "lasattn/config.hpp"
#include "lasattn/data.hpp"
#include "lasattn/train.hpp"
#include "lasattn/verify.hpp"

namespace fs = std::filesystem;
using namespace lasattn;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "run configuration (JSON)");
  cmd->add_option("--seed", c.seed, "override the configured seed");
  cmd->add_option("--out", c.out, "override the output directory");
}

RunConfig load(const Common& c, const std::string& default_out) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.config.empty()) rc.out = default_out;
  if (c.seed) rc.seed = *c.seed;
  if (!c.out.empty()) rc.out = c.out;
  return rc;
}

// Pins the data-dependent sizes so the written config reproduces the run.
ModelConfig resolve(RunConfig& rc, const data::SequenceDataset& dataset) {
  const ModelConfig m = rc.resolve_model(dataset);
  rc.vocab_size = m.vocab_size;
  rc.num_classes = m.num_classes;
  rc.max_length = m.max_length;
  return m;
}

void log_epoch(const EpochMetrics& e) {
  std::fprintf(stderr, "epoch %3d %-5s loss %.4f acc %.4f (%.1fs)\n", e.epoch, e.split.c_str(), e.loss,
               e.accuracy, e.seconds);
}

int cmd_verify(const Common& c, bool quick) {
  RunConfig rc = load(c, "runs/verify");
  verify::Options opt;
  opt.quick = quick;
  opt.seed = rc.seed;
  std::vector<ssm::VerifyRow> rows;
  const auto checks = verify::run_all(opt, &rows);
  const fs::path out = rc.out;
  fs::create_directories(out);
  const std::string summary = verify::summary_csv(checks);
  std::ofstream(out / "verify_summary.csv") << summary;
  std::ofstream(out / "theorem1.csv") << verify::theorem_csv(rows);
  write_run_config(out, rc);
  std::cout << summary;
  int failed = 0;
  for (const auto& ch : checks) {
    if (!ch.pass) {
      std::cerr << "FAILED " << ch.name << ": " << ch.value << " (tolerance " << ch.tolerance << ")\n";
      ++failed;
    }
  }
  std::cerr << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed ? 1 : 0;
}

int cmd_train(const Common& c) {
  RunConfig rc = load(c, "runs/train");
  const auto dataset = data::make_dataset(rc.task, rc.seed);
  const ModelConfig model = resolve(rc, dataset);
  const fs::path out = rc.out;
  write_run_config(out, rc);
  const auto result =
      train(model, data::split(dataset, rc.task.train_fraction), rc.train, rc.seed, log_epoch);
  write_metrics_csv(out / "metrics.csv", result.metrics);
  nlohmann::json meta;
  meta["model"] = to_json(model);
  meta["seed"] = rc.seed;
  meta["run"] = to_json(rc);
  save_checkpoint(out / "model.ckpt", result.params, meta);
  std::cerr << "wrote " << (out / "metrics.csv").string() << " and " << (out / "model.ckpt").string()
            << "\n";
  return 0;
}

int cmd_sweep(const Common& c, bool chunks) {
  RunConfig rc = load(c, chunks ? "runs/sweep-chunk" : "runs/sweep-data");
  const auto dataset = data::make_dataset(rc.task, rc.seed);
  const ModelConfig model = resolve(rc, dataset);
  const auto split = data::split(dataset, rc.task.train_fraction);
  const fs::path out = rc.out;
  write_run_config(out, rc);
  std::vector<SweepRow> rows;
  if (chunks) {
    rows = sweep_chunk(model, split, rc.train, rc.sweep.chunk_sizes, rc.sweep.seeds);
    write_sweep_csv(out / "sweep_chunk.csv", "chunk", rows);
  } else {
    rows = sweep_data(model, split, rc.train, rc.sweep.fractions, rc.sweep.seeds);
    write_sweep_csv(out / "sweep_data.csv", "fraction", rows);
  }
  for (const auto& r : rows)
    std::cout << (chunks ? "chunk " : "fraction ") << r.value << " seed " << r.seed << " accuracy "
              << r.accuracy << "\n";
  // Reported only: with few seeds the trend is noisy.
  std::cout << "seeds with accuracy non-decreasing in " << (chunks ? "chunk size" : "fraction")
            << ": " << monotone_share(rows) * rc.sweep.seeds.size() << "/" << rc.sweep.seeds.size()
            << "\n";
  return 0;
}

int cmd_bench(const Common& c, const std::vector<std::string>& variants, const std::vector<int>& lengths,
              std::optional<int> trials) {
  RunConfig rc = load(c, "runs/bench");
  if (!variants.empty()) {
    rc.bench.variants.clear();
    for (const auto& v : variants) rc.bench.variants.push_back(parse_variant(v));
  }
  if (!lengths.empty()) rc.bench.lengths = lengths;
  if (trials) rc.bench.trials = *trials;
  const fs::path out = rc.out;
  write_run_config(out, rc);
  std::vector<BenchResult> results;
  for (int len : rc.bench.lengths) {
    for (Variant v : rc.bench.variants) {
      AttentionConfig a = rc.model.attention;
      a.variant = v;
      results.push_back(time_forward(a, len, rc.bench.trials, rc.seed));
      const auto& r = results.back();
      std::printf("%-8s L=%-6lld median %.6fs iqr %.6fs peak %zu bytes\n", r.variant.c_str(),
                  static_cast<long long>(r.length), r.median_seconds, r.iqr_seconds, r.peak_bytes);
    }
  }
  report(results, out / "bench.csv");
  return 0;
}

std::vector<int> read_tokens(const std::string& file, const std::string& list) {
  std::string text = list;
  if (!file.empty()) {
    std::ifstream f(file);
    if (!f) throw InputError("cannot open " + file);
    std::stringstream s;
    s << f.rdbuf();
    text = s.str();
  }
  for (char& ch : text)
    if (ch == ',') ch = ' ';
  std::istringstream in(text);
  std::vector<int> tokens;
  for (std::string word; in >> word;) {
    try {
      std::size_t used = 0;
      tokens.push_back(std::stoi(word, &used));
      if (used != word.size()) throw std::invalid_argument(word);
    } catch (const std::logic_error&) {
      throw InputError("not a token id: '" + word + "'");
    }
  }
  if (tokens.empty()) throw InputError("no input tokens given");
  return tokens;
}

int cmd_export(const Common& c, const std::string& checkpoint, const std::string& input,
               const std::string& tokens_arg) {
  const auto meta = checkpoint_meta(checkpoint);
  if (!meta.contains("model")) throw FormatError(checkpoint + ": no model description");
  const ModelConfig model = model_from_json(meta["model"]);
  RunConfig rc = load(c, "runs/export-attn");
  if (c.config.empty() && meta.contains("run")) {
    rc = parse_run_config(meta["run"]);
    if (c.seed) rc.seed = *c.seed;
    rc.out = c.out.empty() ? "runs/export-attn" : c.out;
  }
  auto params = init_params<float>(model, 0);
  load_checkpoint(checkpoint, params);
  const auto tokens = read_tokens(input, tokens_arg);
  const auto maps = attention_maps(params, tokens, model);
  const fs::path out = rc.out;
  fs::create_directories(out);
  write_run_config(out, rc);
  for (std::size_t l = 0; l < maps.size(); ++l) {
    for (std::size_t h = 0; h < maps[l].size(); ++h) {
      const std::string stem = (out / ("attn_layer" + std::to_string(l) + "_head" + std::to_string(h))).string();
      export_attention_map(maps[l][h], stem);
      std::printf("%s roughness %.6f\n", stem.c_str(), row_roughness(maps[l][h]));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local-and-smooth attention: verification, training, sweeps, benchmarks"};
  app.require_subcommand(1);

  Common common;
  bool quick = false;
  auto* verify_cmd = app.add_subcommand("verify", "gradient, construction and invariant checks");
  add_common(verify_cmd, common);
  verify_cmd->add_flag("--quick", quick, "sequence lengths <= 16 only");

  auto* train_cmd = app.add_subcommand("train", "train a classifier and write metrics and a checkpoint");
  add_common(train_cmd, common);
  auto* chunk_cmd = app.add_subcommand("sweep-chunk", "one training run per chunk size and seed");
  add_common(chunk_cmd, common);
  auto* data_cmd = app.add_subcommand("sweep-data", "one training run per data fraction and seed");
  add_common(data_cmd, common);

  std::vector<std::string> variants;
  std::vector<int> lengths;
  std::optional<int> trials;
  auto* bench_cmd = app.add_subcommand("bench", "time the attention forward pass");
  add_common(bench_cmd, common);
  bench_cmd->add_option("--variants", variants, "vanilla, alibi, l, s, las")->delimiter(',');
  bench_cmd->add_option("--lengths", lengths, "sequence lengths")->delimiter(',');
  bench_cmd->add_option("--trials", trials, "timed runs per point (>= 5)");

  std::string checkpoint, input, tokens;
  auto* export_cmd = app.add_subcommand("export-attn", "write attention maps as CSV and PGM");
  add_common(export_cmd, common);
  export_cmd->add_option("--checkpoint", checkpoint, "model.ckpt from train")->required();
  export_cmd->add_option("--input", input, "file of token ids");
  export_cmd->add_option("--tokens", tokens, "comma-separated token ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*verify_cmd) return cmd_verify(common, quick);
    if (*train_cmd) return cmd_train(common);
    if (*chunk_cmd) return cmd_sweep(common, true);
    if (*data_cmd) return cmd_sweep(common, false);
    if (*bench_cmd) return cmd_bench(common, variants, lengths, trials);
    if (*export_cmd) return cmd_export(common, checkpoint, input, tokens);
  } catch (const SchemaError& e) {
    std::cerr << "config error at " << e.key() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
