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


#include "lasattn/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>

namespace lasattn {

using nlohmann::json;

namespace {

// One JSON object under a dotted path. Every key read is recorded; finish()
// rejects whatever was not read.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* find(const std::string& k) {
    seen_.insert(k);
    const auto it = doc_.find(k);
    return it == doc_.end() ? nullptr : &*it;
  }

  void get(const std::string& k, int& out) {
    if (const json* v = find(k)) {
      if (!v->is_number_integer()) throw SchemaError(key(k), "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const std::string& k, std::uint64_t& out) {
    if (const json* v = find(k)) {
      if (!v->is_number_unsigned()) throw SchemaError(key(k), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& k, double& out) {
    if (const json* v = find(k)) {
      if (!v->is_number()) throw SchemaError(key(k), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& k, bool& out) {
    if (const json* v = find(k)) {
      if (!v->is_boolean()) throw SchemaError(key(k), "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const std::string& k, std::string& out) {
    if (const json* v = find(k)) {
      if (!v->is_string()) throw SchemaError(key(k), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& k, std::optional<int>& out) {
    if (const json* v = find(k)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      int x = 0;
      get(k, x);
      out = x;
    }
  }
  void get(const std::string& k, std::optional<double>& out) {
    if (const json* v = find(k)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      double x = 0;
      get(k, x);
      out = x;
    }
  }
  template <typename T>
  void get_list(const std::string& k, std::vector<T>& out, const std::function<T(const json&)>& item) {
    if (const json* v = find(k)) {
      if (!v->is_array()) throw SchemaError(key(k), "expected an array");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        try {
          out.push_back(item((*v)[i]));
        } catch (const std::invalid_argument& e) {
          throw SchemaError(key(k) + "[" + std::to_string(i) + "]", e.what());
        }
      }
    }
  }

  void finish() const {
    for (const auto& [k, v] : doc_.items())
      if (!seen_.count(k)) throw SchemaError(key(k), "unknown key");
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw SchemaError(key, what);
}

template <typename T, typename Parse>
T parse_enum(Section& s, const std::string& k, T current, Parse parse) {
  if (!s.has(k)) {
    s.find(k);
    return current;
  }
  std::string name;
  s.get(k, name);
  try {
    return parse(name);
  } catch (const ParameterError& e) {
    throw SchemaError(s.key(k), e.what());
  }
}

void read_attention(Section s, AttentionConfig& a) {
  s.get("heads", a.heads);
  s.get("d_model", a.d_model);
  a.variant = parse_enum(s, "variant", a.variant, [](const std::string& n) { return parse_variant(n); });
  s.get("decay_bound", a.decay_bound);
  s.get("pool_window", a.pool_window);
  s.get("chunk_size", a.chunk_size);
  a.eld_mode = parse_enum(s, "eld_mode", a.eld_mode, [](const std::string& n) { return parse_eld_mode(n); });
  s.get("strict_causal", a.strict_causal);
  s.get("renormalize_rows", a.renormalize_rows);
  s.get("head0_vanilla", a.head0_vanilla);
  s.get("alibi_slope", a.alibi_slope);
  s.finish();

  require(a.heads >= 1, s.key("heads"), "must be >= 1");
  require(a.d_model >= 1 && a.d_model % a.heads == 0, s.key("d_model"),
          "must be a positive multiple of heads");
  require(a.decay_bound > 0.0 && a.decay_bound < 1.0, s.key("decay_bound"), "must lie in (0, 1)");
  require(a.pool_window >= 1 && a.pool_window % 2 == 1, s.key("pool_window"),
          "must be odd and >= 1");
  require(a.chunk_size >= 0, s.key("chunk_size"), "must be >= 0 (0 = full attention)");
  require(!a.alibi_slope || *a.alibi_slope >= 0.0, s.key("alibi_slope"), "must be >= 0");
}

void read_model(Section s, RunConfig& rc) {
  ModelConfig& m = rc.model;
  s.get("depth", m.depth);
  s.get("ffn_multiplier", m.ffn_multiplier);
  s.get("prenorm", m.prenorm);
  s.get("readout", m.readout);
  s.get("vocab_size", rc.vocab_size);
  s.get("num_classes", rc.num_classes);
  s.get("max_length", rc.max_length);
  s.finish();
  require(m.depth >= 0, s.key("depth"), "must be >= 0");
  require(m.ffn_multiplier >= 1, s.key("ffn_multiplier"), "must be >= 1");
  require(m.readout >= -1, s.key("readout"), "must be >= -1 (-1 = last token)");
  require(!rc.vocab_size || *rc.vocab_size >= 1, s.key("vocab_size"), "must be >= 1");
  require(!rc.num_classes || *rc.num_classes >= 2, s.key("num_classes"), "must be >= 2");
  require(!rc.max_length || *rc.max_length >= 1, s.key("max_length"), "must be >= 1");
}

void read_train(Section s, TrainConfig& t) {
  s.get("epochs", t.epochs);
  s.get("batch_size", t.batch_size);
  s.get("learning_rate", t.learning_rate);
  s.get("weight_decay", t.weight_decay);
  s.get("clip_norm", t.clip_norm);
  s.get("threads", t.threads);
  s.get("record_timing", t.record_timing);
  s.finish();
  require(t.epochs >= 1, s.key("epochs"), "must be >= 1");
  require(t.batch_size >= 1, s.key("batch_size"), "must be >= 1");
  require(t.learning_rate > 0.0, s.key("learning_rate"), "must be > 0");
  require(t.weight_decay >= 0.0, s.key("weight_decay"), "must be >= 0");
  require(t.clip_norm > 0.0, s.key("clip_norm"), "must be > 0");
  require(t.threads >= 1, s.key("threads"), "must be >= 1");
}

void read_task(Section s, data::TaskSpec& t) {
  t.task = parse_enum(s, "name", t.task, [](const std::string& n) { return data::parse_task(n); });
  s.get("length", t.length);
  s.get("num_examples", t.num_examples);
  s.get("downsample", t.downsample);
  s.get("permutation_seed", t.permutation_seed);
  s.get("train_fraction", t.train_fraction);
  s.get("images", t.images_path);
  s.get("labels", t.labels_path);
  s.finish();
  require(t.train_fraction > 0.0 && t.train_fraction < 1.0, s.key("train_fraction"),
          "must lie in (0, 1)");
  require(t.length >= 4, s.key("length"), "must be >= 4");
  require(t.num_examples >= 2, s.key("num_examples"), "must be >= 2");
  require(t.downsample >= 1, s.key("downsample"), "must be >= 1");
}

void read_sweep(Section s, SweepConfig& w) {
  s.get_list<int>("chunk_sizes", w.chunk_sizes, [](const json& v) {
    if (!v.is_number_integer() || v.get<int>() < 1) throw ParameterError("expected an integer >= 1");
    return v.get<int>();
  });
  s.get_list<double>("fractions", w.fractions, [](const json& v) {
    if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() <= 1.0)) {
      throw ParameterError("expected a number in (0, 1]");
    }
    return v.get<double>();
  });
  s.get_list<std::uint64_t>("seeds", w.seeds, [](const json& v) {
    if (!v.is_number_unsigned()) throw ParameterError("expected a non-negative integer");
    return v.get<std::uint64_t>();
  });
  s.finish();
}

void read_bench(Section s, BenchConfig& b) {
  s.get_list<Variant>("variants", b.variants, [](const json& v) {
    if (!v.is_string()) throw ParameterError("expected a variant name");
    return parse_variant(v.get<std::string>());
  });
  s.get_list<int>("lengths", b.lengths, [](const json& v) {
    if (!v.is_number_integer() || v.get<int>() < 1) throw ParameterError("expected an integer >= 1");
    return v.get<int>();
  });
  s.get("trials", b.trials);
  s.finish();
  require(b.trials >= 5, s.key("trials"), "must be >= 5");
}

struct PresetValues {
  int depth, features;
  bool prenorm;
  double lr;
  int batch, epochs;
  double wd;
  int window;
  double bound;
};

// Architecture and optimisation rows of the published LRA hyperparameter
// table; every model uses 8 heads.
const std::map<std::string, PresetValues>& table_presets() {
  static const std::map<std::string, PresetValues> rows{
      {"listops", {6, 256, false, 1e-3, 50, 50, 0.01, 5, 0.001}},
      {"text", {4, 64, true, 1e-4, 50, 20, 0.0, 5, 0.0001}},
      {"retrieval", {6, 256, true, 0.002, 64, 20, 0.0, 5, 0.001}},
      {"image", {6, 256, false, 1e-3, 50, 100, 0.01, 3, 0.001}},
      {"pathfinder", {6, 256, true, 0.004, 64, 100, 0.0, 3, 0.001}},
  };
  return rows;
}

void apply_preset(RunConfig& rc, const std::string& name) {
  rc.preset = name;
  if (name == "desk") return;  // the defaults
  if (const auto it = table_presets().find(name); it != table_presets().end()) {
    const PresetValues& p = it->second;
    rc.model.depth = p.depth;
    rc.model.attention.d_model = p.features;
    rc.model.attention.heads = 8;
    rc.model.prenorm = p.prenorm;
    rc.train.learning_rate = p.lr;
    rc.train.batch_size = p.batch;
    rc.train.epochs = p.epochs;
    rc.train.weight_decay = p.wd;
    rc.model.attention.pool_window = p.window;
    rc.model.attention.decay_bound = p.bound;
    return;
  }
  for (double b : {0.0001, 0.001}) {
    for (int w : {3, 5}) {
      char grid[32];
      std::snprintf(grid, sizeof(grid), "grid-b%g-p%d", b, w);
      if (name == grid) {
        rc.model.attention.decay_bound = b;
        rc.model.attention.pool_window = w;
        return;
      }
    }
  }
  throw SchemaError("preset", "unknown preset '" + name + "'");
}

json attention_json(const AttentionConfig& a) {
  return {{"heads", a.heads},
          {"d_model", a.d_model},
          {"variant", std::string(to_string(a.variant))},
          {"decay_bound", a.decay_bound},
          {"pool_window", a.pool_window},
          {"chunk_size", a.chunk_size},
          {"eld_mode", std::string(to_string(a.eld_mode))},
          {"strict_causal", a.strict_causal},
          {"renormalize_rows", a.renormalize_rows},
          {"head0_vanilla", a.head0_vanilla},
          {"alibi_slope", a.alibi_slope ? json(*a.alibi_slope) : json(nullptr)}};
}

}  // namespace

ModelConfig RunConfig::resolve_model(const data::SequenceDataset& dataset) const {
  ModelConfig m = model;
  m.vocab_size = vocab_size.value_or(dataset.vocab_size);
  m.num_classes = num_classes.value_or(dataset.num_classes);
  m.max_length = max_length.value_or(dataset.max_length);
  m.validate();
  return m;
}

RunConfig parse_run_config(const json& doc) {
  RunConfig rc;
  Section root(doc, "");
  if (root.has("preset")) {
    std::string name;
    root.get("preset", name);
    apply_preset(rc, name);
  } else {
    root.find("preset");
  }
  root.get("seed", rc.seed);
  root.get("out", rc.out);
  if (const json* v = root.find("model")) read_model(Section(*v, "model"), rc);
  if (const json* v = root.find("attention")) read_attention(Section(*v, "attention"), rc.model.attention);
  if (const json* v = root.find("train")) read_train(Section(*v, "train"), rc.train);
  if (const json* v = root.find("task")) read_task(Section(*v, "task"), rc.task);
  if (const json* v = root.find("sweep")) read_sweep(Section(*v, "sweep"), rc.sweep);
  if (const json* v = root.find("bench")) read_bench(Section(*v, "bench"), rc.bench);
  root.finish();
  require(!rc.out.empty(), "out", "must not be empty");
  if ((rc.task.task == data::Task::kSmnist || rc.task.task == data::Task::kPmnist) &&
      (rc.task.images_path.empty() || rc.task.labels_path.empty())) {
    throw SchemaError("task.images", "image tasks need task.images and task.labels");
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("--config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw SchemaError("--config", std::string("not valid JSON: ") + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& rc) {
  auto opt = [](const std::optional<int>& v) { return v ? json(*v) : json(nullptr); };
  json doc;
  if (!rc.preset.empty()) doc["preset"] = rc.preset;
  doc["seed"] = rc.seed;
  doc["out"] = rc.out;
  doc["model"] = {{"depth", rc.model.depth},
                  {"ffn_multiplier", rc.model.ffn_multiplier},
                  {"prenorm", rc.model.prenorm},
                  {"readout", rc.model.readout},
                  {"vocab_size", opt(rc.vocab_size)},
                  {"num_classes", opt(rc.num_classes)},
                  {"max_length", opt(rc.max_length)}};
  doc["attention"] = attention_json(rc.model.attention);
  doc["train"] = {{"epochs", rc.train.epochs},
                  {"batch_size", rc.train.batch_size},
                  {"learning_rate", rc.train.learning_rate},
                  {"weight_decay", rc.train.weight_decay},
                  {"clip_norm", rc.train.clip_norm},
                  {"threads", rc.train.threads},
                  {"record_timing", rc.train.record_timing}};
  doc["task"] = {{"name", data::to_string(rc.task.task)},
                 {"length", rc.task.length},
                 {"num_examples", rc.task.num_examples},
                 {"downsample", rc.task.downsample},
                 {"permutation_seed", rc.task.permutation_seed},
                 {"train_fraction", rc.task.train_fraction},
                 {"images", rc.task.images_path},
                 {"labels", rc.task.labels_path}};
  json variants = json::array();
  for (Variant v : rc.bench.variants) variants.push_back(std::string(to_string(v)));
  doc["sweep"] = {{"chunk_sizes", rc.sweep.chunk_sizes},
                  {"fractions", rc.sweep.fractions},
                  {"seeds", rc.sweep.seeds}};
  doc["bench"] = {{"variants", variants}, {"lengths", rc.bench.lengths}, {"trials", rc.bench.trials}};
  return doc;
}

void write_run_config(const std::filesystem::path& dir, const RunConfig& config) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "run_config.json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + (dir / "run_config.json").string());
  f << to_json(config).dump(2) << '\n';
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names{"desk"};
  for (const auto& [name, row] : table_presets()) names.push_back(name);
  for (const char* g : {"grid-b0.0001-p3", "grid-b0.0001-p5", "grid-b0.001-p3", "grid-b0.001-p5"})
    names.emplace_back(g);
  return names;
}

RunConfig preset(const std::string& name) {
  RunConfig rc;
  apply_preset(rc, name);
  return rc;
}

json to_json(const ModelConfig& m) {
  return {{"model",
           {{"depth", m.depth},
            {"ffn_multiplier", m.ffn_multiplier},
            {"prenorm", m.prenorm},
            {"readout", m.readout},
            {"vocab_size", m.vocab_size},
            {"num_classes", m.num_classes},
            {"max_length", m.max_length}}},
          {"attention", attention_json(m.attention)}};
}

ModelConfig model_from_json(const json& doc) {
  Section root(doc, "");
  RunConfig rc;
  if (const json* v = root.find("model")) read_model(Section(*v, "model"), rc);
  if (const json* v = root.find("attention")) read_attention(Section(*v, "attention"), rc.model.attention);
  root.finish();
  require(rc.vocab_size && rc.num_classes && rc.max_length, "model",
          "vocab_size, num_classes and max_length are required");
  ModelConfig m = rc.model;
  m.vocab_size = *rc.vocab_size;
  m.num_classes = *rc.num_classes;
  m.max_length = *rc.max_length;
  m.validate();
  return m;
}

}  // namespace lasattn
