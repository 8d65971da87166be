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


#include "lasattn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "lasattn/blob.hpp"
#include "lasattn/errors.hpp"
#include "lasattn/tensor.hpp"

namespace lasattn::data {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::uint32_t be32(const std::string& bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
  return v;
}

SequenceDataset empty_like(const SequenceDataset& d) {
  SequenceDataset out = d;
  out.examples.clear();
  return out;
}

}  // namespace

void SequenceDataset::validate() const {
  if (num_classes < 1) throw ParameterError("dataset: num_classes must be >= 1");
  for (std::size_t n = 0; n < examples.size(); ++n) {
    const auto& e = examples[n];
    if (e.label < 0 || e.label >= num_classes) {
      throw ParameterError("dataset: example " + std::to_string(n) + " label out of range");
    }
    if (e.tokens.empty() || static_cast<int>(e.tokens.size()) > max_length) {
      throw ParameterError("dataset: example " + std::to_string(n) + " length out of range");
    }
    for (int t : e.tokens) {
      if (t < 0 || t >= vocab_size) {
        throw ParameterError("dataset: example " + std::to_string(n) + " token out of range");
      }
    }
  }
}

std::string to_string(Task task) {
  switch (task) {
    case Task::kSmnist: return "smnist";
    case Task::kPmnist: return "pmnist";
    case Task::kAdding: return "adding";
    case Task::kSelectiveCopy: return "selective_copy";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::kSmnist, Task::kPmnist, Task::kAdding, Task::kSelectiveCopy})
    if (to_string(t) == name) return t;
  throw ParameterError("unknown task '" + name + "'");
}

void TaskSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ParameterError("task: train_fraction must lie in (0, 1)");
  }
  if (task == Task::kAdding || task == Task::kSelectiveCopy) {
    if (length < 4) throw ParameterError("task: length must be >= 4");
    if (num_examples < 2) throw ParameterError("task: num_examples must be >= 2");
  } else {
    if (downsample < 1) throw ParameterError("task: downsample must be >= 1");
    if (images_path.empty() || labels_path.empty()) {
      throw ParameterError("task: image tasks need images_path and labels_path");
    }
  }
}

SequenceDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const std::string img = read_file(images);
  const std::string lab = read_file(labels);
  if (img.size() < 16) throw FormatError(images.string() + ": truncated header");
  if (lab.size() < 8) throw FormatError(labels.string() + ": truncated header");
  if (be32(img, 0) != 0x00000803) throw FormatError(images.string() + ": bad magic");
  if (be32(lab, 0) != 0x00000801) throw FormatError(labels.string() + ": bad magic");

  const std::uint64_t count = be32(img, 4);
  const std::uint64_t rows = be32(img, 8);
  const std::uint64_t cols = be32(img, 12);
  const std::uint64_t pixels = rows * cols;
  if (be32(lab, 4) != count) {
    throw FormatError("idx: " + std::to_string(count) + " images but " +
                      std::to_string(be32(lab, 4)) + " labels");
  }
  if (img.size() != 16 + count * pixels) throw FormatError(images.string() + ": truncated file");
  if (lab.size() != 8 + count) throw FormatError(labels.string() + ": truncated file");

  SequenceDataset d;
  d.num_classes = 10;
  d.vocab_size = 256;
  d.max_length = static_cast<int>(pixels);
  d.image_side = rows == cols ? static_cast<int>(rows) : 0;
  d.provenance = "idx:" + images.filename().string();
  d.examples.resize(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    auto& e = d.examples[n];
    e.label = static_cast<unsigned char>(lab[8 + n]);
    if (e.label > 9) {
      throw FormatError(labels.string() + ": label " + std::to_string(e.label) + " at " +
                        std::to_string(n) + " outside 0..9");
    }
    const char* px = img.data() + 16 + n * pixels;
    e.tokens.resize(pixels);
    for (std::uint64_t p = 0; p < pixels; ++p) e.tokens[p] = static_cast<unsigned char>(px[p]);
  }
  return d;
}

SequenceDataset downsample(const SequenceDataset& dataset, int factor) {
  const int side = dataset.image_side;
  if (side < 1) throw ParameterError("downsample: dataset is not a square image set");
  if (factor < 1 || side % factor != 0) {
    throw ParameterError("downsample: factor " + std::to_string(factor) + " does not divide " +
                         std::to_string(side));
  }
  if (factor == 1) return dataset;
  const int out_side = side / factor;
  SequenceDataset out = empty_like(dataset);
  out.image_side = out_side;
  out.max_length = out_side * out_side;
  out.provenance += " downsample=" + std::to_string(factor);
  const double area = static_cast<double>(factor) * factor;
  for (const auto& e : dataset.examples) {
    Example o{std::vector<int>(out.max_length), e.label};
    for (int r = 0; r < out_side; ++r) {
      for (int c = 0; c < out_side; ++c) {
        int acc = 0;
        for (int dr = 0; dr < factor; ++dr)
          for (int dc = 0; dc < factor; ++dc)
            acc += e.tokens[(r * factor + dr) * side + c * factor + dc];
        o.tokens[r * out_side + c] = static_cast<int>(std::lround(acc / area));
      }
    }
    out.examples.push_back(std::move(o));
  }
  return out;
}

std::vector<int> fixed_permutation(int length, std::uint64_t seed) {
  std::vector<int> perm(length);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::vector<int> invert_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size(), -1);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const int p = perm[i];
    if (p < 0 || p >= static_cast<int>(perm.size()) || inv[p] != -1) {
      throw ParameterError("invert_permutation: not a permutation");
    }
    inv[p] = static_cast<int>(i);
  }
  return inv;
}

SequenceDataset apply_permutation(const SequenceDataset& dataset, const std::vector<int>& perm) {
  invert_permutation(perm);  // validates
  SequenceDataset out = empty_like(dataset);
  out.image_side = 0;
  for (const auto& e : dataset.examples) {
    if (e.tokens.size() != perm.size()) {
      throw DimensionError("apply_permutation: sequence length differs from permutation");
    }
    Example o{std::vector<int>(perm.size()), e.label};
    for (std::size_t i = 0; i < perm.size(); ++i) o.tokens[i] = e.tokens[perm[i]];
    out.examples.push_back(std::move(o));
  }
  return out;
}

SequenceDataset permute_fixed(const SequenceDataset& dataset, std::uint64_t seed) {
  SequenceDataset out =
      apply_permutation(dataset, fixed_permutation(dataset.max_length, seed));
  out.provenance += " permuted=" + std::to_string(seed);
  return out;
}

int adding_bucket(double sum) {
  return std::clamp(static_cast<int>(std::floor(10.0 * sum + 1e-9)), 0, 9);
}

SequenceDataset gen_adding(const TaskSpec& spec, std::uint64_t seed) {
  if (spec.length < 4) throw ParameterError("gen_adding: length must be >= 4");
  Rng rng(seed);
  std::uniform_int_distribution<int> level(0, kAddingLevels - 1);
  std::uniform_int_distribution<int> pos(0, spec.length - 1);
  SequenceDataset d;
  d.num_classes = 10;
  d.vocab_size = kAddingVocab;
  d.max_length = spec.length;
  d.provenance = "adding L=" + std::to_string(spec.length) + " seed=" + std::to_string(seed);
  for (int n = 0; n < spec.num_examples; ++n) {
    Example e{std::vector<int>(spec.length), 0};
    for (int& t : e.tokens) t = level(rng);
    const int a = pos(rng);
    int b = pos(rng);
    while (b == a) b = pos(rng);
    const double sum = (e.tokens[a] + e.tokens[b]) / 20.0;
    e.tokens[a] += kAddingLevels;
    e.tokens[b] += kAddingLevels;
    e.label = adding_bucket(sum);
    d.examples.push_back(std::move(e));
  }
  return d;
}

SequenceDataset gen_selective_copy(const TaskSpec& spec, std::uint64_t seed) {
  if (spec.length < 4) throw ParameterError("gen_selective_copy: length must be >= 4");
  Rng rng(seed);
  std::uniform_int_distribution<int> content(0, kCopyContent - 1);
  std::uniform_int_distribution<int> distractor(kCopyDistractor, kCopyVocab - 1);
  std::uniform_int_distribution<int> pos(0, spec.length / 4 - 1);
  SequenceDataset d;
  d.num_classes = kCopyContent;
  d.vocab_size = kCopyVocab;
  d.max_length = spec.length;
  d.provenance =
      "selective_copy L=" + std::to_string(spec.length) + " seed=" + std::to_string(seed);
  for (int n = 0; n < spec.num_examples; ++n) {
    Example e{std::vector<int>(spec.length), 0};
    for (int& t : e.tokens) t = distractor(rng);
    e.label = content(rng);
    e.tokens[pos(rng)] = e.label;
    e.tokens.back() = kCopyQuery;
    d.examples.push_back(std::move(e));
  }
  return d;
}

SequenceDataset shuffle_labels(const SequenceDataset& dataset, std::uint64_t seed) {
  std::vector<int> labels;
  for (const auto& e : dataset.examples) labels.push_back(e.label);
  Rng rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  SequenceDataset out = dataset;
  for (std::size_t n = 0; n < labels.size(); ++n) out.examples[n].label = labels[n];
  out.provenance += " labels-shuffled=" + std::to_string(seed);
  return out;
}

SequenceDataset subsample(const SequenceDataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ParameterError("subsample: fraction must lie in (0, 1]");
  }
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    by_class.at(dataset.examples[n].label).push_back(n);
  }
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (int c = 0; c < dataset.num_classes; ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(fraction * members.size()));
    if (take < 1) {
      throw ParameterError("subsample: fraction " + std::to_string(fraction) +
                           " leaves class " + std::to_string(c) + " empty");
    }
    keep.insert(keep.end(), members.begin(), members.begin() + take);
  }
  std::sort(keep.begin(), keep.end());
  SequenceDataset out = empty_like(dataset);
  for (std::size_t n : keep) out.examples.push_back(dataset.examples[n]);
  out.provenance += " fraction=" + std::to_string(fraction);
  return out;
}

Split split(const SequenceDataset& dataset, double train_fraction) {
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * dataset.size()));
  if (n_train < 1 || n_train >= dataset.size()) {
    throw ParameterError("split: both halves must be non-empty");
  }
  Split s{empty_like(dataset), empty_like(dataset)};
  s.train.examples.assign(dataset.examples.begin(), dataset.examples.begin() + n_train);
  s.validation.examples.assign(dataset.examples.begin() + n_train, dataset.examples.end());
  return s;
}

SequenceDataset make_dataset(const TaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  switch (spec.task) {
    case Task::kAdding: return gen_adding(spec, seed);
    case Task::kSelectiveCopy: return gen_selective_copy(spec, seed);
    case Task::kSmnist: return downsample(load_idx(spec.images_path, spec.labels_path), spec.downsample);
    case Task::kPmnist:
      return permute_fixed(
          downsample(load_idx(spec.images_path, spec.labels_path), spec.downsample),
          spec.permutation_seed);
  }
  throw ParameterError("make_dataset: unknown task");
}

void save_dataset(const std::filesystem::path& path, const SequenceDataset& dataset) {
  Blob blob;
  blob.header = {{"kind", "dataset"},
                 {"num_classes", dataset.num_classes},
                 {"vocab_size", dataset.vocab_size},
                 {"max_length", dataset.max_length},
                 {"image_side", dataset.image_side},
                 {"provenance", dataset.provenance},
                 {"count", dataset.size()}};
  for (const auto& e : dataset.examples) {
    blob.payload.push_back(static_cast<float>(e.label));
    blob.payload.push_back(static_cast<float>(e.tokens.size()));
    for (int t : e.tokens) blob.payload.push_back(static_cast<float>(t));
  }
  write_blob(path, blob);
}

SequenceDataset load_dataset(const std::filesystem::path& path) {
  const Blob blob = read_blob(path);
  SequenceDataset d;
  try {
    if (blob.header.at("kind") != "dataset") throw FormatError(path.string() + ": not a dataset");
    d.num_classes = blob.header.at("num_classes");
    d.vocab_size = blob.header.at("vocab_size");
    d.max_length = blob.header.at("max_length");
    d.image_side = blob.header.at("image_side");
    d.provenance = blob.header.at("provenance");
    const std::size_t count = blob.header.at("count");
    std::size_t at = 0;
    auto next = [&]() {
      if (at >= blob.payload.size()) throw FormatError(path.string() + ": payload too short");
      return static_cast<int>(blob.payload[at++]);
    };
    for (std::size_t n = 0; n < count; ++n) {
      Example e;
      e.label = next();
      const int len = next();
      if (len < 0) throw FormatError(path.string() + ": negative length");
      for (int i = 0; i < len; ++i) e.tokens.push_back(next());
      d.examples.push_back(std::move(e));
    }
    if (at != blob.payload.size()) throw FormatError(path.string() + ": payload too long");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad dataset header: " + e.what());
  }
  d.validate();
  return d;
}

}  // namespace lasattn::data
