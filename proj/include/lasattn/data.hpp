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
#include <string>
#include <vector>

namespace lasattn::data {

struct Example {
  std::vector<int> tokens;
  int label = 0;

  bool operator==(const Example&) const = default;
};

struct SequenceDataset {
  std::vector<Example> examples;
  int num_classes = 0;
  int vocab_size = 0;
  int max_length = 0;
  int image_side = 0;  // square images only; 0 for synthetic sequences
  std::string provenance;

  std::size_t size() const { return examples.size(); }
  /// Labels in [0, num_classes), tokens in [0, vocab_size), lengths <= max_length.
  void validate() const;
};

enum class Task { kSmnist, kPmnist, kAdding, kSelectiveCopy };

std::string to_string(Task task);
Task parse_task(const std::string& name);

struct TaskSpec {
  Task task = Task::kSelectiveCopy;
  int length = 128;               // synthetic tasks only
  int num_examples = 5000;        // synthetic tasks only, train + validation
  int downsample = 2;             // image tasks only
  std::uint64_t permutation_seed = 0;
  double train_fraction = 0.9;
  std::string images_path;        // image tasks only, IDX
  std::string labels_path;

  void validate() const;
};

// Token layout of the selective-copy task.
inline constexpr int kCopyContent = 8;     // tokens 0..7 are content and labels
inline constexpr int kCopyQuery = 9;
inline constexpr int kCopyDistractor = 10;  // 10..13
inline constexpr int kCopyVocab = 14;

// Token layout of the adding task: value k/20 for k in 0..9, unmarked as k,
// marked as 10 + k.
inline constexpr int kAddingLevels = 10;
inline constexpr int kAddingVocab = 20;

/// MNIST-style IDX pair: images magic 0x00000803, labels 0x00000801.
SequenceDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Averages factor x factor pixel blocks, rounds to the nearest bin, flattens.
SequenceDataset downsample(const SequenceDataset& dataset, int factor);

std::vector<int> fixed_permutation(int length, std::uint64_t seed);
std::vector<int> invert_permutation(const std::vector<int>& perm);

/// out.tokens[i] = in.tokens[perm[i]] for every example.
SequenceDataset apply_permutation(const SequenceDataset& dataset, const std::vector<int>& perm);
SequenceDataset permute_fixed(const SequenceDataset& dataset, std::uint64_t seed);

/// Two marked values among `length` positions; label = floor(10 * sum).
SequenceDataset gen_adding(const TaskSpec& spec, std::uint64_t seed);
int adding_bucket(double sum);

/// A content token planted in the first quarter, distractors elsewhere and
/// the query token last; label = the planted token.
SequenceDataset gen_selective_copy(const TaskSpec& spec, std::uint64_t seed);

/// Same inputs with labels permuted across examples.
SequenceDataset shuffle_labels(const SequenceDataset& dataset, std::uint64_t seed);

/// Class-stratified subset. Each class is shuffled once per seed and the
/// leading round(fraction * count) members kept, so smaller fractions are
/// subsets of larger ones. Original order is preserved.
SequenceDataset subsample(const SequenceDataset& dataset, double fraction, std::uint64_t seed);

struct Split {
  SequenceDataset train;
  SequenceDataset validation;
};

/// Leading floor(train_fraction * n) examples train, the rest validate.
Split split(const SequenceDataset& dataset, double train_fraction);

/// Builds the dataset a TaskSpec describes (loading or generating).
SequenceDataset make_dataset(const TaskSpec& spec, std::uint64_t seed);

void save_dataset(const std::filesystem::path& path, const SequenceDataset& dataset);
SequenceDataset load_dataset(const std::filesystem::path& path);

}  // namespace lasattn::data
