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

#include <json.hpp>

namespace lasattn {

// On-disk layout shared by checkpoints and dataset caches:
//
//   8 bytes   magic "LASATTN\0"
//   u32       format version
//   u64       header length n
//   n bytes   UTF-8 JSON header
//   u64       payload count m
//   m * 4     float32 payload
//
// Every integer and float is little-endian.
struct Blob {
  nlohmann::json header;
  std::vector<float> payload;
};

inline constexpr std::uint32_t kBlobVersion = 1;

void write_blob(const std::filesystem::path& path, const Blob& blob);

/// Throws FormatError on a bad magic, unknown version, truncation or trailing bytes.
Blob read_blob(const std::filesystem::path& path);

}  // namespace lasattn
