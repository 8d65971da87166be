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


#include "lasattn/blob.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "lasattn/errors.hpp"

namespace lasattn {

namespace {

constexpr char kMagic[8] = {'L', 'A', 'S', 'A', 'T', 'T', 'N', '\0'};

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& data, std::string path) : data_(data), path_(std::move(path)) {}

  template <typename T>
  T get_le() {
    unsigned char bytes[sizeof(T)];
    take(bytes, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }

  void take(void* dst, std::size_t n) {
    if (data_.size() - pos_ < n) throw FormatError(path_ + ": truncated file");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_blob(const std::filesystem::path& path, const Blob& blob) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kBlobVersion);
  const std::string header = blob.header.dump();
  put_le<std::uint64_t>(out, header.size());
  out += header;
  put_le<std::uint64_t>(out, blob.payload.size());
  out.reserve(out.size() + 4 * blob.payload.size());
  for (float v : blob.payload) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

Blob read_blob(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(data, path.string());

  char magic[sizeof(kMagic)];
  r.take(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": bad magic");
  }
  const auto version = r.get_le<std::uint32_t>();
  if (version != kBlobVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto header_len = r.get_le<std::uint64_t>();
  if (header_len > r.remaining()) throw FormatError(path.string() + ": truncated file");
  std::string header(header_len, '\0');
  r.take(header.data(), header_len);

  Blob blob;
  try {
    blob.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": header is not JSON: " + e.what());
  }
  const auto count = r.get_le<std::uint64_t>();
  if (count > r.remaining() / 4) throw FormatError(path.string() + ": truncated file");
  blob.payload.resize(count);
  for (auto& v : blob.payload) v = std::bit_cast<float>(r.get_le<std::uint32_t>());
  if (r.remaining() != 0) throw FormatError(path.string() + ": trailing bytes");
  return blob;
}

}  // namespace lasattn
