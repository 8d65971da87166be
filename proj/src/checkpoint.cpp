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


#include "lasattn/checkpoint.hpp"

#include "lasattn/blob.hpp"

namespace lasattn {

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const nlohmann::json& meta) {
  Blob blob;
  blob.header["kind"] = "checkpoint";
  blob.header["meta"] = meta;
  auto& tensors = blob.header["tensors"] = nlohmann::json::array();
  params.visit([&](const std::string& name, const MatrixF& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    blob.payload.insert(blob.payload.end(), m.data(), m.data() + m.size());
  });
  write_blob(path, blob);
}

nlohmann::json checkpoint_meta(const std::filesystem::path& path) {
  const Blob blob = read_blob(path);
  if (blob.header.value("kind", "") != "checkpoint") {
    throw FormatError(path.string() + ": not a checkpoint");
  }
  return blob.header.value("meta", nlohmann::json::object());
}

void load_checkpoint(const std::filesystem::path& path, ModelParams<float>& layout) {
  const Blob blob = read_blob(path);
  if (blob.header.value("kind", "") != "checkpoint") {
    throw FormatError(path.string() + ": not a checkpoint");
  }
  const auto& tensors = blob.header.at("tensors");
  std::size_t index = 0, offset = 0;
  layout.visit([&](const std::string& name, MatrixF& m) {
    if (index >= tensors.size()) throw FormatError(path.string() + ": missing tensor " + name);
    const auto& t = tensors[index++];
    if (t.at("name") != name || t.at("rows") != m.rows() || t.at("cols") != m.cols()) {
      throw FormatError(path.string() + ": tensor " + name + " does not match the model layout");
    }
    if (offset + m.size() > blob.payload.size()) throw FormatError(path.string() + ": short payload");
    std::copy_n(blob.payload.begin() + offset, m.size(), m.data());
    offset += m.size();
  });
  if (index != tensors.size() || offset != blob.payload.size()) {
    throw FormatError(path.string() + ": extra tensors beyond the model layout");
  }
}

}  // namespace lasattn
