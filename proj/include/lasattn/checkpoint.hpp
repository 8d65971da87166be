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

#include <filesystem>

#include <json.hpp>

#include "lasattn/model.hpp"

namespace lasattn {

/// Writes float32 parameters with a JSON header holding every tensor's name
/// and shape plus `meta` (configuration, seed).
void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const nlohmann::json& meta);

/// Header of a checkpoint without its payload interpreted.
nlohmann::json checkpoint_meta(const std::filesystem::path& path);

/// Fills `layout` (from init_params with the matching config) from the file.
/// Names and shapes must agree exactly.
void load_checkpoint(const std::filesystem::path& path, ModelParams<float>& layout);

}  // namespace lasattn
