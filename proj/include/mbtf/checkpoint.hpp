// Copyright 2026 The mbtaylor Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mbtf/backbone.hpp"

namespace mbtf {

/// One manifest line: parameter name, role and shape.
struct ManifestEntry {
  std::string name;
  std::string role;  ///< weight, bias, norm, scalar
  Shape shape;
};

/// Checkpoint = `<prefix>.manifest` (text, one entry per line) plus
/// `<prefix>.bin` (the tensors as consecutive raw records in manifest
/// order). The manifest's first line names the config.
void save_checkpoint(const std::filesystem::path& prefix, const ModelWeights& w, const ModelConfig& cfg);

/// Loads into weights shaped by `cfg`. Every name and shape must match;
/// mismatches raise IoError naming the first offending parameter.
ModelWeights load_checkpoint(const std::filesystem::path& prefix, const ModelConfig& cfg);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& prefix);

/// Named tensors in the same container, for things that are not a full model
/// (micro-training weights).
void save_named_tensors(const std::filesystem::path& prefix, const std::string& tag,
                        const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> load_named_tensors(const std::filesystem::path& prefix);

}  // namespace mbtf
