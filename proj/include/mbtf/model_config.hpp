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

#include <optional>
#include <string>
#include <vector>

#include "mbtf/attention.hpp"

namespace mbtf {

inline constexpr std::size_t kStageCount = 8;  // 4 encoder, 3 decoder, 1 refinement

/// Network shape in the three-list form (branches, blocks, channels per
/// stage) plus the attention and embedding knobs shared by every stage.
struct ModelConfig {
  std::string name = "custom";
  std::vector<std::size_t> branches;
  std::vector<std::size_t> blocks;
  std::vector<std::size_t> channels;
  std::size_t in_channels = 3;
  std::size_t stem_kernel = 3;
  std::size_t final_kernel = 3;
  std::size_t head_divisor = 8;  ///< heads per stage ~ channels / head_divisor
  std::size_t embed_kernel = 3;
  std::optional<double> offset_bound = 3.0;
  std::size_t skff_reduction = 8;
  std::size_t ffn_expansion = 2;  ///< hidden width of the block's feed-forward part, x channels
  bool bias_free = false;
  AttentionConfig attention;  ///< p, s, epsilon, CPE kernels; heads set per stage

  /// Throws ConfigError on wrong list lengths, zero entries, or decoder
  /// channels that do not mirror the encoder.
  void validate() const;

  /// Channel width a stage actually runs at. The last decoder stage and the
  /// refinement stage carry the un-reduced first-level skip concatenation.
  std::size_t stage_width(std::size_t stage) const;
  std::size_t stage_heads(std::size_t stage) const;
  /// Per-stage attention configuration (heads, head_dim filled in).
  AttentionConfig stage_attention(std::size_t stage) const;

  static ModelConfig nano();
  static ModelConfig variant_b();
  static ModelConfig variant_l();
  static ModelConfig variant_xl();
};

/// Parses `key = value` lines ('#' starts a comment). List values are
/// whitespace separated. Unknown keys are errors; missing keys keep the
/// nano values.
ModelConfig parse_model_config(const std::string& text);
std::string format_model_config(const ModelConfig& cfg);
ModelConfig load_model_config(const std::string& path);

/// Resolves a name (nano, b, l, xl) or a file path.
ModelConfig resolve_model_config(const std::string& name_or_path);

}  // namespace mbtf
