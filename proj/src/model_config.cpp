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

#include "mbtf/model_config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <sstream>

#include "mbtf/tensor_io.hpp"

namespace mbtf {

void ModelConfig::validate() const {
  const auto check_list = [](const std::vector<std::size_t>& v, const char* what) {
    if (v.size() != kStageCount) {
      throw ConfigError(std::string("model config: ") + what + " must list " + std::to_string(kStageCount) +
                        " stages, got " + std::to_string(v.size()));
    }
    if (std::any_of(v.begin(), v.end(), [](std::size_t x) { return x == 0; })) {
      throw ConfigError(std::string("model config: ") + what + " entries must be positive");
    }
  };
  check_list(branches, "branches");
  check_list(blocks, "blocks");
  check_list(channels, "channels");
  if (channels[4] != channels[2] || channels[5] != channels[1] || channels[6] != channels[0] ||
      channels[7] != channels[6]) {
    throw ConfigError("model config: decoder channels must mirror the encoder");
  }
  if (in_channels == 0 || stem_kernel % 2 == 0 || final_kernel % 2 == 0 || embed_kernel % 2 == 0) {
    throw ConfigError("model config: kernels must be odd and in_channels positive");
  }
  if (head_divisor == 0 || skff_reduction == 0 || ffn_expansion == 0) throw ConfigError("model config: divisors must be positive");
  AttentionConfig probe = attention;
  probe.heads = 1;
  probe.head_dim = 1;
  probe.validate();
  for (std::size_t s = 0; s < kStageCount; ++s) {
    if (stage_width(s) < attention.cpe_kernels.size()) {
      throw ConfigError("model config: stage " + std::to_string(s) + " too narrow for the CPE groups");
    }
  }
}

std::size_t ModelConfig::stage_width(std::size_t stage) const {
  if (stage >= kStageCount) throw ConfigError("stage index out of range");
  if (stage >= 6) return channels[6] + channels[0];
  return channels[stage];
}

std::size_t ModelConfig::stage_heads(std::size_t stage) const {
  const std::size_t width = stage_width(stage);
  std::size_t heads = std::max<std::size_t>(1, channels[stage] / head_divisor);
  while (width % heads != 0) --heads;
  return heads;
}

AttentionConfig ModelConfig::stage_attention(std::size_t stage) const {
  AttentionConfig a = attention;
  a.heads = stage_heads(stage);
  a.head_dim = stage_width(stage) / a.heads;
  return a;
}

ModelConfig ModelConfig::nano() {
  ModelConfig c;
  c.name = "nano";
  c.branches = {2, 2, 2, 2, 2, 2, 2, 2};
  c.blocks = {1, 1, 1, 1, 1, 1, 1, 1};
  c.channels = {8, 16, 24, 32, 24, 16, 8, 8};
  c.head_divisor = 8;
  return c;
}

ModelConfig ModelConfig::variant_b() {
  ModelConfig c;
  c.name = "b";
  c.branches = {2, 2, 2, 2, 2, 2, 2, 2};
  c.blocks = {2, 3, 3, 4, 3, 3, 2, 2};
  c.channels = {24, 48, 72, 96, 72, 48, 24, 24};
  c.head_divisor = 24;
  return c;
}

ModelConfig ModelConfig::variant_l() {
  ModelConfig c = variant_b();
  c.name = "l";
  c.branches = {2, 3, 3, 3, 3, 3, 2, 2};
  c.blocks = {4, 6, 6, 8, 6, 6, 4, 4};
  return c;
}

ModelConfig ModelConfig::variant_xl() {
  ModelConfig c = variant_l();
  c.name = "xl";
  c.channels = {28, 56, 112, 160, 112, 56, 28, 28};
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::vector<std::size_t> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || tok.front() == '-') throw ConfigError("config key '" + key + "': bad integer '" + tok + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  const auto v = parse_list(key, value);
  if (v.size() != 1) throw ConfigError("config key '" + key + "' expects one integer");
  return v[0];
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ConfigError("config key '" + key + "': bad number '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false");
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

// Shortest text that parses back to the same double.
std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ModelConfig parse_model_config(const std::string& text) {
  ModelConfig c = ModelConfig::nano();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "name") c.name = value;
    else if (key == "branches") c.branches = parse_list(key, value);
    else if (key == "blocks") c.blocks = parse_list(key, value);
    else if (key == "channels") c.channels = parse_list(key, value);
    else if (key == "in_channels") c.in_channels = parse_size(key, value);
    else if (key == "stem_kernel") c.stem_kernel = parse_size(key, value);
    else if (key == "final_kernel") c.final_kernel = parse_size(key, value);
    else if (key == "head_divisor") c.head_divisor = parse_size(key, value);
    else if (key == "embed_kernel") c.embed_kernel = parse_size(key, value);
    else if (key == "offset_bound") {
      if (value == "none") c.offset_bound.reset();
      else c.offset_bound = parse_real(key, value);
    }
    else if (key == "skff_reduction") c.skff_reduction = parse_size(key, value);
    else if (key == "ffn_expansion") c.ffn_expansion = parse_size(key, value);
    else if (key == "bias_free") c.bias_free = parse_bool(key, value);
    else if (key == "focused_factor") c.attention.focused_factor = parse_real(key, value);
    else if (key == "modulation") c.attention.modulation = parse_real(key, value);
    else if (key == "epsilon") c.attention.epsilon = parse_real(key, value);
    else if (key == "cpe_kernels") c.attention.cpe_kernels = parse_list(key, value);
    else if (key == "phi_norm") {
      if (value == "input") c.attention.phi_norm = PhiNorm::kInput;
      else if (value == "relu") c.attention.phi_norm = PhiNorm::kRelu;
      else throw ConfigError("config key 'phi_norm': expected input or relu");
    }
    else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::string format_model_config(const ModelConfig& c) {
  std::string out;
  out += "name = " + c.name + "\n";
  out += "branches = " + join(c.branches) + "\n";
  out += "blocks = " + join(c.blocks) + "\n";
  out += "channels = " + join(c.channels) + "\n";
  out += "in_channels = " + std::to_string(c.in_channels) + "\n";
  out += "stem_kernel = " + std::to_string(c.stem_kernel) + "\n";
  out += "final_kernel = " + std::to_string(c.final_kernel) + "\n";
  out += "head_divisor = " + std::to_string(c.head_divisor) + "\n";
  out += "embed_kernel = " + std::to_string(c.embed_kernel) + "\n";
  out += "offset_bound = " + (c.offset_bound ? format_real(*c.offset_bound) : std::string("none")) + "\n";
  out += "skff_reduction = " + std::to_string(c.skff_reduction) + "\n";
  out += "ffn_expansion = " + std::to_string(c.ffn_expansion) + "\n";
  out += std::string("bias_free = ") + (c.bias_free ? "true" : "false") + "\n";
  out += "focused_factor = " + format_real(c.attention.focused_factor) + "\n";
  out += "modulation = " + format_real(c.attention.modulation) + "\n";
  out += "epsilon = " + format_real(c.attention.epsilon) + "\n";
  out += "cpe_kernels = " + join(c.attention.cpe_kernels) + "\n";
  out += std::string("phi_norm = ") + (c.attention.phi_norm == PhiNorm::kInput ? "input" : "relu") + "\n";
  return out;
}

ModelConfig load_model_config(const std::string& path) { return parse_model_config(read_file(path)); }

ModelConfig resolve_model_config(const std::string& name_or_path) {
  if (name_or_path == "nano") return ModelConfig::nano();
  if (name_or_path == "b") return ModelConfig::variant_b();
  if (name_or_path == "l") return ModelConfig::variant_l();
  if (name_or_path == "xl") return ModelConfig::variant_xl();
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError("unknown model config '" + name_or_path + "' (expected nano, b, l, xl or a file)");
  }
  return load_model_config(name_or_path);
}

}  // namespace mbtf
