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

#include "mbtf/checkpoint.hpp"

#include <sstream>

#include "mbtf/tensor_io.hpp"

namespace mbtf {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  return std::filesystem::path(prefix.string() + suffix);
}

std::string role_of(const std::string& name) {
  if (name.ends_with("bias")) return "bias";
  if (name.find(".norm") != std::string::npos) return "norm";
  if (name.ends_with("modulation") || name.ends_with("prelu_slope")) return "scalar";
  return "weight";
}

std::string shape_field(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

Shape parse_shape(const std::string& field, const std::string& name) {
  Shape s;
  std::istringstream in(field);
  std::string part;
  while (std::getline(in, part, 'x')) {
    try {
      std::size_t used = 0;
      s.push_back(static_cast<std::size_t>(std::stoull(part, &used)));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw IoError("manifest: bad shape '" + field + "' for " + name);
    }
  }
  if (s.empty()) throw IoError("manifest: empty shape for " + name);
  return s;
}

void write_pair(const std::filesystem::path& prefix, const std::string& header,
                const std::vector<std::pair<std::string, const Tensor*>>& items) {
  std::string manifest = header + "\n";
  std::ostringstream bin;
  for (const auto& [name, t] : items) {
    manifest += name + " " + role_of(name) + " " + shape_field(t->shape()) + "\n";
    write_tensor(bin, *t);
  }
  write_file_atomic(with_suffix(prefix, ".bin"), bin.str());
  write_file_atomic(with_suffix(prefix, ".manifest"), manifest);
}

std::vector<std::pair<ManifestEntry, Tensor>> read_pair(const std::filesystem::path& prefix) {
  const auto entries = read_manifest(prefix);
  std::istringstream bin(read_file(with_suffix(prefix, ".bin")));
  std::vector<std::pair<ManifestEntry, Tensor>> out;
  for (const auto& e : entries) {
    Tensor t = read_tensor(bin);
    if (t.shape() != e.shape) {
      throw IoError("checkpoint: record for " + e.name + " has shape " + shape_to_string(t.shape()) +
                    ", manifest says " + shape_to_string(e.shape));
    }
    out.emplace_back(e, std::move(t));
  }
  if (bin.peek() != std::char_traits<char>::eof()) throw IoError("checkpoint: trailing bytes after last record");
  return out;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& prefix) {
  std::istringstream in(read_file(with_suffix(prefix, ".manifest")));
  std::string line;
  std::getline(in, line);  // header
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    ManifestEntry e;
    std::string shape;
    if (!(fields >> e.name >> e.role >> shape)) throw IoError("manifest: malformed line '" + line + "'");
    e.shape = parse_shape(shape, e.name);
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_checkpoint(const std::filesystem::path& prefix, const ModelWeights& w, const ModelConfig& cfg) {
  std::vector<std::pair<std::string, const Tensor*>> items;
  for_each_param(w, [&](const std::string& name, const Tensor& t) { items.emplace_back(name, &t); });
  write_pair(prefix, "# mbtf checkpoint config=" + cfg.name, items);
}

ModelWeights load_checkpoint(const std::filesystem::path& prefix, const ModelConfig& cfg) {
  ModelWeights w = make_model_weights(cfg);
  auto records = read_pair(prefix);
  std::size_t next = 0;
  for_each_param(w, [&](const std::string& name, Tensor& t) {
    if (next >= records.size()) throw IoError("checkpoint: missing parameter " + name);
    auto& [entry, value] = records[next++];
    if (entry.name != name) throw IoError("checkpoint: expected " + name + ", found " + entry.name);
    if (value.shape() != t.shape()) {
      throw IoError("checkpoint: " + name + " has shape " + shape_to_string(value.shape()) + ", config needs " +
                    shape_to_string(t.shape()));
    }
    require_finite(value, name);
    t = std::move(value);
  });
  if (next != records.size()) throw IoError("checkpoint: extra parameter " + records[next].first.name);
  return w;
}

void save_named_tensors(const std::filesystem::path& prefix, const std::string& tag,
                        const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::vector<std::pair<std::string, const Tensor*>> items;
  for (const auto& [name, t] : tensors) items.emplace_back(name, &t);
  write_pair(prefix, "# mbtf tensors " + tag, items);
}

std::vector<std::pair<std::string, Tensor>> load_named_tensors(const std::filesystem::path& prefix) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (auto& [e, t] : read_pair(prefix)) out.emplace_back(e.name, std::move(t));
  return out;
}

}  // namespace mbtf
