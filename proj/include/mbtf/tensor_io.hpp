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

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mbtf/tensor.hpp"

namespace mbtf {

// Raw tensor record, all integers and floats little-endian:
//   "TTNSR1"            6 bytes magic
//   rank                u64
//   extents[rank]       u64 each
//   payload             f64 x product(extents), row-major
inline constexpr char kTensorMagic[] = "TTNSR1";

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`. A failed write
/// never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// 8-bit RGB image as decoded from / encoded to binary PPM (P6).
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved, row-major
};

Image decode_ppm(const std::string& bytes);
std::string encode_ppm(const Image& img);

/// 3 x h x w tensor with values in [0, 1].
Tensor image_to_tensor(const Image& img);
/// Clamps to [0, 1] and rounds to the nearest 8-bit level.
Image tensor_to_image(const Tensor& t);

/// Binary PGM (P5) heat map: every row is divided by its own maximum and
/// scaled to [0, 255]. Negative entries clamp to 0; all-zero rows stay 0.
std::string encode_heatmap_pgm(const Tensor& map);

}  // namespace mbtf
