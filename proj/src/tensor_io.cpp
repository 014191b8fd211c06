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

#include "mbtf/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mbtf {

namespace {

constexpr std::size_t kMagicLen = 6;
constexpr std::uint64_t kMaxRank = 16;

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw IoError("tensor record truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
  out.write(kTensorMagic, kMagicLen);
  put_u64(out, t.rank());
  for (auto e : t.shape()) put_u64(out, e);
  for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("failed writing tensor record");
}

Tensor read_tensor(std::istream& in) {
  char magic[kMagicLen];
  if (!in.read(magic, kMagicLen) || std::memcmp(magic, kTensorMagic, kMagicLen) != 0) {
    throw IoError("bad tensor magic (expected TTNSR1)");
  }
  const auto rank = get_u64(in);
  if (rank == 0 || rank > kMaxRank) throw IoError("implausible tensor rank " + std::to_string(rank));
  Shape shape(rank);
  std::uint64_t count = 1;
  for (auto& e : shape) {
    e = get_u64(in);
    if (e == 0 || e > (std::uint64_t{1} << 40) || count > (std::uint64_t{1} << 40) / e) {
      throw IoError("implausible tensor extent");
    }
    count *= e;
  }
  std::vector<double> data(count);
  for (auto& v : data) v = std::bit_cast<double>(get_u64(in));
  return Tensor(std::move(shape), std::move(data));
}

std::string encode_tensor(const Tensor& t) {
  std::ostringstream out(std::ios::binary);
  write_tensor(out, t);
  return out.str();
}

Tensor decode_tensor(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_tensor(in);
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

// Reads one whitespace-delimited header integer, skipping '#' comments.
std::size_t header_int(const std::string& bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    throw IoError("malformed PPM header");
  }
  std::size_t v = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
    if (v > 1'000'000) throw IoError("malformed PPM header: value too large");
    ++pos;
  }
  return v;
}

}  // namespace

Image decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw IoError("not a binary PPM (P6)");
  std::size_t pos = 2;
  Image img;
  img.width = header_int(bytes, pos);
  img.height = header_int(bytes, pos);
  const auto maxval = header_int(bytes, pos);
  if (img.width == 0 || img.height == 0) throw IoError("PPM has zero extent");
  if (maxval != 255) throw IoError("only 8-bit PPM (maxval 255) is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw IoError("malformed PPM header");
  }
  ++pos;
  const std::size_t need = img.width * img.height * 3;
  if (bytes.size() - pos < need) throw IoError("PPM pixel data truncated");
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.rgb.begin(), img.rgb.end());
  return out;
}

Tensor image_to_tensor(const Image& img) {
  Tensor t({3, img.height, img.width});
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        t.at(c, y, x) = img.rgb[(y * img.width + x) * 3 + c] / 255.0;
  return t;
}

Image tensor_to_image(const Tensor& t) {
  require_rank(t, 3, "tensor_to_image");
  if (t.dim(0) != 3) throw ShapeError("tensor_to_image: expected 3 channels");
  require_finite(t, "tensor_to_image");
  Image img{t.dim(2), t.dim(1), {}};
  img.rgb.resize(img.width * img.height * 3);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(t.at(c, y, x), 0.0, 1.0) * 255.0;
        img.rgb[(y * img.width + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v));
      }
  return img;
}

std::string encode_heatmap_pgm(const Tensor& map) {
  require_rank(map, 2, "encode_heatmap_pgm");
  require_finite(map, "encode_heatmap_pgm");
  const std::size_t rows = map.dim(0), cols = map.dim(1);
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = map.row(i);
    const double peak = *std::max_element(r.begin(), r.end());
    for (double v : r) {
      const double level = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) * 255.0 : 0.0;
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(level))));
    }
  }
  return out;
}

}  // namespace mbtf
