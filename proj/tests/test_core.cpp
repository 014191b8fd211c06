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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mbtf/linalg.hpp"
#include "mbtf/rng.hpp"
#include "mbtf/tensor.hpp"
#include "mbtf/tensor_io.hpp"
#include "oracles.hpp"

using namespace mbtf;

TEST_CASE("tensor shape rules") {
  CHECK_THROWS_AS(Tensor(Shape{}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor::from_rows({{1, 2}, {3}}), ShapeError);

  const Tensor t({2, 3, 4}, 1.5);
  CHECK(t.size() == 24);
  CHECK(t.dim(2) == 4);
  CHECK_THROWS_AS(t.dim(3), ShapeError);
  CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
  CHECK(t.reshaped({6, 4}).dim(0) == 6);
}

TEST_CASE("row-major layout") {
  Tensor t({2, 3, 4});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  CHECK(t.at(1, 2, 3) == 23.0);
  CHECK(t.plane(1)[0] == 12.0);
  const Tensor m = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.at(1, 0) == 4.0);
  CHECK(transpose(m).at(2, 1) == 6.0);
}

TEST_CASE("elementwise helpers") {
  const Tensor a = Tensor::from_rows({{1, -2}, {3, 4}});
  const Tensor b = Tensor::from_rows({{0.5, 0.5}, {-1, 2}});
  CHECK(add(a, b) == Tensor::from_rows({{1.5, -1.5}, {2, 6}}));
  CHECK(sub(a, b) == Tensor::from_rows({{0.5, -2.5}, {4, 2}}));
  CHECK(hadamard(a, b) == Tensor::from_rows({{0.5, -1}, {-3, 8}}));
  CHECK(scale(a, 2.0) == Tensor::from_rows({{2, -4}, {6, 8}}));
  CHECK(sum(a) == 6.0);
  CHECK(max_abs(a) == 4.0);
  CHECK(max_abs_diff(a, b) == 4.0);
  CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(30.0)));
  CHECK_THROWS_AS(add(a, Tensor({3, 2})), ShapeError);
  Tensor bad = a;
  bad[0] = std::nan("");
  CHECK_THROWS_AS(require_finite(bad, "x"), NumericError);
}

TEST_CASE("channel slicing and tokens") {
  Rng rng(3);
  const Tensor x = rng.normal_tensor({5, 3, 4});
  const Tensor parts[] = {slice_channels(x, 0, 2), slice_channels(x, 2, 3)};
  CHECK(concat_channels(parts) == x);

  const Tensor tok = to_tokens(x, 1, 3);
  CHECK(tok.dim(0) == 12);
  CHECK(tok.at(5, 2) == x.at(3, 1, 1));
  Tensor back({5, 3, 4});
  from_tokens(tok, back, 1);
  CHECK(slice_channels(back, 1, 3) == slice_channels(x, 1, 3));
  CHECK_THROWS_AS(slice_channels(x, 4, 2), ShapeError);
}

TEST_CASE("rng is reproducible and well spread") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(42).next_u64() != c.next_u64());

  // mt19937_64 is pinned by the standard: the 10000th output of the default
  // seed is 9981545732273789042.
  std::mt19937_64 ref;
  ref.discard(9999);
  CHECK(ref() == 9981545732273789042ULL);

  Rng r(7);
  double mean = 0.0, var = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    mean += z;
    var += z * z;
  }
  mean /= n;
  var = var / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);

  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(std::abs(r.truncated_normal(0.02)) <= 0.04);
    CHECK(r.index(7) < 7);
  }
}

TEST_CASE("matmul matches the triple loop") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 1 + rng.index(20), k = 1 + rng.index(20), n = 1 + rng.index(20);
    const Tensor a = rng.normal_tensor({m, k}), b = rng.normal_tensor({k, n});
    const Tensor ref = oracle::matmul(a, b);
    CHECK(max_abs_diff(matmul(a, b), ref) < 1e-12);
    CHECK(matmul(a, b, Exec::kParallel) == matmul(a, b));
  }
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST_CASE("row normalisation keeps zero rows") {
  const Tensor x = Tensor::from_rows({{3, 4}, {0, 0}});
  const Tensor y = normalize_rows(x);
  CHECK(y.at(0, 0) == doctest::Approx(0.6));
  CHECK(y.at(0, 1) == doctest::Approx(0.8));
  CHECK(y.at(1, 0) == 0.0);
  CHECK(y.at(1, 1) == 0.0);
}

TEST_CASE("singular values and rank") {
  // diag(3, 2, 0) rotated by a permutation still has singular values 3, 2, 0.
  const Tensor m = Tensor::from_rows({{0, 2, 0}, {3, 0, 0}, {0, 0, 0}});
  const auto sv = singular_values(m);
  REQUIRE(sv.size() == 3);
  CHECK(sv[0] == doctest::Approx(3.0));
  CHECK(sv[1] == doctest::Approx(2.0));
  CHECK(sv[2] == doctest::Approx(0.0));
  CHECK(rank_estimate(m) == 2);

  Rng rng(5);
  const Tensor u = rng.normal_tensor({12, 3}), v = rng.normal_tensor({3, 9});
  CHECK(rank_estimate(matmul(u, v)) == 3);
  CHECK_THROWS_AS(rank_estimate(m, 0.0), std::invalid_argument);
}

TEST_CASE("bilinear sampling") {
  Tensor f({1, 2, 2});
  f.at(0, 0, 0) = 1;
  f.at(0, 0, 1) = 2;
  f.at(0, 1, 0) = 3;
  f.at(0, 1, 1) = 4;
  CHECK(bilinear_sample(f, 0, 0, 0) == 1.0);
  CHECK(bilinear_sample(f, 0.5, 0.5, 0) == doctest::Approx(2.5));
  CHECK(bilinear_sample(f, 0.0, 0.25, 0) == doctest::Approx(1.25));
  // Outside neighbours read as zero.
  CHECK(bilinear_sample(f, -0.5, 0.0, 0) == doctest::Approx(0.5));
  CHECK(bilinear_sample(f, 5.0, 5.0, 0) == 0.0);
  CHECK_THROWS_AS(bilinear_sample(f, 0, 0, 1), ShapeError);
}

TEST_CASE("tensor records round-trip bit-exactly") {
  Rng rng(9);
  Tensor t = rng.normal_tensor({3, 1, 5});
  t[0] = -0.0;
  t[1] = 1e-310;
  const std::string bytes = encode_tensor(t);
  CHECK(bytes.size() == 6 + 8 + 3 * 8 + 15 * 8);
  CHECK(bytes.substr(0, 6) == "TTNSR1");
  const Tensor u = decode_tensor(bytes);
  CHECK(u.shape() == t.shape());
  CHECK(std::memcmp(u.data(), t.data(), t.size() * sizeof(double)) == 0);

  CHECK_THROWS_AS(decode_tensor("XXXXXX"), IoError);
  CHECK_THROWS_AS(decode_tensor(bytes.substr(0, bytes.size() - 1)), IoError);
  std::string bad = bytes;
  bad[0] = 'Q';
  CHECK_THROWS_AS(decode_tensor(bad), IoError);
}

TEST_CASE("file round-trip and missing files") {
  const auto dir = std::filesystem::temp_directory_path() / "mbtf_core_test";
  std::filesystem::create_directories(dir);
  const Tensor t = Rng(1).normal_tensor({4, 4});
  save_tensor(dir / "t.ttnsr", t);
  CHECK(load_tensor(dir / "t.ttnsr") == t);
  CHECK_THROWS_AS(load_tensor(dir / "missing.ttnsr"), IoError);
  CHECK_THROWS_AS(save_tensor(dir / "no_such_dir" / "t.ttnsr", t), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ppm codec") {
  Image img;
  img.width = 3;
  img.height = 2;
  for (int i = 0; i < 18; ++i) img.rgb.push_back(static_cast<std::uint8_t>(i * 14));
  const std::string bytes = encode_ppm(img);
  const Image back = decode_ppm(bytes);
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  CHECK(back.rgb == img.rgb);

  // Comments in the header are legal.
  const Image c = decode_ppm(std::string("P6\n# hi\n1 1\n255\n") + std::string("\x01\x02\x03", 3));
  CHECK(c.rgb == std::vector<std::uint8_t>{1, 2, 3});

  CHECK_THROWS_AS(decode_ppm("P5\n1 1\n255\n\x01"), IoError);
  CHECK_THROWS_AS(decode_ppm("P6\n2 2\n255\n\x01\x02"), IoError);
  CHECK_THROWS_AS(decode_ppm("P6\n1 1\n65535\n\x01\x02"), IoError);

  // Pixels survive the trip through [0, 1] tensors.
  const Tensor t = image_to_tensor(img);
  CHECK(t.dim(0) == 3);
  CHECK(t.at(1, 0, 0) == doctest::Approx(14.0 / 255.0));
  CHECK(tensor_to_image(t).rgb == img.rgb);
}

TEST_CASE("heat map scales rows independently") {
  const Tensor m = Tensor::from_rows({{0.1, 0.2}, {0, 0}, {-1, 4}});
  const std::string pgm = encode_heatmap_pgm(m);
  const std::string header = "P5\n2 3\n255\n";
  REQUIRE(pgm.substr(0, header.size()) == header);
  const auto px = [&](std::size_t i) { return static_cast<unsigned char>(pgm[header.size() + i]); };
  CHECK(px(0) == 128);
  CHECK(px(1) == 255);
  CHECK(px(2) == 0);
  CHECK(px(3) == 0);
  CHECK(px(4) == 0);
  CHECK(px(5) == 255);
}
