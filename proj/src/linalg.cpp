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

#include "mbtf/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace mbtf {

Tensor matmul(const Tensor& a, const Tensor& b, Exec exec) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner extents differ " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  Tensor c({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  const auto row_kernel = [&](std::size_t i) {
    double* ci = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* bp = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) row_kernel(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < m; ++i) row_kernel(i);
  }
  require_finite(c, "matmul");
  return c;
}

Tensor normalize_rows(const Tensor& x) {
  require_rank(x, 2, "normalize_rows");
  Tensor out = x;
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    auto r = out.row(i);
    double ss = 0.0;
    for (double v : r) ss += v * v;
    if (ss == 0.0) continue;
    const double inv = 1.0 / std::sqrt(ss);
    for (double& v : r) v *= inv;
  }
  return out;
}

std::vector<double> singular_values(const Tensor& m) {
  require_rank(m, 2, "singular_values");
  require_finite(m, "singular_values");
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Mat> view(m.data(), static_cast<Eigen::Index>(m.dim(0)),
                             static_cast<Eigen::Index>(m.dim(1)));
  Eigen::BDCSVD<Mat> svd(view);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

std::size_t rank_estimate(const Tensor& m, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("rank_estimate: tol must be positive");
  const auto s = singular_values(m);
  if (s.empty() || s.front() == 0.0) return 0;
  const double cut = tol * s.front();
  std::size_t r = 0;
  for (double v : s) r += v > cut ? 1 : 0;
  return r;
}

double bilinear_sample_plane(std::span<const double> plane, std::size_t height, std::size_t width,
                             double y, double x) {
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  if (!(y > -1.0 && x > -1.0 && y < static_cast<double>(h) && x < static_cast<double>(w))) return 0.0;
  const double fy = std::floor(y), fx = std::floor(x);
  const auto y0 = static_cast<std::ptrdiff_t>(fy), x0 = static_cast<std::ptrdiff_t>(fx);
  const double ly = y - fy, lx = x - fx;
  const double hy = 1.0 - ly, hx = 1.0 - lx;
  const auto read = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) {
    if (yy < 0 || xx < 0 || yy >= h || xx >= w) return 0.0;
    return plane[static_cast<std::size_t>(yy * w + xx)];
  };
  return hy * hx * read(y0, x0) + hy * lx * read(y0, x0 + 1) + ly * hx * read(y0 + 1, x0) +
         ly * lx * read(y0 + 1, x0 + 1);
}

double bilinear_sample(const Tensor& feature, double y, double x, std::size_t channel) {
  require_rank(feature, 3, "bilinear_sample");
  if (channel >= feature.dim(0)) throw ShapeError("bilinear_sample: channel out of range");
  return bilinear_sample_plane(feature.plane(channel), feature.dim(1), feature.dim(2), y, x);
}

}  // namespace mbtf
