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

#include "mbtf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mbtf {

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

void validate_extents(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  validate_extents(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_extents(shape_);
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("payload of " + std::to_string(data_.size()) + " values does not match shape " +
                     shape_to_string(shape_));
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw ShapeError("ragged row literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = 1.0;
  return out;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw ShapeError("axis out of range for shape " + shape_to_string(shape_));
  return shape_[axis];
}

std::span<double> Tensor::row(std::size_t i) {
  return std::span<double>(data_).subspan(i * shape_[1], shape_[1]);
}
std::span<const double> Tensor::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * shape_[1], shape_[1]);
}
std::span<double> Tensor::plane(std::size_t c) {
  const std::size_t hw = shape_[1] * shape_[2];
  return std::span<double>(data_).subspan(c * hw, hw);
}
std::span<const double> Tensor::plane(std::size_t c) const {
  const std::size_t hw = shape_[1] * shape_[2];
  return std::span<const double>(data_).subspan(c * hw, hw);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_rank(const Tensor& t, std::size_t rank, std::string_view what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

void require_finite(const Tensor& t, std::string_view what) {
  if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite value");
}

namespace {

template <class Op>
Tensor zip(const Tensor& a, const Tensor& b, std::string_view what, Op op) {
  require_same_shape(a, b, what);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return zip(a, b, "add", std::plus<>()); }
Tensor sub(const Tensor& a, const Tensor& b) { return zip(a, b, "sub", std::minus<>()); }
Tensor hadamard(const Tensor& a, const Tensor& b) {
  return zip(a, b, "hadamard", std::multiplies<>());
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = a;
  for (auto& v : out.values()) v *= factor;
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

double sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s;
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double frobenius_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return std::sqrt(s);
}

Tensor transpose(const Tensor& m) {
  require_rank(m, 2, "transpose");
  const std::size_t r = m.dim(0), c = m.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: nothing to concatenate");
  const std::size_t h = parts[0].dim(1), w = parts[0].dim(2);
  std::size_t channels = 0;
  for (const auto& p : parts) {
    require_rank(p, 3, "concat_channels");
    if (p.dim(1) != h || p.dim(2) != w) throw ShapeError("concat_channels: spatial mismatch");
    channels += p.dim(0);
  }
  std::vector<double> data;
  data.reserve(channels * h * w);
  for (const auto& p : parts) data.insert(data.end(), p.values().begin(), p.values().end());
  return Tensor({channels, h, w}, std::move(data));
}

Tensor slice_channels(const Tensor& x, std::size_t first, std::size_t count) {
  require_rank(x, 3, "slice_channels");
  if (count == 0 || first + count > x.dim(0)) throw ShapeError("slice_channels: range out of bounds");
  const std::size_t hw = x.dim(1) * x.dim(2);
  auto begin = x.values().begin() + static_cast<std::ptrdiff_t>(first * hw);
  return Tensor({count, x.dim(1), x.dim(2)},
                std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * hw)));
}

Tensor to_tokens(const Tensor& feature, std::size_t first, std::size_t count) {
  require_rank(feature, 3, "to_tokens");
  if (count == 0 || first + count > feature.dim(0)) throw ShapeError("to_tokens: channel range");
  const std::size_t n = feature.dim(1) * feature.dim(2);
  Tensor out({n, count});
  for (std::size_t c = 0; c < count; ++c) {
    auto src = feature.plane(first + c);
    for (std::size_t t = 0; t < n; ++t) out.at(t, c) = src[t];
  }
  return out;
}

void from_tokens(const Tensor& tokens, Tensor& feature, std::size_t first) {
  require_rank(tokens, 2, "from_tokens");
  require_rank(feature, 3, "from_tokens");
  const std::size_t n = feature.dim(1) * feature.dim(2);
  const std::size_t count = tokens.dim(1);
  if (tokens.dim(0) != n || first + count > feature.dim(0)) throw ShapeError("from_tokens: shape");
  for (std::size_t c = 0; c < count; ++c) {
    auto dst = feature.plane(first + c);
    for (std::size_t t = 0; t < n; ++t) dst[t] = tokens.at(t, c);
  }
}

}  // namespace mbtf
