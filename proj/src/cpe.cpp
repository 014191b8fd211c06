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

#include "mbtf/cpe.hpp"

#include "mbtf/conv.hpp"

namespace mbtf {

std::size_t CpeWeights::channels() const {
  std::size_t c = 0;
  for (const auto& w : weights) c += w.dim(0);
  return c;
}

std::vector<std::size_t> cpe_group_sizes(std::size_t channels, std::size_t groups) {
  if (groups == 0 || channels < groups) {
    throw ShapeError("cpe: cannot split " + std::to_string(channels) + " channels into " +
                     std::to_string(groups) + " groups");
  }
  std::vector<std::size_t> sizes(groups, channels / groups);
  sizes[0] += channels % groups;
  return sizes;
}

CpeWeights make_cpe_weights(std::size_t channels, const std::vector<std::size_t>& kernels) {
  const auto sizes = cpe_group_sizes(channels, kernels.size());
  CpeWeights w;
  w.kernels = kernels;
  for (std::size_t g = 0; g < kernels.size(); ++g) {
    if (kernels[g] % 2 == 0) throw ShapeError("cpe: kernel sizes must be odd");
    w.weights.emplace_back(Shape{sizes[g], kernels[g], kernels[g]});
  }
  return w;
}

CpeWeights make_delta_cpe(std::size_t channels, const std::vector<std::size_t>& kernels) {
  CpeWeights w = make_cpe_weights(channels, kernels);
  for (std::size_t g = 0; g < kernels.size(); ++g) {
    const std::size_t r = kernels[g] / 2;
    for (std::size_t c = 0; c < w.weights[g].dim(0); ++c) w.weights[g].at(c, r, r) = 1.0;
  }
  return w;
}

namespace {

void check_layout(const Tensor& v, const CpeWeights& w) {
  require_rank(v, 3, "cpe");
  if (w.weights.size() != w.kernels.size() || w.weights.empty()) throw ShapeError("cpe: malformed weights");
  if (w.channels() != v.dim(0)) {
    throw ShapeError("cpe: weights cover " + std::to_string(w.channels()) + " channels, input has " +
                     std::to_string(v.dim(0)));
  }
}

}  // namespace

Tensor cpe(const Tensor& v, const CpeWeights& w) {
  check_layout(v, w);
  std::vector<Tensor> parts;
  std::size_t first = 0;
  for (const auto& kernel : w.weights) {
    const std::size_t count = kernel.dim(0);
    parts.push_back(depthwise_conv2d(slice_channels(v, first, count), kernel, Tensor{}));
    first += count;
  }
  return concat_channels(parts);
}

Tensor cpe_tokens(const Tensor& v, std::size_t h, std::size_t width, const CpeWeights& weights) {
  require_rank(v, 2, "cpe_tokens");
  if (v.dim(0) != h * width) throw ShapeError("cpe_tokens: token count does not match h*w");
  Tensor feature({v.dim(1), h, width});
  from_tokens(v, feature, 0);
  return to_tokens(cpe(feature, weights), 0, v.dim(1));
}

CpeGradients cpe_backward(const Tensor& v, const CpeWeights& w, const Tensor& grad_out) {
  check_layout(v, w);
  require_same_shape(v, grad_out, "cpe_backward");
  const std::size_t h = v.dim(1), width = v.dim(2);
  CpeGradients g;
  std::vector<Tensor> dv_parts;
  std::size_t first = 0;
  for (const auto& kernel : w.weights) {
    const std::size_t count = kernel.dim(0), k = kernel.dim(1);
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const Tensor go = slice_channels(grad_out, first, count);
    const Tensor vin = slice_channels(v, first, count);
    dv_parts.push_back(depthwise_conv2d_adjoint(go, kernel));
    Tensor dk({count, k, k});
    for (std::size_t c = 0; c < count; ++c)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx) {
          double acc = 0.0;
          for (std::size_t y = 0; y < h; ++y) {
            const auto iy = static_cast<std::ptrdiff_t>(y + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t x = 0; x < width; ++x) {
              const auto ix = static_cast<std::ptrdiff_t>(x + kx) - pad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) continue;
              acc += go.at(c, y, x) * vin.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
          dk.at(c, ky, kx) = acc;
        }
    g.dweights.push_back(std::move(dk));
    first += count;
  }
  g.dv = concat_channels(dv_parts);
  return g;
}

Tensor cpe_token_matrix(const CpeWeights& w, std::size_t channel, std::size_t h, std::size_t width) {
  std::size_t first = 0;
  for (const auto& kernel : w.weights) {
    const std::size_t count = kernel.dim(0);
    if (channel < first + count) {
      const std::size_t c = channel - first, k = kernel.dim(1);
      const auto pad = static_cast<std::ptrdiff_t>(k / 2);
      const std::size_t n = h * width;
      Tensor m({n, n});
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < width; ++x)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto iy = static_cast<std::ptrdiff_t>(y + ky) - pad;
              const auto ix = static_cast<std::ptrdiff_t>(x + kx) - pad;
              if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                  ix >= static_cast<std::ptrdiff_t>(width)) {
                continue;
              }
              m.at(y * width + x, static_cast<std::size_t>(iy) * width + static_cast<std::size_t>(ix)) +=
                  kernel.at(c, ky, kx);
            }
      return m;
    }
    first += count;
  }
  throw ShapeError("cpe_token_matrix: channel out of range");
}

}  // namespace mbtf
