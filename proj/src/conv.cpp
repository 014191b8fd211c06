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

#include "mbtf/conv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mbtf {

std::size_t conv_out_extent(std::size_t extent, std::size_t kernel, std::size_t stride) {
  const std::size_t pad = kernel / 2;
  return (extent + 2 * pad - kernel) / stride + 1;
}

namespace {

void check_bias(const Tensor& bias, std::size_t channels, const char* what) {
  if (!bias.empty() && bias.size() != channels) {
    throw ShapeError(std::string(what) + ": bias has " + std::to_string(bias.size()) +
                     " values for " + std::to_string(channels) + " channels");
  }
}

template <class Body>
void for_channels(std::size_t channels, Exec exec, Body&& body) {
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(channels); ++c) body(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < channels; ++c) body(c);
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              Exec exec) {
  require_rank(x, 3, "conv2d");
  require_rank(weight, 4, "conv2d weight");
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != cin || weight.dim(3) != k || k % 2 == 0) {
    throw ShapeError("conv2d: weight " + shape_to_string(weight.shape()) + " incompatible with input " +
                     shape_to_string(x.shape()));
  }
  check_bias(bias, cout, "conv2d");
  const std::size_t oh = conv_out_extent(h, k, stride), ow = conv_out_extent(w, k, stride);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  Tensor out({cout, oh, ow});
  for_channels(cout, exec, [&](std::size_t o) {
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              acc += weight[((o * cin + c) * k + ky) * k + kx] *
                     x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        out.at(o, oy, ox) = acc;
      }
  });
  return out;
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        std::size_t stride, Exec exec) {
  require_rank(x, 3, "depthwise_conv2d");
  require_rank(weight, 3, "depthwise_conv2d weight");
  const std::size_t ch = x.dim(0), h = x.dim(1), w = x.dim(2), k = weight.dim(1);
  if (weight.dim(0) != ch || weight.dim(2) != k || k % 2 == 0) {
    throw ShapeError("depthwise_conv2d: weight " + shape_to_string(weight.shape()) +
                     " incompatible with input " + shape_to_string(x.shape()));
  }
  check_bias(bias, ch, "depthwise_conv2d");
  const std::size_t oh = conv_out_extent(h, k, stride), ow = conv_out_extent(w, k, stride);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  Tensor out({ch, oh, ow});
  for_channels(ch, exec, [&](std::size_t c) {
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : bias[c];
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            acc += weight.at(c, ky, kx) * x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
          }
        }
        out.at(c, oy, ox) = acc;
      }
  });
  return out;
}

Tensor depthwise_conv2d_adjoint(const Tensor& grad_out, const Tensor& weight) {
  require_rank(grad_out, 3, "depthwise_conv2d_adjoint");
  const std::size_t ch = grad_out.dim(0), h = grad_out.dim(1), w = grad_out.dim(2), k = weight.dim(1);
  if (weight.dim(0) != ch) throw ShapeError("depthwise_conv2d_adjoint: channel mismatch");
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  Tensor grad_in({ch, h, w});
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t oy = 0; oy < h; ++oy)
      for (std::size_t ox = 0; ox < w; ++ox) {
        const double g = grad_out.at(c, oy, ox);
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox + kx) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            grad_in.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) += weight.at(c, ky, kx) * g;
          }
        }
      }
  return grad_in;
}

Tensor pointwise_conv(const Tensor& x, const Tensor& weight, const Tensor& bias, Exec exec) {
  require_rank(x, 3, "pointwise_conv");
  require_rank(weight, 2, "pointwise_conv weight");
  const std::size_t cin = x.dim(0), cout = weight.dim(0);
  if (weight.dim(1) != cin) {
    throw ShapeError("pointwise_conv: weight " + shape_to_string(weight.shape()) +
                     " incompatible with input " + shape_to_string(x.shape()));
  }
  check_bias(bias, cout, "pointwise_conv");
  const std::size_t hw = x.dim(1) * x.dim(2);
  Tensor out({cout, x.dim(1), x.dim(2)});
  for_channels(cout, exec, [&](std::size_t o) {
    auto dst = out.plane(o);
    if (!bias.empty()) std::fill(dst.begin(), dst.end(), bias[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double wv = weight.at(o, c);
      const auto src = x.plane(c);
      for (std::size_t t = 0; t < hw; ++t) dst[t] += wv * src[t];
    }
  });
  return out;
}

double hardswish(double x) { return x * std::clamp(x + 3.0, 0.0, 6.0) / 6.0; }

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

Tensor hardswish(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = hardswish(v);
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = gelu(v);
  return out;
}

}  // namespace mbtf
