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

#include "mbtf/linalg.hpp"
#include "mbtf/tensor.hpp"

namespace mbtf {

// Convolutions over channel-major C x h x w maps with zero padding. An empty
// bias tensor means "no bias".

/// weight: Cout x Cin x K x K.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride = 1,
              Exec exec = Exec::kSerial);

/// weight: C x K x K, one kernel per channel, padding K / 2.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        std::size_t stride = 1, Exec exec = Exec::kSerial);

/// Adjoint of depthwise_conv2d (stride 1) with respect to its input.
Tensor depthwise_conv2d_adjoint(const Tensor& grad_out, const Tensor& weight);

/// weight: Cout x Cin (1 x 1 convolution).
Tensor pointwise_conv(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      Exec exec = Exec::kSerial);

/// Output extent for kernel K, padding K / 2 and the given stride.
std::size_t conv_out_extent(std::size_t extent, std::size_t kernel, std::size_t stride);

double hardswish(double x);
double gelu(double x);
Tensor hardswish(const Tensor& x);
Tensor gelu(const Tensor& x);

}  // namespace mbtf
