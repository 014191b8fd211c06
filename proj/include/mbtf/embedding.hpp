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
#include <optional>
#include <vector>

#include "mbtf/linalg.hpp"
#include "mbtf/tensor.hpp"

namespace mbtf {

class Rng;

/// One depthwise separable deformable convolution layer.
struct DsdcnConfig {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  /// Learned offsets are clamped to [-bound, bound]; nullopt leaves them free.
  std::optional<double> offset_bound = 3.0;
  std::size_t stride = 1;

  void validate() const;
};

/// One branch of the multi-scale patch embedding: `depth` stacked DSDCN
/// layers, stride applied on the first layer only.
struct DeformableEmbedConfig {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t depth = 1;
  std::optional<double> offset_bound = 3.0;
  std::size_t stride = 1;

  DsdcnConfig layer(std::size_t index) const;
};

/// Offset head (K x K depthwise, then 1 x 1 to 2K^2 maps) and value path
/// (K x K depthwise deformable, then 1 x 1 mixer). Offset channel 2t holds
/// the row displacement of tap t = ky * K + kx, channel 2t + 1 the column.
struct DsdcnWeights {
  Tensor offset_dw;       ///< Cin x K x K
  Tensor offset_dw_bias;  ///< Cin
  Tensor offset_pw;       ///< 2K^2 x Cin
  Tensor offset_pw_bias;  ///< 2K^2
  Tensor value_dw;        ///< Cin x K x K
  Tensor value_dw_bias;   ///< Cin
  Tensor value_pw;        ///< Cout x Cin
  Tensor value_pw_bias;   ///< Cout
};

DsdcnWeights make_dsdcn_weights(const DsdcnConfig& cfg);
/// Zero offset head, delta-centred depthwise value kernel plus N(0, 0.02)
/// noise, truncated-normal(0.02) pointwise mixer, zero biases.
DsdcnWeights init_dsdcn_weights(const DsdcnConfig& cfg, Rng& rng);

/// The clamped offset applied to one deformable tap, relative to the tap's
/// nominal grid position (output * stride - K/2 + k).
struct SampleDisplacement {
  double dy;
  double dx;
};

/// Offset head, clamp, deformable depthwise sampling, pointwise mix.
/// `recorder`, when given, receives every sampling displacement (serial
/// execution only).
Tensor dsdcn_forward(const Tensor& x, const DsdcnWeights& w, const DsdcnConfig& cfg,
                     Exec exec = Exec::kSerial, std::vector<SampleDisplacement>* recorder = nullptr);

/// The offset maps (2K^2 x h' x w') after clamping.
Tensor dsdcn_offsets(const Tensor& x, const DsdcnWeights& w, const DsdcnConfig& cfg);

struct EmbedBranch {
  DeformableEmbedConfig config;
  std::vector<DsdcnWeights> layers;  ///< config.depth entries
};

/// Runs every branch (each layer followed by Hardswish). Branch stack depths
/// must be strictly increasing and all outputs must share a spatial size.
/// kParallel evaluates branches concurrently; outputs keep branch order.
std::vector<Tensor> multi_scale_patch_embed(const Tensor& x, const std::vector<EmbedBranch>& branches,
                                            Exec exec = Exec::kSerial);

/// 8 D K^2 h w + D^2 h w.
std::uint64_t dsdcn_macs(std::uint64_t channels, std::uint64_t kernel, std::uint64_t h, std::uint64_t w);
/// 2 D K^4 h w + D^2 K^2 h w + 4 D K^2 h w.
std::uint64_t dcn_macs(std::uint64_t channels, std::uint64_t kernel, std::uint64_t h, std::uint64_t w);

}  // namespace mbtf
