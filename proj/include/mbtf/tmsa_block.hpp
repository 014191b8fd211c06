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

#include "mbtf/attention.hpp"
#include "mbtf/cpe.hpp"

namespace mbtf {

class Rng;

/// Parameters of one T-MSA++ layer acting on C channels.
struct TmsaWeights {
  Tensor qkv_pw;       ///< 3C x C, 1x1 projection to q, k, v
  Tensor qkv_pw_bias;  ///< 3C, empty when bias-free
  Tensor qkv_dw;       ///< 3C x 3 x 3 depthwise refinement of q, k, v
  Tensor qkv_dw_bias;  ///< 3C, empty when bias-free
  CpeWeights cpe;      ///< positional encoding on v (C channels)
  Tensor out_pw;       ///< C x C output projection
  Tensor out_pw_bias;  ///< C, empty when bias-free
  Tensor modulation;   ///< 1 value: learnable s

  std::size_t channels() const { return out_pw.dim(0); }
};

/// All-zero weights (modulation set from cfg).
TmsaWeights make_tmsa_weights(std::size_t channels, const AttentionConfig& cfg, bool bias);
/// q = k = v = x, delta depthwise kernels, zero CPE, identity output projection.
TmsaWeights identity_tmsa_weights(std::size_t channels, const AttentionConfig& cfg);
/// Truncated-normal(0.02) projections and CPE kernels, delta-centred
/// depthwise q/k/v kernels, zero biases.
TmsaWeights init_tmsa_weights(std::size_t channels, const AttentionConfig& cfg, bool bias, Rng& rng);

/// The projected q, k, v feature maps (each C x h x w) before the kernel.
struct QkvMaps {
  Tensor q, k, v;
};
QkvMaps project_qkv(const Tensor& x, const TmsaWeights& w, Exec exec = Exec::kSerial);

/// x: C x h x w. Projects to q, k, v, runs tmsa_linear per head on channel
/// slices of width cfg.head_dim, adds CPE(v), applies the output projection.
/// Heads are independent; kParallel evaluates them concurrently with
/// bit-identical results.
Tensor tmsa_pp_full(const Tensor& x, const TmsaWeights& w, const AttentionConfig& cfg,
                    Exec exec = Exec::kSerial);

}  // namespace mbtf
