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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mbtf/embedding.hpp"
#include "mbtf/model_config.hpp"
#include "mbtf/skff.hpp"
#include "mbtf/tmsa_block.hpp"

namespace mbtf {

class Rng;

/// Space-to-depth: out[c*r*r + dy*r + dx][y][x] = in[c][y*r + dy][x*r + dx].
Tensor pixel_unshuffle(const Tensor& x, std::size_t r);
/// Inverse of pixel_unshuffle.
Tensor pixel_shuffle(const Tensor& x, std::size_t r);

/// Per-pixel layer norm over the channel axis. An empty bias selects the
/// bias-free form x / sigma * weight (mean still removed from the variance).
struct NormWeights {
  Tensor weight;  ///< C
  Tensor bias;    ///< C or empty
};
inline constexpr double kNormEpsilon = 1e-5;
Tensor channel_layer_norm(const Tensor& x, const NormWeights& w);

/// Feed-forward replacement: 1x1 expand, parallel 3x3 / 5x5 depthwise
/// branches fused by SKFF, GELU, 1x1 project back.
struct FfnWeights {
  Tensor pw_in, pw_in_bias;  ///< H x C
  Tensor dw3, dw3_bias;      ///< H x 3 x 3
  Tensor dw5, dw5_bias;      ///< H x 5 x 5
  SkffWeights skff;          ///< over H channels, 2 branches
  Tensor pw_out, pw_out_bias;  ///< C x H
};
Tensor ffn_forward(const Tensor& x, const FfnWeights& w, Exec exec = Exec::kSerial);

struct BlockWeights {
  NormWeights norm1;
  TmsaWeights attn;
  NormWeights norm2;
  FfnWeights ffn;
};
/// x + attn(norm1(x)), then + ffn(norm2(.)).
Tensor transformer_block(const Tensor& x, const BlockWeights& w, const AttentionConfig& cfg,
                         Exec exec = Exec::kSerial);

struct BranchWeights {
  EmbedBranch embed;  ///< depth = branch index + 1
  std::vector<BlockWeights> blocks;
};

struct StageWeights {
  std::vector<BranchWeights> branches;
  std::optional<SkffWeights> fuse;  ///< present when there are >= 2 branches
};

struct ModelWeights {
  Tensor stem, stem_bias;              ///< C0 x in x k x k
  std::vector<StageWeights> stages;    ///< 8
  std::vector<Tensor> down, down_bias; ///< 3: C[s+1] x 4 C[s]
  std::vector<Tensor> up, up_bias;     ///< 3: 4 C[s] x width(s - 1), s = 4, 5, 6
  std::vector<Tensor> reduce, reduce_bias;  ///< 2: stages 4 and 5, C[s] x (C[s] + skip)
  Tensor final_conv, final_bias;       ///< in x width(7) x k x k
};

/// All-zero weights (norm scales 1, SKFF slopes and modulation at defaults).
/// The network then returns its input exactly.
ModelWeights make_model_weights(const ModelConfig& cfg);
/// Documented init: truncated-normal(0.02) projections, delta-centred
/// depthwise kernels, zero offset heads and biases.
ModelWeights init_model_weights(const ModelConfig& cfg, Rng& rng);

/// Visits every parameter tensor with a stable dotted name, in a fixed order.
/// Empty (absent) biases are skipped.
void for_each_param(ModelWeights& w, const std::function<void(const std::string&, Tensor&)>& fn);
void for_each_param(const ModelWeights& w,
                    const std::function<void(const std::string&, const Tensor&)>& fn);

struct ForwardOptions {
  Exec exec = Exec::kSerial;
  /// Nonzero: every stage evaluates its branches in an order shuffled from
  /// this seed. Fusion always consumes branches in index order, so the
  /// result must not change.
  std::uint64_t branch_order_seed = 0;
};

/// One stage: x + fuse(branch outputs), each branch = embed then blocks.
Tensor stage_forward(const Tensor& x, const StageWeights& w, const ModelConfig& cfg, std::size_t stage,
                     const ForwardOptions& opt = {});

/// image (in x h x w, h and w divisible by 8) -> image + R.
Tensor backbone_forward(const Tensor& image, const ModelWeights& w, const ModelConfig& cfg,
                        const ForwardOptions& opt = {});

/// Parameter count from shapes alone (no allocation).
std::uint64_t count_params(const ModelConfig& cfg);
std::uint64_t count_params(const ModelWeights& w);

/// Rough multiply-accumulate count of one forward pass at h x w. Published
/// counts rarely state their resolution, so callers pick one.
std::uint64_t model_macs(const ModelConfig& cfg, std::size_t h, std::size_t w);

}  // namespace mbtf
