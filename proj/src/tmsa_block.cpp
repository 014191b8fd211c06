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

#include "mbtf/tmsa_block.hpp"

#include "mbtf/conv.hpp"
#include "mbtf/rng.hpp"

namespace mbtf {

TmsaWeights make_tmsa_weights(std::size_t channels, const AttentionConfig& cfg, bool bias) {
  TmsaWeights w;
  w.qkv_pw = Tensor({3 * channels, channels});
  w.qkv_dw = Tensor({3 * channels, 3, 3});
  w.cpe = make_cpe_weights(channels, cfg.cpe_kernels);
  w.out_pw = Tensor({channels, channels});
  if (bias) {
    w.qkv_pw_bias = Tensor({3 * channels});
    w.qkv_dw_bias = Tensor({3 * channels});
    w.out_pw_bias = Tensor({channels});
  }
  w.modulation = Tensor({1}, cfg.modulation);
  return w;
}

TmsaWeights identity_tmsa_weights(std::size_t channels, const AttentionConfig& cfg) {
  TmsaWeights w = make_tmsa_weights(channels, cfg, false);
  for (std::size_t part = 0; part < 3; ++part)
    for (std::size_t c = 0; c < channels; ++c) w.qkv_pw.at(part * channels + c, c) = 1.0;
  for (std::size_t c = 0; c < 3 * channels; ++c) w.qkv_dw.at(c, 1, 1) = 1.0;
  w.out_pw = Tensor::identity(channels);
  return w;
}

TmsaWeights init_tmsa_weights(std::size_t channels, const AttentionConfig& cfg, bool bias, Rng& rng) {
  TmsaWeights w = make_tmsa_weights(channels, cfg, bias);
  w.qkv_pw = rng.truncated_normal_tensor(w.qkv_pw.shape(), 0.02);
  w.qkv_dw = rng.truncated_normal_tensor(w.qkv_dw.shape(), 0.02);
  for (std::size_t c = 0; c < 3 * channels; ++c) w.qkv_dw.at(c, 1, 1) += 1.0;
  for (auto& k : w.cpe.weights) k = rng.truncated_normal_tensor(k.shape(), 0.02);
  w.out_pw = rng.truncated_normal_tensor(w.out_pw.shape(), 0.02);
  return w;
}

QkvMaps project_qkv(const Tensor& x, const TmsaWeights& w, Exec exec) {
  const std::size_t c = w.channels();
  const Tensor mixed = pointwise_conv(x, w.qkv_pw, w.qkv_pw_bias, exec);
  const Tensor qkv = depthwise_conv2d(mixed, w.qkv_dw, w.qkv_dw_bias, 1, exec);
  return {slice_channels(qkv, 0, c), slice_channels(qkv, c, c), slice_channels(qkv, 2 * c, c)};
}

Tensor tmsa_pp_full(const Tensor& x, const TmsaWeights& w, const AttentionConfig& cfg, Exec exec) {
  require_rank(x, 3, "tmsa_pp_full");
  const std::size_t c = x.dim(0);
  if (w.channels() != c) throw ShapeError("tmsa_pp_full: weights built for a different channel count");
  if (cfg.heads * cfg.head_dim != c) {
    throw ShapeError("tmsa_pp_full: heads x head_dim = " + std::to_string(cfg.heads * cfg.head_dim) +
                     " does not match " + std::to_string(c) + " channels");
  }
  require_finite(x, "tmsa_pp_full input");
  AttentionConfig head_cfg = cfg;
  head_cfg.modulation = w.modulation[0];

  const QkvMaps qkv = project_qkv(x, w, exec);
  Tensor attended(x.shape());
  const auto run_head = [&](std::size_t head) {
    const std::size_t first = head * cfg.head_dim;
    const QkvTriple t{to_tokens(qkv.q, first, cfg.head_dim), to_tokens(qkv.k, first, cfg.head_dim),
                      to_tokens(qkv.v, first, cfg.head_dim)};
    // Each head writes a disjoint channel range.
    from_tokens(tmsa_linear(t, head_cfg), attended, first);
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(cfg.heads); ++h) run_head(static_cast<std::size_t>(h));
  } else {
    for (std::size_t h = 0; h < cfg.heads; ++h) run_head(h);
  }
  add_inplace(attended, cpe(qkv.v, w.cpe));
  Tensor out = pointwise_conv(attended, w.out_pw, w.out_pw_bias, exec);
  require_finite(out, "tmsa_pp_full");
  return out;
}

}  // namespace mbtf
