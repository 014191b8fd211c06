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

#include "mbtf/embedding.hpp"

#include <algorithm>

#include "mbtf/checked.hpp"
#include "mbtf/conv.hpp"
#include "mbtf/rng.hpp"

namespace mbtf {

void DsdcnConfig::validate() const {
  if (in_channels == 0 || out_channels == 0) throw ConfigError("dsdcn: channel counts must be positive");
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("dsdcn: kernel must be odd");
  if (stride != 1 && stride != 2) throw ConfigError("dsdcn: stride must be 1 or 2");
  if (offset_bound && !(*offset_bound >= 0.0)) throw ConfigError("dsdcn: offset bound must be >= 0");
}

DsdcnConfig DeformableEmbedConfig::layer(std::size_t index) const {
  DsdcnConfig c;
  c.in_channels = index == 0 ? in_channels : out_channels;
  c.out_channels = out_channels;
  c.kernel = kernel;
  c.offset_bound = offset_bound;
  c.stride = index == 0 ? stride : 1;
  return c;
}

DsdcnWeights make_dsdcn_weights(const DsdcnConfig& cfg) {
  cfg.validate();
  const std::size_t cin = cfg.in_channels, k = cfg.kernel, taps = k * k;
  return DsdcnWeights{Tensor({cin, k, k}),          Tensor({cin}),
                      Tensor({2 * taps, cin}),      Tensor({2 * taps}),
                      Tensor({cin, k, k}),          Tensor({cin}),
                      Tensor({cfg.out_channels, cin}), Tensor({cfg.out_channels})};
}

DsdcnWeights init_dsdcn_weights(const DsdcnConfig& cfg, Rng& rng) {
  DsdcnWeights w = make_dsdcn_weights(cfg);
  const std::size_t r = cfg.kernel / 2;
  w.value_dw = rng.truncated_normal_tensor(w.value_dw.shape(), 0.02);
  for (std::size_t c = 0; c < cfg.in_channels; ++c) w.value_dw.at(c, r, r) += 1.0;
  w.value_pw = rng.truncated_normal_tensor(w.value_pw.shape(), 0.02);
  return w;
}

namespace {

void check_weights(const Tensor& x, const DsdcnWeights& w, const DsdcnConfig& cfg) {
  cfg.validate();
  require_rank(x, 3, "dsdcn_forward");
  const std::size_t cin = cfg.in_channels, k = cfg.kernel, taps = k * k;
  if (x.dim(0) != cin) {
    throw ShapeError("dsdcn_forward: input has " + std::to_string(x.dim(0)) + " channels, layer expects " +
                     std::to_string(cin));
  }
  const auto expect = [](const Tensor& t, const Shape& s, const char* name) {
    if (t.shape() != s) {
      throw ShapeError(std::string("dsdcn weights: ") + name + " has shape " + shape_to_string(t.shape()) +
                       ", expected " + shape_to_string(s));
    }
  };
  expect(w.offset_dw, {cin, k, k}, "offset_dw");
  expect(w.offset_pw, {2 * taps, cin}, "offset_pw");
  expect(w.value_dw, {cin, k, k}, "value_dw");
  expect(w.value_pw, {cfg.out_channels, cin}, "value_pw");
}

}  // namespace

Tensor dsdcn_offsets(const Tensor& x, const DsdcnWeights& w, const DsdcnConfig& cfg) {
  check_weights(x, w, cfg);
  Tensor offsets = pointwise_conv(depthwise_conv2d(x, w.offset_dw, w.offset_dw_bias, cfg.stride),
                                  w.offset_pw, w.offset_pw_bias);
  if (cfg.offset_bound) {
    const double b = *cfg.offset_bound;
    for (auto& v : offsets.values()) v = std::clamp(v, -b, b);
  }
  return offsets;
}

Tensor dsdcn_forward(const Tensor& x, const DsdcnWeights& w, const DsdcnConfig& cfg, Exec exec,
                     std::vector<SampleDisplacement>* recorder) {
  const Tensor offsets = dsdcn_offsets(x, w, cfg);
  const std::size_t cin = cfg.in_channels, k = cfg.kernel;
  const std::size_t h = x.dim(1), width = x.dim(2);
  const std::size_t oh = offsets.dim(1), ow = offsets.dim(2);
  const double pad = static_cast<double>(k / 2);

  Tensor sampled({cin, oh, ow});
  const auto channel_body = [&](std::size_t c, std::vector<SampleDisplacement>* rec) {
    const auto plane = x.plane(c);
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = w.value_dw_bias.empty() ? 0.0 : w.value_dw_bias[c];
        for (std::size_t ky = 0; ky < k; ++ky)
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::size_t tap = ky * k + kx;
            const double dy = offsets.at(2 * tap, oy, ox);
            const double dx = offsets.at(2 * tap + 1, oy, ox);
            const double base_y = static_cast<double>(oy * cfg.stride + ky) - pad;
            const double base_x = static_cast<double>(ox * cfg.stride + kx) - pad;
            const double sy = base_y + dy, sx = base_x + dx;
            if (rec) rec->push_back({dy, dx});
            acc += w.value_dw.at(c, ky, kx) * bilinear_sample_plane(plane, h, width, sy, sx);
          }
        sampled.at(c, oy, ox) = acc;
      }
  };
  if (exec == Exec::kParallel && recorder == nullptr) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cin); ++c) channel_body(static_cast<std::size_t>(c), nullptr);
  } else {
    for (std::size_t c = 0; c < cin; ++c) channel_body(c, recorder);
  }
  Tensor out = pointwise_conv(sampled, w.value_pw, w.value_pw_bias, exec);
  require_finite(out, "dsdcn_forward");
  return out;
}

std::vector<Tensor> multi_scale_patch_embed(const Tensor& x, const std::vector<EmbedBranch>& branches,
                                            Exec exec) {
  if (branches.empty()) throw ConfigError("multi_scale_patch_embed: at least one branch required");
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const auto& br = branches[b];
    if (br.config.depth == 0 || br.layers.size() != br.config.depth) {
      throw ConfigError("multi_scale_patch_embed: branch " + std::to_string(b) + " has " +
                        std::to_string(br.layers.size()) + " layers for depth " + std::to_string(br.config.depth));
    }
    if (b > 0 && br.config.depth <= branches[b - 1].config.depth) {
      throw ConfigError("multi_scale_patch_embed: stack depths must be strictly increasing");
    }
  }

  std::vector<Tensor> outputs(branches.size());
  const auto run_branch = [&](std::size_t b) {
    const auto& br = branches[b];
    Tensor cur = x;
    for (std::size_t l = 0; l < br.config.depth; ++l) {
      cur = hardswish(dsdcn_forward(cur, br.layers[l], br.config.layer(l)));
    }
    outputs[b] = std::move(cur);
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(branches.size()); ++b) run_branch(static_cast<std::size_t>(b));
  } else {
    for (std::size_t b = 0; b < branches.size(); ++b) run_branch(b);
  }

  for (std::size_t b = 1; b < outputs.size(); ++b) {
    if (outputs[b].dim(1) != outputs[0].dim(1) || outputs[b].dim(2) != outputs[0].dim(2)) {
      throw ShapeError("multi_scale_patch_embed: branch " + std::to_string(b) + " output " +
                       shape_to_string(outputs[b].shape()) + " does not match branch 0 " +
                       shape_to_string(outputs[0].shape()));
    }
  }
  return outputs;
}

std::uint64_t dsdcn_macs(std::uint64_t d, std::uint64_t k, std::uint64_t h, std::uint64_t w) {
  if (d == 0 || k == 0 || h == 0 || w == 0) throw std::invalid_argument("dsdcn_macs: arguments must be positive");
  return checked_add(checked_product(8, d, k, k, h, w), checked_product(d, d, h, w));
}

std::uint64_t dcn_macs(std::uint64_t d, std::uint64_t k, std::uint64_t h, std::uint64_t w) {
  if (d == 0 || k == 0 || h == 0 || w == 0) throw std::invalid_argument("dcn_macs: arguments must be positive");
  return checked_add(checked_add(checked_product(2, d, k, k, k, k, h, w), checked_product(d, d, k, k, h, w)),
                     checked_product(4, d, k, k, h, w));
}

}  // namespace mbtf
