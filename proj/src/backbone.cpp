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

#include "mbtf/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mbtf/checked.hpp"
#include "mbtf/conv.hpp"
#include "mbtf/rng.hpp"

namespace mbtf {

Tensor pixel_unshuffle(const Tensor& x, std::size_t r) {
  require_rank(x, 3, "pixel_unshuffle");
  if (r == 0) throw ShapeError("pixel_unshuffle: factor must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % r != 0 || w % r != 0) {
    throw ShapeError("pixel_unshuffle: extent " + shape_to_string(x.shape()) + " not divisible by " +
                     std::to_string(r));
  }
  const std::size_t oh = h / r, ow = w / r;
  Tensor out({c * r * r, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t dy = 0; dy < r; ++dy)
      for (std::size_t dx = 0; dx < r; ++dx)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t xx = 0; xx < ow; ++xx)
            out.at(ch * r * r + dy * r + dx, y, xx) = x.at(ch, y * r + dy, xx * r + dx);
  return out;
}

Tensor pixel_shuffle(const Tensor& x, std::size_t r) {
  require_rank(x, 3, "pixel_shuffle");
  if (r == 0) throw ShapeError("pixel_shuffle: factor must be positive");
  if (x.dim(0) % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(x.dim(0)) + " channels not divisible by " +
                     std::to_string(r * r));
  }
  const std::size_t c = x.dim(0) / (r * r), h = x.dim(1), w = x.dim(2);
  Tensor out({c, h * r, w * r});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t dy = 0; dy < r; ++dy)
      for (std::size_t dx = 0; dx < r; ++dx)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx)
            out.at(ch, y * r + dy, xx * r + dx) = x.at(ch * r * r + dy * r + dx, y, xx);
  return out;
}

Tensor channel_layer_norm(const Tensor& x, const NormWeights& w) {
  require_rank(x, 3, "channel_layer_norm");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  if (w.weight.size() != c || (!w.bias.empty() && w.bias.size() != c)) {
    throw ShapeError("channel_layer_norm: weights do not match " + std::to_string(c) + " channels");
  }
  Tensor out(x.shape());
  const double* src = x.data();
  double* dst = out.data();
  for (std::size_t p = 0; p < hw; ++p) {
    double mean = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) mean += src[ch * hw + p];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double d = src[ch * hw + p] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + kNormEpsilon);
    for (std::size_t ch = 0; ch < c; ++ch) {
      if (w.bias.empty()) {
        dst[ch * hw + p] = src[ch * hw + p] * inv * w.weight[ch];
      } else {
        dst[ch * hw + p] = (src[ch * hw + p] - mean) * inv * w.weight[ch] + w.bias[ch];
      }
    }
  }
  return out;
}

Tensor ffn_forward(const Tensor& x, const FfnWeights& w, Exec exec) {
  const Tensor hidden = pointwise_conv(x, w.pw_in, w.pw_in_bias, exec);
  const std::vector<Tensor> branches{depthwise_conv2d(hidden, w.dw3, w.dw3_bias, 1, exec),
                                     depthwise_conv2d(hidden, w.dw5, w.dw5_bias, 1, exec)};
  return pointwise_conv(gelu(skff_fuse(branches, w.skff)), w.pw_out, w.pw_out_bias, exec);
}

Tensor transformer_block(const Tensor& x, const BlockWeights& w, const AttentionConfig& cfg, Exec exec) {
  Tensor y = add(x, tmsa_pp_full(channel_layer_norm(x, w.norm1), w.attn, cfg, exec));
  add_inplace(y, ffn_forward(channel_layer_norm(y, w.norm2), w.ffn, exec));
  return y;
}

// ---------------------------------------------------------------------------
// Weights

namespace {

Tensor maybe_bias(bool bias, std::size_t n) { return bias ? Tensor({n}) : Tensor(); }

DeformableEmbedConfig embed_config(const ModelConfig& cfg, std::size_t width, std::size_t branch) {
  DeformableEmbedConfig e;
  e.in_channels = width;
  e.out_channels = width;
  e.kernel = cfg.embed_kernel;
  e.depth = branch + 1;
  e.offset_bound = cfg.offset_bound;
  e.stride = 1;
  return e;
}

void strip_dsdcn_bias(DsdcnWeights& w) {
  w.offset_dw_bias = Tensor();
  w.offset_pw_bias = Tensor();
  w.value_dw_bias = Tensor();
  w.value_pw_bias = Tensor();
}

NormWeights make_norm(std::size_t c, bool bias) { return {Tensor({c}, 1.0), maybe_bias(bias, c)}; }

FfnWeights make_ffn(std::size_t c, const ModelConfig& cfg, bool bias) {
  const std::size_t h = c * cfg.ffn_expansion;
  FfnWeights f;
  f.pw_in = Tensor({h, c});
  f.pw_in_bias = maybe_bias(bias, h);
  f.dw3 = Tensor({h, 3, 3});
  f.dw3_bias = maybe_bias(bias, h);
  f.dw5 = Tensor({h, 5, 5});
  f.dw5_bias = maybe_bias(bias, h);
  f.skff = make_skff_weights(h, 2, cfg.skff_reduction);
  f.pw_out = Tensor({c, h});
  f.pw_out_bias = maybe_bias(bias, c);
  return f;
}

ModelWeights build(const ModelConfig& cfg, Rng* rng) {
  cfg.validate();
  const bool bias = !cfg.bias_free;
  const auto tn = [&](const Shape& s) { return rng ? rng->truncated_normal_tensor(s, 0.02) : Tensor(s); };
  const auto delta = [&](Tensor k) {
    if (rng) {
      const std::size_t r = k.dim(1) / 2;
      k = rng->truncated_normal_tensor(k.shape(), 0.02);
      for (std::size_t c = 0; c < k.dim(0); ++c) k.at(c, r, r) += 1.0;
    }
    return k;
  };
  const auto& ch = cfg.channels;
  const std::size_t ks = cfg.stem_kernel, kf = cfg.final_kernel;

  ModelWeights m;
  m.stem = tn({ch[0], cfg.in_channels, ks, ks});
  m.stem_bias = maybe_bias(bias, ch[0]);
  for (std::size_t s = 0; s < kStageCount; ++s) {
    const std::size_t width = cfg.stage_width(s);
    const AttentionConfig acfg = cfg.stage_attention(s);
    StageWeights st;
    for (std::size_t b = 0; b < cfg.branches[s]; ++b) {
      BranchWeights br;
      br.embed.config = embed_config(cfg, width, b);
      for (std::size_t l = 0; l < br.embed.config.depth; ++l) {
        const DsdcnConfig lc = br.embed.config.layer(l);
        DsdcnWeights dw = rng ? init_dsdcn_weights(lc, *rng) : make_dsdcn_weights(lc);
        if (!bias) strip_dsdcn_bias(dw);
        br.embed.layers.push_back(std::move(dw));
      }
      for (std::size_t k = 0; k < cfg.blocks[s]; ++k) {
        BlockWeights blk;
        blk.norm1 = make_norm(width, bias);
        blk.attn = rng ? init_tmsa_weights(width, acfg, bias, *rng) : make_tmsa_weights(width, acfg, bias);
        blk.norm2 = make_norm(width, bias);
        blk.ffn = make_ffn(width, cfg, bias);
        if (rng) {
          blk.ffn.pw_in = tn(blk.ffn.pw_in.shape());
          blk.ffn.dw3 = delta(blk.ffn.dw3);
          blk.ffn.dw5 = delta(blk.ffn.dw5);
          blk.ffn.skff = init_skff_weights(blk.ffn.pw_in.dim(0), 2, *rng, cfg.skff_reduction);
          blk.ffn.pw_out = tn(blk.ffn.pw_out.shape());
        }
        br.blocks.push_back(std::move(blk));
      }
      st.branches.push_back(std::move(br));
    }
    if (cfg.branches[s] >= 2) {
      st.fuse = rng ? init_skff_weights(width, cfg.branches[s], *rng, cfg.skff_reduction)
                    : make_skff_weights(width, cfg.branches[s], cfg.skff_reduction);
    }
    m.stages.push_back(std::move(st));
  }
  for (std::size_t s = 0; s < 3; ++s) {
    m.down.push_back(tn({ch[s + 1], 4 * ch[s]}));
    m.down_bias.push_back(maybe_bias(bias, ch[s + 1]));
  }
  for (std::size_t s = 4; s <= 6; ++s) {
    m.up.push_back(tn({4 * ch[s], cfg.stage_width(s - 1)}));
    m.up_bias.push_back(maybe_bias(bias, 4 * ch[s]));
  }
  for (std::size_t s = 4; s <= 5; ++s) {
    m.reduce.push_back(tn({ch[s], ch[s] + ch[6 - s]}));
    m.reduce_bias.push_back(maybe_bias(bias, ch[s]));
  }
  m.final_conv = tn({cfg.in_channels, cfg.stage_width(7), kf, kf});
  m.final_bias = maybe_bias(bias, cfg.in_channels);
  return m;
}

template <class W, class T, class Fn>
void visit(W& m, Fn&& fn) {
  const auto put = [&](const std::string& name, T& t) {
    if (!t.empty()) fn(name, t);
  };
  const auto norm = [&](const std::string& p, auto& n) {
    put(p + ".weight", n.weight);
    put(p + ".bias", n.bias);
  };
  const auto skff = [&](const std::string& p, auto& k) {
    put(p + ".squeeze", k.squeeze);
    put(p + ".prelu_slope", k.prelu_slope);
    for (std::size_t b = 0; b < k.expand.size(); ++b) put(p + ".expand" + std::to_string(b), k.expand[b]);
  };
  put("stem", m.stem);
  put("stem_bias", m.stem_bias);
  for (std::size_t s = 0; s < m.stages.size(); ++s) {
    auto& st = m.stages[s];
    const std::string sp = "stage" + std::to_string(s);
    for (std::size_t b = 0; b < st.branches.size(); ++b) {
      auto& br = st.branches[b];
      const std::string bp = sp + ".branch" + std::to_string(b);
      for (std::size_t l = 0; l < br.embed.layers.size(); ++l) {
        auto& d = br.embed.layers[l];
        const std::string lp = bp + ".embed" + std::to_string(l);
        put(lp + ".offset_dw", d.offset_dw);
        put(lp + ".offset_dw_bias", d.offset_dw_bias);
        put(lp + ".offset_pw", d.offset_pw);
        put(lp + ".offset_pw_bias", d.offset_pw_bias);
        put(lp + ".value_dw", d.value_dw);
        put(lp + ".value_dw_bias", d.value_dw_bias);
        put(lp + ".value_pw", d.value_pw);
        put(lp + ".value_pw_bias", d.value_pw_bias);
      }
      for (std::size_t k = 0; k < br.blocks.size(); ++k) {
        auto& blk = br.blocks[k];
        const std::string kp = bp + ".block" + std::to_string(k);
        norm(kp + ".norm1", blk.norm1);
        put(kp + ".attn.qkv_pw", blk.attn.qkv_pw);
        put(kp + ".attn.qkv_pw_bias", blk.attn.qkv_pw_bias);
        put(kp + ".attn.qkv_dw", blk.attn.qkv_dw);
        put(kp + ".attn.qkv_dw_bias", blk.attn.qkv_dw_bias);
        for (std::size_t g = 0; g < blk.attn.cpe.weights.size(); ++g) {
          put(kp + ".attn.cpe" + std::to_string(g), blk.attn.cpe.weights[g]);
        }
        put(kp + ".attn.out_pw", blk.attn.out_pw);
        put(kp + ".attn.out_pw_bias", blk.attn.out_pw_bias);
        put(kp + ".attn.modulation", blk.attn.modulation);
        norm(kp + ".norm2", blk.norm2);
        put(kp + ".ffn.pw_in", blk.ffn.pw_in);
        put(kp + ".ffn.pw_in_bias", blk.ffn.pw_in_bias);
        put(kp + ".ffn.dw3", blk.ffn.dw3);
        put(kp + ".ffn.dw3_bias", blk.ffn.dw3_bias);
        put(kp + ".ffn.dw5", blk.ffn.dw5);
        put(kp + ".ffn.dw5_bias", blk.ffn.dw5_bias);
        skff(kp + ".ffn.skff", blk.ffn.skff);
        put(kp + ".ffn.pw_out", blk.ffn.pw_out);
        put(kp + ".ffn.pw_out_bias", blk.ffn.pw_out_bias);
      }
    }
    if (st.fuse) skff(sp + ".fuse", *st.fuse);
  }
  for (std::size_t i = 0; i < m.down.size(); ++i) {
    put("down" + std::to_string(i), m.down[i]);
    put("down" + std::to_string(i) + "_bias", m.down_bias[i]);
  }
  for (std::size_t i = 0; i < m.up.size(); ++i) {
    put("up" + std::to_string(i), m.up[i]);
    put("up" + std::to_string(i) + "_bias", m.up_bias[i]);
  }
  for (std::size_t i = 0; i < m.reduce.size(); ++i) {
    put("reduce" + std::to_string(i), m.reduce[i]);
    put("reduce" + std::to_string(i) + "_bias", m.reduce_bias[i]);
  }
  put("final_conv", m.final_conv);
  put("final_bias", m.final_bias);
}

}  // namespace

ModelWeights make_model_weights(const ModelConfig& cfg) { return build(cfg, nullptr); }

ModelWeights init_model_weights(const ModelConfig& cfg, Rng& rng) { return build(cfg, &rng); }

void for_each_param(ModelWeights& w, const std::function<void(const std::string&, Tensor&)>& fn) {
  visit<ModelWeights, Tensor>(w, fn);
}

void for_each_param(const ModelWeights& w,
                    const std::function<void(const std::string&, const Tensor&)>& fn) {
  visit<const ModelWeights, const Tensor>(w, fn);
}

// ---------------------------------------------------------------------------
// Forward

Tensor stage_forward(const Tensor& x, const StageWeights& w, const ModelConfig& cfg, std::size_t stage,
                     const ForwardOptions& opt) {
  require_rank(x, 3, "stage_forward");
  if (x.dim(0) != cfg.stage_width(stage)) {
    throw ShapeError("stage " + std::to_string(stage) + ": input has " + std::to_string(x.dim(0)) +
                     " channels, expected " + std::to_string(cfg.stage_width(stage)));
  }
  const std::size_t nb = w.branches.size();
  const AttentionConfig acfg = cfg.stage_attention(stage);
  std::vector<Tensor> outputs(nb);
  const auto run_branch = [&](std::size_t b, Exec inner) {
    const auto& br = w.branches[b];
    Tensor cur = multi_scale_patch_embed(x, {br.embed}, inner).front();
    for (const auto& blk : br.blocks) cur = transformer_block(cur, blk, acfg, inner);
    outputs[b] = std::move(cur);
  };

  std::vector<std::size_t> order(nb);
  std::iota(order.begin(), order.end(), 0);
  if (opt.branch_order_seed != 0) {
    Rng rng(opt.branch_order_seed + stage);
    for (std::size_t i = nb; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  }
  if (opt.exec == Exec::kParallel && nb > 1) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nb); ++i) {
      run_branch(order[static_cast<std::size_t>(i)], Exec::kSerial);
    }
  } else {
    for (std::size_t b : order) run_branch(b, opt.exec);
  }

  Tensor fused = nb >= 2 ? skff_fuse(outputs, *w.fuse) : std::move(outputs[0]);
  add_inplace(fused, x);
  return fused;
}

Tensor backbone_forward(const Tensor& image, const ModelWeights& w, const ModelConfig& cfg,
                        const ForwardOptions& opt) {
  require_rank(image, 3, "backbone_forward");
  require_finite(image, "backbone_forward input");
  if (image.dim(0) != cfg.in_channels) {
    throw ShapeError("backbone_forward: image has " + std::to_string(image.dim(0)) + " channels, config expects " +
                     std::to_string(cfg.in_channels));
  }
  if (image.dim(1) % 8 != 0 || image.dim(2) % 8 != 0) {
    throw ShapeError("backbone_forward: spatial size " + std::to_string(image.dim(1)) + "x" +
                     std::to_string(image.dim(2)) + " must be divisible by 8");
  }
  if (w.stages.size() != kStageCount) throw ShapeError("backbone_forward: weights do not hold 8 stages");
  const Exec ex = opt.exec;

  std::vector<Tensor> skips;
  Tensor x = conv2d(image, w.stem, w.stem_bias, 1, ex);
  for (std::size_t s = 0; s < 4; ++s) {
    x = stage_forward(x, w.stages[s], cfg, s, opt);
    if (s < 3) {
      skips.push_back(x);
      x = pointwise_conv(pixel_unshuffle(x, 2), w.down[s], w.down_bias[s], ex);
    }
  }
  for (std::size_t s = 4; s <= 6; ++s) {
    const std::size_t i = s - 4;
    const Tensor up = pixel_shuffle(pointwise_conv(x, w.up[i], w.up_bias[i], ex), 2);
    const Tensor parts[2] = {up, skips[6 - s]};
    x = concat_channels(parts);
    if (s < 6) x = pointwise_conv(x, w.reduce[i], w.reduce_bias[i], ex);
    x = stage_forward(x, w.stages[s], cfg, s, opt);
  }
  x = stage_forward(x, w.stages[7], cfg, 7, opt);
  Tensor out = add(image, conv2d(x, w.final_conv, w.final_bias, 1, ex));
  require_finite(out, "backbone_forward");
  return out;
}

// ---------------------------------------------------------------------------
// Counting

namespace {

using u64 = std::uint64_t;

u64 dsdcn_params(u64 cin, u64 cout, u64 k, bool bias) {
  const u64 b = bias ? 1 : 0;
  return checked_add(checked_product(2, cin, k, k), checked_product(2, k, k, cin)) +
         checked_mul(cout, cin) + b * (2 * cin + 2 * k * k + cout);
}

u64 skff_params(u64 c, u64 branches, u64 reduction) {
  const u64 d = skff_reduced_channels(c, reduction);
  return checked_add(checked_mul(d, c) + 1, checked_product(branches, c, d));
}

u64 block_params(u64 c, const ModelConfig& cfg, bool bias) {
  const u64 b = bias ? 1 : 0;
  u64 total = 2 * (c + b * c);  // two norms
  // Attention: qkv 1x1 + 3x3 depthwise, CPE groups, output 1x1, s.
  total += 3 * c * c + b * 3 * c + 3 * c * 9 + b * 3 * c;
  const auto groups = cpe_group_sizes(c, cfg.attention.cpe_kernels.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    total += groups[g] * cfg.attention.cpe_kernels[g] * cfg.attention.cpe_kernels[g];
  }
  total += c * c + b * c + 1;
  const u64 h = c * cfg.ffn_expansion;
  total += h * c + b * h + 9 * h + b * h + 25 * h + b * h;
  total += skff_params(h, 2, cfg.skff_reduction);
  total += c * h + b * c;
  return total;
}

}  // namespace

std::uint64_t count_params(const ModelConfig& cfg) {
  cfg.validate();
  const bool bias = !cfg.bias_free;
  const u64 b = bias ? 1 : 0;
  const auto& ch = cfg.channels;
  u64 total = checked_product(ch[0], cfg.in_channels, cfg.stem_kernel, cfg.stem_kernel) + b * ch[0];
  for (std::size_t s = 0; s < kStageCount; ++s) {
    const u64 width = cfg.stage_width(s);
    for (std::size_t br = 0; br < cfg.branches[s]; ++br) {
      total = checked_add(total, checked_mul(br + 1, dsdcn_params(width, width, cfg.embed_kernel, bias)));
    }
    total = checked_add(total, checked_product(cfg.branches[s], cfg.blocks[s], block_params(width, cfg, bias)));
    if (cfg.branches[s] >= 2) total = checked_add(total, skff_params(width, cfg.branches[s], cfg.skff_reduction));
  }
  for (std::size_t s = 0; s < 3; ++s) total += 4 * ch[s] * ch[s + 1] + b * ch[s + 1];
  for (std::size_t s = 4; s <= 6; ++s) total += 4 * ch[s] * cfg.stage_width(s - 1) + b * 4 * ch[s];
  for (std::size_t s = 4; s <= 5; ++s) total += ch[s] * (ch[s] + ch[6 - s]) + b * ch[s];
  total += checked_product(cfg.in_channels, cfg.stage_width(7), cfg.final_kernel, cfg.final_kernel) +
           b * cfg.in_channels;
  return total;
}

std::uint64_t count_params(const ModelWeights& w) {
  u64 total = 0;
  for_each_param(w, [&](const std::string&, const Tensor& t) { total += t.size(); });
  return total;
}

std::uint64_t model_macs(const ModelConfig& cfg, std::size_t h, std::size_t w) {
  cfg.validate();
  if (h == 0 || w == 0 || h % 8 != 0 || w % 8 != 0) {
    throw std::invalid_argument("model_macs: resolution must be positive and divisible by 8");
  }
  const auto& ch = cfg.channels;
  // Resolution level of each stage: encoder 0..3, decoder 2..0, refinement 0.
  const auto level = [](std::size_t s) -> std::size_t { return s <= 3 ? s : (s <= 6 ? 6 - s : 0); };
  const auto level_hw = [&](std::size_t s) -> u64 {
    return static_cast<u64>(h >> level(s)) * static_cast<u64>(w >> level(s));
  };
  u64 total = checked_product(h, w, ch[0], cfg.in_channels, cfg.stem_kernel, cfg.stem_kernel);
  for (std::size_t s = 0; s < kStageCount; ++s) {
    const u64 c = cfg.stage_width(s), n = level_hw(s), k = cfg.embed_kernel;
    const AttentionConfig a = cfg.stage_attention(s);
    const u64 dh = a.head_dim, hidden = c * cfg.ffn_expansion;
    u64 block = 0;
    block += checked_product(3, c, c, n) + checked_product(27, c, n);   // qkv
    block += checked_product(8, n, dh, dh, a.heads);                    // linear attention accumulators + queries
    for (std::size_t g = 0; g < cfg.attention.cpe_kernels.size(); ++g) {
      const u64 kg = cfg.attention.cpe_kernels[g];
      block += checked_product(cpe_group_sizes(c, cfg.attention.cpe_kernels.size())[g], kg, kg, n);
    }
    block += checked_product(c, c, n);                                   // output projection
    block += checked_product(2, hidden, c, n) + checked_product(34, hidden, n);  // ffn
    for (std::size_t br = 0; br < cfg.branches[s]; ++br) {
      total = checked_add(total, checked_mul(br + 1, dsdcn_macs(c, k, h >> level(s), w >> level(s))));
      total = checked_add(total, checked_mul(cfg.blocks[s], block));
    }
  }
  for (std::size_t s = 0; s < 3; ++s) total += checked_product(4, ch[s], ch[s + 1], level_hw(s + 1));
  for (std::size_t s = 4; s <= 6; ++s) total += checked_product(4, ch[s], cfg.stage_width(s - 1), level_hw(s - 1));
  for (std::size_t s = 4; s <= 5; ++s) total += checked_product(ch[s], ch[s] + ch[6 - s], level_hw(s));
  total += checked_product(h, w, cfg.in_channels, cfg.stage_width(7), cfg.final_kernel, cfg.final_kernel);
  return total;
}

}  // namespace mbtf
