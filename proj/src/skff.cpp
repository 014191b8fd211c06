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

#include "mbtf/skff.hpp"

#include <algorithm>
#include <cmath>

#include "mbtf/rng.hpp"

namespace mbtf {

std::size_t skff_reduced_channels(std::size_t channels, std::size_t reduction) {
  return std::max<std::size_t>(channels / reduction, 4);
}

SkffWeights make_skff_weights(std::size_t channels, std::size_t branches, std::size_t reduction) {
  const std::size_t d = skff_reduced_channels(channels, reduction);
  SkffWeights w;
  w.squeeze = Tensor({d, channels});
  w.prelu_slope = Tensor({1}, 0.25);
  for (std::size_t b = 0; b < branches; ++b) w.expand.emplace_back(Shape{channels, d});
  return w;
}

SkffWeights init_skff_weights(std::size_t channels, std::size_t branches, Rng& rng, std::size_t reduction) {
  SkffWeights w = make_skff_weights(channels, branches, reduction);
  w.squeeze = rng.truncated_normal_tensor(w.squeeze.shape(), 0.02);
  for (auto& e : w.expand) e = rng.truncated_normal_tensor(e.shape(), 0.02);
  return w;
}

Tensor skff_branch_weights(const std::vector<Tensor>& feats, const SkffWeights& w) {
  if (feats.size() < 2) throw ShapeError("skff: at least two branches required");
  if (feats.size() != w.branches()) {
    throw ShapeError("skff: weights expect " + std::to_string(w.branches()) + " branches, got " +
                     std::to_string(feats.size()));
  }
  for (const auto& f : feats) {
    require_rank(f, 3, "skff");
    require_same_shape(f, feats[0], "skff branches");
  }
  const std::size_t c = feats[0].dim(0), hw = feats[0].dim(1) * feats[0].dim(2);
  if (c != w.channels()) throw ShapeError("skff: channel count does not match weights");
  const std::size_t d = w.squeeze.dim(0), nb = feats.size();

  std::vector<double> pooled(c, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (const auto& f : feats)
      for (double v : f.plane(ch)) acc += v;
    pooled[ch] = acc / static_cast<double>(hw);
  }
  std::vector<double> z(d, 0.0);
  const double slope = w.prelu_slope[0];
  for (std::size_t r = 0; r < d; ++r) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < c; ++ch) acc += w.squeeze.at(r, ch) * pooled[ch];
    z[r] = acc >= 0.0 ? acc : slope * acc;
  }
  Tensor logits({nb, c});
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (std::size_t r = 0; r < d; ++r) acc += w.expand[b].at(ch, r) * z[r];
      logits.at(b, ch) = acc;
    }
  for (std::size_t ch = 0; ch < c; ++ch) {
    double peak = -INFINITY;
    for (std::size_t b = 0; b < nb; ++b) peak = std::max(peak, logits.at(b, ch));
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      logits.at(b, ch) = std::exp(logits.at(b, ch) - peak);
      total += logits.at(b, ch);
    }
    for (std::size_t b = 0; b < nb; ++b) logits.at(b, ch) /= total;
  }
  return logits;
}

Tensor skff_fuse(const std::vector<Tensor>& feats, const SkffWeights& w) {
  const Tensor mix = skff_branch_weights(feats, w);
  Tensor out(feats[0].shape());
  for (std::size_t ch = 0; ch < out.dim(0); ++ch) {
    auto dst = out.plane(ch);
    for (std::size_t b = 0; b < feats.size(); ++b) {
      const double a = mix.at(b, ch);
      const auto src = feats[b].plane(ch);
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += a * src[t];
    }
  }
  require_finite(out, "skff_fuse");
  return out;
}

}  // namespace mbtf
