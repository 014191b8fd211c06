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

#include <vector>

#include "mbtf/tensor.hpp"

namespace mbtf {

class Rng;

/// Selective kernel feature fusion: pooled descriptor of the summed branches
/// is squeezed to `reduced` channels (PReLU), expanded once per branch, and a
/// softmax across branches gives each channel a convex mix of the branches.
struct SkffWeights {
  Tensor squeeze;              ///< reduced x C
  Tensor prelu_slope;          ///< 1 value
  std::vector<Tensor> expand;  ///< per branch: C x reduced

  std::size_t channels() const { return squeeze.dim(1); }
  std::size_t branches() const { return expand.size(); }
};

/// max(C / reduction, 4).
std::size_t skff_reduced_channels(std::size_t channels, std::size_t reduction = 8);

SkffWeights make_skff_weights(std::size_t channels, std::size_t branches, std::size_t reduction = 8);
SkffWeights init_skff_weights(std::size_t channels, std::size_t branches, Rng& rng,
                              std::size_t reduction = 8);

/// branches x C matrix of per-channel mixing weights; columns sum to 1.
Tensor skff_branch_weights(const std::vector<Tensor>& feats, const SkffWeights& w);

/// Fuses >= 2 equally shaped C x h x w branch features.
Tensor skff_fuse(const std::vector<Tensor>& feats, const SkffWeights& w);

}  // namespace mbtf
