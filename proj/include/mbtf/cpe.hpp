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

/// Convolutional positional encoding: channels are split into consecutive
/// groups, each group is convolved depthwise with its own odd kernel size
/// (zero padding, no bias) and the groups are concatenated back.
struct CpeWeights {
  std::vector<std::size_t> kernels;
  std::vector<Tensor> weights;  ///< group g: channels_g x k_g x k_g

  std::size_t channels() const;
};

/// Group sizes for splitting `channels` into `groups`: equal shares, with the
/// first group absorbing the remainder. Throws ShapeError if a group would
/// be empty.
std::vector<std::size_t> cpe_group_sizes(std::size_t channels, std::size_t groups);

CpeWeights make_cpe_weights(std::size_t channels, const std::vector<std::size_t>& kernels);
/// Every channel kernel is a centred delta, so cpe() returns its input.
CpeWeights make_delta_cpe(std::size_t channels, const std::vector<std::size_t>& kernels);

/// v: D x h x w -> D x h x w.
Tensor cpe(const Tensor& v, const CpeWeights& w);

/// Token-major variant: v is n x D with n = h * w.
Tensor cpe_tokens(const Tensor& v, std::size_t h, std::size_t w, const CpeWeights& weights);

struct CpeGradients {
  Tensor dv;                    ///< D x h x w
  std::vector<Tensor> dweights;
};

CpeGradients cpe_backward(const Tensor& v, const CpeWeights& w, const Tensor& grad_out);

/// n x n matrix M with (M v)_i = CPE(v)_i for channel `channel`, i.e. the
/// sparse token-mixing matrix of that channel's depthwise kernel.
Tensor cpe_token_matrix(const CpeWeights& w, std::size_t channel, std::size_t h, std::size_t width);

}  // namespace mbtf
