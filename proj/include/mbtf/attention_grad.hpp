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

namespace mbtf {

struct TmsaGradients {
  Tensor dq;
  Tensor dk;
  Tensor dv;
  double ds = 0.0;  ///< derivative with respect to the modulation factor s
};

/// Gradients of sum(upstream .* tmsa_linear(t, cfg)) with respect to the raw
/// q, k, v and to s. Flows through row normalisation and phi_p; the ReLU
/// subgradient at 0 is 0 and all-zero rows receive zero gradient.
TmsaGradients tmsa_grad(const QkvTriple& t, const AttentionConfig& cfg, const Tensor& upstream);

/// Vector-Jacobian product of normalize_rows.
Tensor normalize_rows_backward(const Tensor& x, const Tensor& grad_out);

/// Vector-Jacobian product of phi_p.
Tensor phi_p_backward(const Tensor& x, double p, PhiNorm norm, const Tensor& grad_out);

}  // namespace mbtf
