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

#include <cstddef>
#include <limits>
#include <vector>

#include "mbtf/linalg.hpp"
#include "mbtf/tensor.hpp"

namespace mbtf {

/// Which norm the focused mapping restores after ReLU + elementwise power.
enum class PhiNorm {
  kInput,  ///< ||phi_p(x)|| = ||x||; on unit rows this is normalize(ReLU(x)^p)
  kRelu,   ///< ||phi_p(x)|| = ||ReLU(x)||
};

struct AttentionConfig {
  std::size_t heads = 1;
  std::size_t head_dim = 8;
  double focused_factor = 4.0;  ///< p >= 1
  double modulation = 0.5;      ///< s >= 0, learnable per layer
  double epsilon = 1e-6;        ///< denominator guard
  std::vector<std::size_t> cpe_kernels{3, 5};
  PhiNorm phi_norm = PhiNorm::kInput;

  /// Throws ConfigError on p < 1, s < 0, epsilon <= 0 or even/empty CPE kernels.
  void validate() const;
};

/// Per-head token matrices, each n x D (values may have their own width).
struct QkvTriple {
  Tensor q;
  Tensor k;
  Tensor v;

  std::size_t tokens() const { return q.dim(0); }
  /// Throws ShapeError unless q, k are n x D and v is n x Dv with n >= 1.
  void validate() const;
};

/// Counts near-degenerate denominators seen by the linear kernel.
struct AttentionDiagnostics {
  std::size_t low_denominators = 0;  ///< rows with denominator < 10 * epsilon
  double min_denominator = std::numeric_limits<double>::infinity();
};

/// Row-wise focused mapping: ReLU, elementwise power p, rescale so the row
/// norm matches `norm`. Rows whose ReLU is zero map to zero.
Tensor phi_p(const Tensor& x, double p, PhiNorm norm = PhiNorm::kInput);

/// Row softmax(Q K^T / sqrt(D)) V by the direct O(n^2) method.
Tensor softmax_attention_oracle(const QkvTriple& t);

/// Focused Taylor attention evaluated pair by pair in O(n^2):
///   w_ij = (1 + q_i.k_j + s phi(q_i).phi(k_j)) / (sum_j (...) + eps)
/// with q, k row-normalised first. Reference for tmsa_linear.
Tensor tmsa_quadratic_oracle(const QkvTriple& t, const AttentionConfig& cfg);

/// First-order-only linear path (no remainder term).
Tensor first_order_linear(const QkvTriple& t, const AttentionConfig& cfg, Exec exec = Exec::kSerial);

/// Linear-time focused Taylor attention. Accumulates sum K~^T V, sum K~,
/// sum phi(K~)^T V, sum phi(K~) and sum V once, then evaluates each query
/// row against them. O(n D^2).
///
/// Throws NumericError when a denominator falls below epsilon.
Tensor tmsa_linear(const QkvTriple& t, const AttentionConfig& cfg, Exec exec = Exec::kSerial,
                   AttentionDiagnostics* diag = nullptr);

inline constexpr std::size_t kDenseMapGuard = 4096;

/// Materialised normalised weights w_ij (n x n). Rows sum to 1 up to the
/// epsilon perturbation. Throws GuardError above kDenseMapGuard tokens.
Tensor dense_attention_map(const QkvTriple& t, const AttentionConfig& cfg, bool include_first_order = true,
                           bool include_remainder = true);

/// Un-normalised kernel map 1 + Q~K~^T + s phi(Q~) phi(K~)^T. Same rank as
/// the normalised map since the denominator only scales rows.
Tensor simplified_attention_map(const QkvTriple& t, const AttentionConfig& cfg);

/// Mean Shannon entropy (nats) of the rows of a row-stochastic map.
double mean_row_entropy(const Tensor& map);

namespace fault {

enum class Fault { kNone, kPhiSign };

/// Test hook for verification self-tests: kPhiSign negates phi_p outputs.
void inject(Fault f);
Fault active();

}  // namespace fault

}  // namespace mbtf
