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
#include <optional>
#include <string>
#include <vector>

#include "mbtf/attention.hpp"
#include "mbtf/cpe.hpp"
#include "mbtf/model_config.hpp"

namespace mbtf {

// ---------------------------------------------------------------------------
// Cost formulas

enum class AttentionKind { kSoftmax, kTmsa };

/// Softmax: 2 (hw)^2 D + 4 hw D^2.   Focused Taylor: 8 hw D^2 + 4 K^2 hw D.
/// Overflow-checked integer arithmetic.
std::uint64_t attention_macs(AttentionKind kind, std::uint64_t h, std::uint64_t w, std::uint64_t d,
                             std::uint64_t k);
/// "softmax" or "tmsa"; throws std::invalid_argument otherwise.
AttentionKind parse_attention_kind(const std::string& name);

// ---------------------------------------------------------------------------
// Scaling benchmarks

enum class BenchOp {
  kTmsaLinear,          ///< linear kernel, serial
  kTmsaLinearParallel,  ///< linear kernel, OpenMP
  kSoftmaxOracle,
  kQuadraticOracle,
  kNoop,                ///< constant work regardless of n; harness self-test
};
std::string bench_op_name(BenchOp op);
BenchOp parse_bench_op(const std::string& name);

/// Largest n the quadratic ops accept in a benchmark.
inline constexpr std::size_t kQuadraticBenchGuard = 8192;

struct ScalingPoint {
  std::size_t tokens = 0;
  double median_seconds = 0.0;
  std::vector<double> samples;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< RMS of log-space residuals
};

struct ScalingReport {
  BenchOp op = BenchOp::kNoop;
  std::size_t head_dim = 0;
  std::vector<ScalingPoint> points;
  LogLogFit fit;
  /// Smallest median was under 100x the measured clock tick.
  bool coarse_timer = false;
};

/// Least squares on (log n, log t). Needs >= 2 points with positive values.
LogLogFit fit_loglog(const std::vector<double>& n, const std::vector<double>& t);

/// Times `op` at each size (strictly increasing, >= 4 sizes): one discarded
/// warm-up, then the median of `reps` (>= 5) runs on seeded random Q, K, V.
ScalingReport bench_scaling(BenchOp op, const std::vector<std::size_t>& sizes, std::size_t reps,
                            std::size_t head_dim = 16, std::uint64_t seed = 1);

/// Measured steady_clock tick in seconds.
double timer_resolution();

std::string scaling_csv(const std::vector<ScalingReport>& reports);
/// Log-log plot, one polyline per report.
std::string scaling_svg(const std::vector<ScalingReport>& reports);

/// Serial time / parallel-branch time of one backbone forward pass.
double measure_branch_speedup(const ModelConfig& cfg, std::size_t extent, std::size_t reps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Rank

inline constexpr std::size_t kRankGuard = 1024;

struct RankReport {
  std::size_t rank_kernel = 0;
  std::size_t rank_with_cpe = 0;
};

/// Rank of 1 + Q~K~^T + s phi phi^T, and of the same map plus the token
/// mixing matrix of CPE channel 0 on an h x w grid. `cpe_weights` null means
/// no CPE (both ranks equal).
RankReport measure_attention_rank(const QkvTriple& t, const AttentionConfig& cfg, const CpeWeights* cpe_weights,
                                  std::size_t h, std::size_t w, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Ablation

/// The five caption vectors of the mapping-function illustration.
struct FocusVectors {
  static constexpr double q[2] = {0.2, 0.9798};
  static constexpr double keys[4][2] = {{0.1, 0.995}, {0.9165, 0.4}, {-0.9798, -0.2}, {0.995, -0.1}};
};

/// Focusing probe: 4 identical query rows (the caption Q) against the four
/// caption keys; values are the 4 x 4 identity.
QkvTriple focusing_probe();

struct AblationSpec {
  bool remainder = true;         ///< row with s = 0
  bool cpe = true;               ///< rows with CPE on and off
  bool first_order_only = true;  ///< row through the first-order-only path
  std::vector<std::optional<double>> offset_bounds{std::nullopt, 2.0, 3.0, 4.0};
  std::vector<double> p_values{3.0, 4.0, 5.0, 8.0};
  std::size_t tokens = 64;  ///< random instance is 8 x 8 when 64
  std::size_t head_dim = 8;
  std::uint64_t seed = 1;
};

struct AblationRow {
  std::string axis;
  std::string setting;
  std::optional<double> oracle_error;   ///< linear vs quadratic, max abs
  std::optional<double> entropy;        ///< mean row entropy on the focusing probe
  std::optional<double> max_weight;     ///< max map entry on the focusing probe
  std::optional<std::size_t> rank;      ///< random instance, tol 1e-8
  std::optional<std::size_t> influence_radius;  ///< DSDCN probe, Chebyshev
  std::optional<bool> window_9x9;
  double runtime_seconds = 0.0;
};

std::vector<AblationRow> run_ablation(const AblationSpec& spec);
std::string ablation_csv(const std::vector<AblationRow>& rows, bool include_runtime = true);

/// Largest Chebyshev distance from the centre of a `size` x `size` map at
/// which perturbing one input pixel changes the centre output of a single
/// DSDCN layer (K = 3) whose offset head emits offsets of magnitude up to ~10.
std::size_t dsdcn_influence_radius(std::optional<double> bound, std::size_t size, std::uint64_t seed);

}  // namespace mbtf
