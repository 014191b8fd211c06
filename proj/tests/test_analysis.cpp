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

#include <cmath>

#include "doctest.h"
#include "mbtf/analysis.hpp"
#include "mbtf/attention.hpp"
#include "mbtf/cpe.hpp"
#include "mbtf/embedding.hpp"
#include "mbtf/rng.hpp"
#include "oracles.hpp"

using namespace mbtf;

TEST_CASE("attention cost formulas") {
  // Hand-evaluated: 2 * 256^2 * 8 + 4 * 256 * 64 and 8 * 256 * 64 + 4 * 9 * 256 * 8.
  CHECK(attention_macs(AttentionKind::kSoftmax, 16, 16, 8, 3) == 1114112u);
  CHECK(attention_macs(AttentionKind::kTmsa, 16, 16, 8, 3) == 204800u);
  CHECK(attention_macs(AttentionKind::kSoftmax, 1, 1, 1, 1) == 6u);
  CHECK(attention_macs(AttentionKind::kTmsa, 1, 1, 1, 1) == 12u);
  CHECK(parse_attention_kind("tmsa") == AttentionKind::kTmsa);
  CHECK_THROWS_AS(parse_attention_kind("flash"), std::invalid_argument);
  CHECK_THROWS_AS(attention_macs(AttentionKind::kTmsa, 0, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(attention_macs(AttentionKind::kSoftmax, 1u << 22, 1u << 22, 1u << 20, 1), std::overflow_error);

  // The quadratic term dominates once hw outgrows D.
  for (std::uint64_t side : {16u, 32u, 64u})
    CHECK(attention_macs(AttentionKind::kTmsa, side, side, 32, 3) <
          attention_macs(AttentionKind::kSoftmax, side, side, 32, 3));
}

TEST_CASE("log-log fit") {
  const std::vector<double> n{1, 10, 100, 1000};
  std::vector<double> t;
  for (double v : n) t.push_back(3.0 * v * v);
  const LogLogFit f = fit_loglog(n, t);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(f.residual < 1e-12);
  CHECK_THROWS_AS(fit_loglog({1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog({2.0, 2.0}, {1.0, 3.0}), std::invalid_argument);
}

TEST_CASE("benchmark harness") {
  const ScalingReport r = bench_scaling(BenchOp::kNoop, {64, 128, 256, 512}, 5);
  CHECK(r.points.size() == 4);
  for (const auto& p : r.points) CHECK(p.samples.size() == 5);
  CHECK(bench_op_name(parse_bench_op("tmsa_linear_omp")) == "tmsa_linear_omp");
  CHECK_THROWS_AS(parse_bench_op("fast"), std::invalid_argument);
  CHECK_THROWS_AS(bench_scaling(BenchOp::kNoop, {1, 2, 3}, 5), std::invalid_argument);
  CHECK_THROWS_AS(bench_scaling(BenchOp::kNoop, {1, 2, 2, 3}, 5), std::invalid_argument);
  CHECK_THROWS_AS(bench_scaling(BenchOp::kNoop, {1, 2, 3, 4}, 4), std::invalid_argument);
  CHECK_THROWS_AS(bench_scaling(BenchOp::kQuadraticOracle, {16, 32, 64, kQuadraticBenchGuard + 1}, 5), GuardError);

  const std::string csv = scaling_csv({r});
  CHECK(csv.rfind("op,head_dim,tokens,median_seconds", 0) == 0);
  CHECK(scaling_svg({r}).find("<svg") != std::string::npos);
  CHECK(timer_resolution() > 0.0);
}

TEST_CASE("rank report") {
  Rng rng(1);
  AttentionConfig cfg;
  cfg.head_dim = 2;
  const QkvTriple t{rng.normal_tensor({36, 2}), rng.normal_tensor({36, 2}), rng.normal_tensor({36, 2})};
  const RankReport none = measure_attention_rank(t, cfg, nullptr, 6, 6);
  CHECK(none.rank_kernel <= 5);
  CHECK(none.rank_with_cpe == none.rank_kernel);

  CpeWeights w = make_cpe_weights(2, {3});
  for (auto& k : w.weights) k = rng.normal_tensor(k.shape());
  const RankReport with = measure_attention_rank(t, cfg, &w, 6, 6);
  CHECK(with.rank_kernel == none.rank_kernel);
  CHECK(with.rank_with_cpe > with.rank_kernel);

  CHECK_THROWS_AS(measure_attention_rank(t, cfg, &w, 5, 6), ShapeError);
}

TEST_CASE("focusing probe") {
  const QkvTriple p = focusing_probe();
  CHECK(p.q.at(3, 1) == 0.9798);
  CHECK(p.k.at(2, 0) == -0.9798);
  CHECK(p.v == Tensor::identity(4));

  AttentionConfig on, off;
  on.head_dim = off.head_dim = 2;
  off.modulation = 0.0;
  const Tensor m_on = dense_attention_map(p, on), m_off = dense_attention_map(p, off);
  CHECK(oracle::row_entropy(m_on, 0) < oracle::row_entropy(m_off, 0));
  CHECK(mean_row_entropy(m_on) < mean_row_entropy(m_off));
  CHECK(*std::max_element(m_on.row(0).begin(), m_on.row(0).end()) >
        *std::max_element(m_off.row(0).begin(), m_off.row(0).end()));
}

TEST_CASE("influence radius follows the offset bound") {
  CHECK(dsdcn_influence_radius(2.0, 17, 1) == 3);
  CHECK(dsdcn_influence_radius(3.0, 17, 1) == 4);
  CHECK(dsdcn_influence_radius(0.0, 17, 1) == 1);
  CHECK(dsdcn_influence_radius(std::nullopt, 17, 1) > 4);
  CHECK_THROWS_AS(dsdcn_influence_radius(3.0, 8, 1), std::invalid_argument);
}

TEST_CASE("ablation table") {
  const auto rows = run_ablation(AblationSpec{});
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].axis == "baseline");
  for (const auto& r : rows) {
    if (r.oracle_error) CHECK(*r.oracle_error < 1e-9);
  }
  // Remainder off flattens the probe map; CPE off lowers the rank.
  CHECK(*rows[1].entropy > *rows[0].entropy);
  CHECK(*rows[2].rank < *rows[0].rank);
  // Max weight is non-decreasing in p.
  double last = 0.0;
  for (const auto& r : rows)
    if (r.axis == "focused_factor") {
      CHECK(*r.max_weight >= last);
      last = *r.max_weight;
    }
  for (const auto& r : rows)
    if (r.axis == "offset_bound" && r.setting == "3") CHECK(*r.window_9x9);

  const std::string csv = ablation_csv(rows, false);
  CHECK(csv.find("runtime") == std::string::npos);
  CHECK(csv == ablation_csv(run_ablation(AblationSpec{}), false));

  AblationSpec bad;
  bad.tokens = 10;
  CHECK_THROWS_AS(run_ablation(bad), std::invalid_argument);
}
