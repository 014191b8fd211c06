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

// Seeded property sweeps. Each case draws many random instances and checks
// a structural law rather than a single value.

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "mbtf/analysis.hpp"
#include "mbtf/attention.hpp"
#include "mbtf/backbone.hpp"
#include "mbtf/cpe.hpp"
#include "mbtf/embedding.hpp"
#include "mbtf/linalg.hpp"
#include "mbtf/rng.hpp"
#include "mbtf/skff.hpp"
#include "mbtf/training.hpp"
#include "mbtf/verify.hpp"

using namespace mbtf;

namespace {

AttentionConfig random_config(Rng& rng, std::size_t d) {
  AttentionConfig cfg;
  cfg.head_dim = d;
  cfg.focused_factor = 1.0 + 7.0 * rng.uniform();
  cfg.modulation = 2.0 * rng.uniform();
  return cfg;
}

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) out.at(i, j) = t.at(perm[i], j);
  return out;
}

}  // namespace

TEST_CASE("matmul is associative to rounding") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = rng.normal_tensor({32, 16}, 0.25), b = rng.normal_tensor({16, 16}, 0.25),
                 c = rng.normal_tensor({16, 32}, 0.25);
    CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-10);
  }
}

TEST_CASE("row normalisation is idempotent and rank ignores row order") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = rng.normal_tensor({1 + rng.index(20), 1 + rng.index(8)});
    const Tensor y = normalize_rows(x);
    CHECK(max_abs_diff(normalize_rows(y), y) < 1e-12);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t r = 1 + rng.index(5);
    const Tensor m = matmul(rng.normal_tensor({12, r}), rng.normal_tensor({r, 10}));
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 12; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    CHECK(rank_estimate(permute_rows(m, perm)) == rank_estimate(m));
  }
}

TEST_CASE("rng draws are reproducible") {
  Rng a(77), b(77);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.normal() == b.normal());
}

TEST_CASE("kernel laws over random instances") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.index(64), d = 1 + rng.index(8);
    const AttentionConfig cfg = random_config(rng, d);
    const QkvTriple t{rng.normal_tensor({n, d}), rng.normal_tensor({n, d}), rng.normal_tensor({n, d})};
    const Tensor out = tmsa_linear(t, cfg);

    // Linear and quadratic forms agree.
    CHECK(max_abs_diff(out, tmsa_quadratic_oracle(t, cfg)) < 1e-9);

    // Rows are nonnegative and sum to mass / (mass + eps).
    const Tensor m = dense_attention_map(t, cfg), raw = simplified_attention_map(t, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0, mass = 0.0;
      for (double v : m.row(i)) {
        CHECK(v >= 0.0);
        s += v;
      }
      for (double v : raw.row(i)) mass += v;
      CHECK(std::abs(s - mass / (mass + cfg.epsilon)) < 1e-12);
    }

    // Token order does not matter beyond permuting the output.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    const QkvTriple pt{permute_rows(t.q, perm), permute_rows(t.k, perm), permute_rows(t.v, perm)};
    CHECK(max_abs_diff(tmsa_linear(pt, cfg), permute_rows(out, perm)) < 1e-12);

    // Queries and keys enter only through their directions.
    const QkvTriple scaled{scale(t.q, 3.5), scale(t.k, 0.2), t.v};
    CHECK(max_abs_diff(tmsa_linear(scaled, cfg), out) < 1e-12);

    // Rank bound of the kernel-only map.
    if (n > 2 * d + 1) CHECK(rank_estimate(simplified_attention_map(t, cfg)) <= 2 * d + 1);
  }
}

TEST_CASE("mapping preserves row norms") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = rng.normal_tensor({10, 1 + rng.index(8)});
    const double p = 1.0 + 7.0 * rng.uniform();
    const Tensor a = phi_p(x, p, PhiNorm::kInput), b = phi_p(x, p, PhiNorm::kRelu);
    for (std::size_t i = 0; i < 10; ++i) {
      double nx = 0.0, nr = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t j = 0; j < x.dim(1); ++j) {
        nx += x.at(i, j) * x.at(i, j);
        nr += std::max(x.at(i, j), 0.0) * std::max(x.at(i, j), 0.0);
        na += a.at(i, j) * a.at(i, j);
        nb += b.at(i, j) * b.at(i, j);
      }
      if (nr == 0.0) {
        CHECK(na == 0.0);
        continue;
      }
      CHECK(std::abs(std::sqrt(na) - std::sqrt(nx)) < 1e-12);
      CHECK(std::abs(std::sqrt(nb) - std::sqrt(nr)) < 1e-12);
    }
  }
}

TEST_CASE("positional encoding does not lower the rank") {
  Rng rng(5);
  std::size_t not_lower = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + rng.index(3);
    AttentionConfig cfg;
    cfg.head_dim = d;
    const QkvTriple t{rng.normal_tensor({36, d}), rng.normal_tensor({36, d}), rng.normal_tensor({36, d})};
    CpeWeights w = make_cpe_weights(d, {3});
    for (auto& k : w.weights) k = rng.normal_tensor(k.shape());
    const RankReport r = measure_attention_rank(t, cfg, &w, 6, 6);
    CHECK(r.rank_kernel <= 2 * d + 1);
    if (r.rank_with_cpe >= r.rank_kernel) ++not_lower;
  }
  CHECK(not_lower >= 19);
}

TEST_CASE("offset clamping holds for any weights") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    DsdcnConfig cfg;
    cfg.in_channels = 1 + rng.index(3);
    cfg.out_channels = 1 + rng.index(3);
    cfg.offset_bound = 0.5 + 4.0 * rng.uniform();
    cfg.stride = 1 + rng.index(2);
    DsdcnWeights w = make_dsdcn_weights(cfg);
    w.offset_dw = rng.normal_tensor(w.offset_dw.shape());
    w.offset_pw = rng.normal_tensor(w.offset_pw.shape(), 10.0);
    w.offset_pw_bias = rng.normal_tensor(w.offset_pw_bias.shape(), 10.0);
    w.value_dw = rng.normal_tensor(w.value_dw.shape());
    w.value_pw = rng.normal_tensor(w.value_pw.shape());
    const Tensor x = rng.normal_tensor({cfg.in_channels, 7, 7});
    std::vector<SampleDisplacement> rec;
    dsdcn_forward(x, w, cfg, Exec::kSerial, &rec);
    for (const auto& d : rec) {
      CHECK(std::abs(d.dy) <= *cfg.offset_bound);
      CHECK(std::abs(d.dx) <= *cfg.offset_bound);
    }
  }
  for (int k : {3, 5, 7})
    for (int d : {8, 16, 64}) CHECK(dsdcn_macs(d, k, 32, 32) < dcn_macs(d, k, 32, 32));
}

TEST_CASE("fusion stays inside the branch hull") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 1 + rng.index(12), nb = 2 + rng.index(3);
    SkffWeights w = make_skff_weights(c, nb);
    w.squeeze = rng.normal_tensor(w.squeeze.shape(), 3.0);
    for (auto& e : w.expand) e = rng.normal_tensor(e.shape(), 3.0);
    std::vector<Tensor> feats;
    for (std::size_t b = 0; b < nb; ++b) feats.push_back(rng.normal_tensor({c, 3, 3}));
    const Tensor fused = skff_fuse(feats, w);
    for (std::size_t i = 0; i < fused.size(); ++i) {
      double lo = feats[0][i], hi = feats[0][i];
      for (const auto& f : feats) lo = std::min(lo, f[i]), hi = std::max(hi, f[i]);
      CHECK(fused[i] >= lo - 1e-12);
      CHECK(fused[i] <= hi + 1e-12);
    }
    // Identical branches pass through.
    const std::vector<Tensor> same(nb, feats[0]);
    CHECK(max_abs_diff(skff_fuse(same, w), feats[0]) < 1e-12);
  }
}

TEST_CASE("backbone preserves shape and is deterministic") {
  Rng rng(8);
  const ModelConfig cfg = ModelConfig::nano();
  const ModelWeights w = init_model_weights(cfg, rng);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t h = 8 * (1 + rng.index(4)), wd = 8 * (1 + rng.index(4));
    const Tensor x = rng.uniform_tensor({3, h, wd}, 0.0, 1.0);
    const Tensor y = backbone_forward(x, w, cfg);
    CHECK(y.shape() == x.shape());
    CHECK(backbone_forward(x, w, cfg) == y);
    const Tensor z = pixel_unshuffle(x, 2);
    CHECK(pixel_shuffle(z, 2) == x);
  }
}

TEST_CASE("training is bit-reproducible") {
  MicroTask task;
  task.patch = 8;
  task.batch = 2;
  const TrainState a = micro_train(task, 5, 1.0), b = micro_train(task, 5, 1.0);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.params.wq == b.params.wq);
  CHECK(a.params.s == b.params.s);
}

TEST_CASE("verification suites pass and repeat exactly") {
  for (const auto& suite : {"kernel", "embedding", "backbone"}) {
    const VerificationReport r = run_verification(suite, 1);
    CHECK_MESSAGE(r.all_passed(), r.to_jsonl());
    CHECK(r.to_jsonl() == run_verification(suite, 1).to_jsonl());
  }
  CHECK_THROWS_AS(run_verification("nope", 1), std::invalid_argument);
}

TEST_CASE("injected fault is caught") {
  fault::inject(fault::Fault::kPhiSign);
  const VerificationReport r = run_verification("kernel", 1);
  fault::inject(fault::Fault::kNone);
  CHECK_FALSE(r.all_passed());
}
