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
#include "mbtf/attention.hpp"
#include "mbtf/attention_grad.hpp"
#include "mbtf/cpe.hpp"
#include "mbtf/linalg.hpp"
#include "mbtf/rng.hpp"
#include "mbtf/tmsa_block.hpp"
#include "oracles.hpp"

using namespace mbtf;

namespace {

QkvTriple random_triple(Rng& rng, std::size_t n, std::size_t d, std::size_t dv = 0) {
  return {rng.normal_tensor({n, d}), rng.normal_tensor({n, d}), rng.normal_tensor({n, dv ? dv : d})};
}

AttentionConfig config(std::size_t d, double p = 4.0, double s = 0.5) {
  AttentionConfig cfg;
  cfg.head_dim = d;
  cfg.focused_factor = p;
  cfg.modulation = s;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  AttentionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.focused_factor = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.modulation = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.cpe_kernels = {3, 4};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  // Config errors are usage errors.
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("phi_p against the hand-coded mapping") {
  Rng rng(1);
  const Tensor x = rng.normal_tensor({30, 5});
  for (double p : {1.0, 2.0, 3.0, 4.5}) {
    const Tensor y = phi_p(x, p);
    for (std::size_t i = 0; i < 30; ++i) {
      const auto ref = oracle::focus(oracle::row(x, i), p);
      for (std::size_t j = 0; j < 5; ++j) CHECK(y.at(i, j) == doctest::Approx(ref[j]).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(phi_p(x, 0.9), std::invalid_argument);
}

TEST_CASE("phi_p caption example") {
  const Tensor k2 = Tensor::from_rows({{0.9165, 0.4}});
  const Tensor y = phi_p(k2, 3.0);
  // Printed to four places; 0.99655 sits on the rounding edge.
  CHECK(std::abs(y.at(0, 0) - 0.9966) < 1e-4);
  CHECK(std::abs(y.at(0, 1) - 0.0828) < 1e-4);

  const Tensor k3 = phi_p(Tensor::from_rows({{-0.9798, -0.2}}), 3.0);
  CHECK(k3.at(0, 0) == 0.0);
  CHECK(k3.at(0, 1) == 0.0);
}

TEST_CASE("phi_p norm variants") {
  const Tensor x = Tensor::from_rows({{0.6, -0.8}, {0.3, 0.4}});
  const Tensor by_input = phi_p(x, 2.0, PhiNorm::kInput);
  const Tensor by_relu = phi_p(x, 2.0, PhiNorm::kRelu);
  CHECK(by_input.at(0, 0) == doctest::Approx(1.0));
  CHECK(by_relu.at(0, 0) == doctest::Approx(0.6));
  // Nonnegative rows: both scalings agree.
  CHECK(by_input.at(1, 0) == doctest::Approx(by_relu.at(1, 0)));
  CHECK(by_input.at(1, 1) == doctest::Approx(by_relu.at(1, 1)));
}

TEST_CASE("softmax oracle against the double loop") {
  Rng rng(42);
  const QkvTriple t = random_triple(rng, 8, 4);
  CHECK(max_abs_diff(softmax_attention_oracle(t), oracle::softmax_attention(t.q, t.k, t.v)) < 1e-12);

  const QkvTriple one = random_triple(rng, 1, 3);
  CHECK(max_abs_diff(softmax_attention_oracle(one), one.v) < 1e-15);
}

TEST_CASE("quadratic oracle against the per-pair formula") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.index(20), d = 1 + rng.index(6);
    const QkvTriple t = random_triple(rng, n, d, 3);
    const AttentionConfig cfg = config(d, 3.0 + trial % 3, 0.5 * (trial % 3));
    const Tensor w = oracle::taylor_weights(t.q, t.k, cfg.focused_factor, cfg.modulation, cfg.epsilon);
    CHECK(max_abs_diff(tmsa_quadratic_oracle(t, cfg), oracle::matmul(w, t.v)) < 1e-12);
    CHECK(max_abs_diff(dense_attention_map(t, cfg), w) < 1e-12);
  }
}

TEST_CASE("linear kernel equals the quadratic oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.index(128), d = 1 + rng.index(16);
    const QkvTriple t = random_triple(rng, n, d);
    const AttentionConfig cfg = config(d, 3.0 + trial % 3, 0.5 * (trial % 3));
    const Tensor lin = tmsa_linear(t, cfg);
    CHECK(max_abs_diff(lin, tmsa_quadratic_oracle(t, cfg)) < 1e-9);
    CHECK(tmsa_linear(t, cfg, Exec::kParallel) == lin);
  }
}

TEST_CASE("linear kernel edge cases") {
  Rng rng(4);
  SUBCASE("single token returns v") {
    const QkvTriple t = random_triple(rng, 1, 4);
    // Off by the epsilon in the denominator only.
    CHECK(max_abs_diff(tmsa_linear(t, config(4)), t.v) < 1e-5);
  }
  SUBCASE("identical values are reproduced") {
    QkvTriple t = random_triple(rng, 9, 3);
    for (std::size_t i = 0; i < 9; ++i) t.v.at(i, 0) = 2.5, t.v.at(i, 1) = -1.0, t.v.at(i, 2) = 0.0;
    const Tensor out = tmsa_linear(t, config(3));
    for (std::size_t i = 0; i < 9; ++i) CHECK(out.at(i, 0) == doctest::Approx(2.5).epsilon(1e-6));
  }
  SUBCASE("zero queries and keys give uniform weights") {
    QkvTriple t = random_triple(rng, 5, 2);
    t.q = Tensor({5, 2});
    t.k = Tensor({5, 2});
    const Tensor m = dense_attention_map(t, config(2));
    for (double v : m.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-6));
  }
  SUBCASE("shape and value errors") {
    QkvTriple t = random_triple(rng, 4, 3);
    t.k = Tensor({4, 2});
    CHECK_THROWS_AS(tmsa_linear(t, config(3)), ShapeError);
    QkvTriple u = random_triple(rng, 4, 3);
    u.q[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(tmsa_linear(u, config(3)), NumericError);
  }
  SUBCASE("dense guard") {
    const QkvTriple big{Tensor({kDenseMapGuard + 1, 1}), Tensor({kDenseMapGuard + 1, 1}),
                        Tensor({kDenseMapGuard + 1, 1})};
    CHECK_THROWS_AS(dense_attention_map(big, config(1)), GuardError);
    CHECK_THROWS_AS(dense_attention_map(big, config(1)), std::length_error);
  }
}

TEST_CASE("first-order path is the s = 0 kernel") {
  Rng rng(5);
  const QkvTriple t = random_triple(rng, 40, 6);
  const Tensor ref = tmsa_linear(t, config(6, 4.0, 0.0));
  CHECK(max_abs_diff(first_order_linear(t, config(6, 4.0, 0.7)), ref) < 1e-12);
  CHECK(max_abs_diff(dense_attention_map(t, config(6, 4.0, 0.7), true, false),
                     dense_attention_map(t, config(6, 4.0, 0.0))) < 1e-12);
}

TEST_CASE("entropy helper") {
  const Tensor m = Tensor::from_rows({{0.25, 0.25, 0.25, 0.25}, {1, 0, 0, 0}});
  CHECK(mean_row_entropy(m) == doctest::Approx(std::log(4.0) / 2.0));
  CHECK(oracle::row_entropy(m, 0) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("kernel map rank bound") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 1 + rng.index(4), n = 2 * d + 10;
    const QkvTriple t = random_triple(rng, n, d);
    CHECK(rank_estimate(simplified_attention_map(t, config(d))) <= 2 * d + 1);
  }
}

TEST_CASE("fault hook flips the mapping sign") {
  const Tensor x = Tensor::from_rows({{0.5, 0.5}});
  fault::inject(fault::Fault::kPhiSign);
  const Tensor flipped = phi_p(x, 2.0);
  fault::inject(fault::Fault::kNone);
  CHECK(flipped.at(0, 0) < 0.0);
  CHECK(phi_p(x, 2.0).at(0, 0) > 0.0);
  CHECK(fault::active() == fault::Fault::kNone);
}

// --- gradients -------------------------------------------------------------

namespace {

// Inputs away from the ReLU kink so central differences are meaningful.
Tensor kink_free(Rng& rng, std::size_t n, std::size_t d) {
  Tensor t({n, d});
  for (auto& v : t.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return t;
}

double objective(const QkvTriple& t, const AttentionConfig& cfg, const Tensor& up) {
  return sum(hadamard(tmsa_quadratic_oracle(t, cfg), up));
}

}  // namespace

TEST_CASE("tmsa_grad against central differences on the oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t n = 2 + rng.index(6), d = 1 + rng.index(4);
    QkvTriple t{kink_free(rng, n, d), kink_free(rng, n, d), rng.normal_tensor({n, d})};
    AttentionConfig cfg = config(d, 3.0 + trial % 2, 0.5);
    const Tensor up = rng.normal_tensor({n, d});
    const TmsaGradients g = tmsa_grad(t, cfg, up);
    const double h = 1e-6;
    for (Tensor* x : {&t.q, &t.k, &t.v}) {
      const Tensor& analytic = x == &t.q ? g.dq : x == &t.k ? g.dk : g.dv;
      for (std::size_t i = 0; i < x->size(); ++i) {
        const double keep = (*x)[i];
        (*x)[i] = keep + h;
        const double fp = objective(t, cfg, up);
        (*x)[i] = keep - h;
        const double fm = objective(t, cfg, up);
        (*x)[i] = keep;
        CHECK(analytic[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5).scale(1e-2));
      }
    }
    AttentionConfig plus = cfg, minus = cfg;
    plus.modulation += h;
    minus.modulation -= h;
    CHECK(g.ds == doctest::Approx((objective(t, plus, up) - objective(t, minus, up)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("gradient helpers") {
  Rng rng(8);
  const Tensor x = kink_free(rng, 4, 3), up = rng.normal_tensor({4, 3});
  const double h = 1e-6;
  const auto check = [&](auto f, const Tensor& analytic) {
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double keep = y[i];
      y[i] = keep + h;
      const double fp = sum(hadamard(f(y), up));
      y[i] = keep - h;
      const double fm = sum(hadamard(f(y), up));
      y[i] = keep;
      CHECK(analytic[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
    }
  };
  check([](const Tensor& y) { return normalize_rows(y); }, normalize_rows_backward(x, up));
  check([](const Tensor& y) { return phi_p(y, 3.0); }, phi_p_backward(x, 3.0, PhiNorm::kInput, up));
  check([](const Tensor& y) { return phi_p(y, 3.0, PhiNorm::kRelu); },
        phi_p_backward(x, 3.0, PhiNorm::kRelu, up));

  const QkvTriple t = random_triple(rng, 3, 2);
  CHECK_THROWS_AS(tmsa_grad(t, config(2), Tensor({2, 2})), ShapeError);
}

// --- positional encoding ---------------------------------------------------

TEST_CASE("cpe groups") {
  CHECK(cpe_group_sizes(8, 2) == std::vector<std::size_t>{4, 4});
  CHECK(cpe_group_sizes(7, 2) == std::vector<std::size_t>{4, 3});
  CHECK(cpe_group_sizes(3, 3) == std::vector<std::size_t>{1, 1, 1});
  CHECK_THROWS_AS(cpe_group_sizes(1, 2), ShapeError);
  CHECK_THROWS_AS(make_cpe_weights(4, {3, 4}), ShapeError);
}

TEST_CASE("cpe equals grouped depthwise convolution") {
  Rng rng(9);
  CpeWeights w = make_cpe_weights(5, {3, 5});
  for (auto& t : w.weights) t = rng.normal_tensor(t.shape());
  const Tensor v = rng.normal_tensor({5, 6, 7});
  const Tensor out = cpe(v, w);
  const Tensor ref0 = oracle::depthwise(slice_channels(v, 0, 3), w.weights[0]);
  const Tensor ref1 = oracle::depthwise(slice_channels(v, 3, 2), w.weights[1]);
  CHECK(max_abs_diff(slice_channels(out, 0, 3), ref0) < 1e-12);
  CHECK(max_abs_diff(slice_channels(out, 3, 2), ref1) < 1e-12);

  // Token layout and the explicit mixing matrix agree with the map form.
  const Tensor tok = to_tokens(v, 0, 5);
  CHECK(max_abs_diff(cpe_tokens(tok, 6, 7, w), to_tokens(out, 0, 5)) < 1e-12);
  const Tensor m = cpe_token_matrix(w, 4, 6, 7);
  CHECK(max_abs_diff(oracle::matmul(m, to_tokens(v, 4, 1)), to_tokens(out, 4, 1)) < 1e-12);

  CHECK(cpe(v, make_delta_cpe(5, {3, 5})) == v);
  CHECK_THROWS_AS(cpe(rng.normal_tensor({4, 6, 7}), w), ShapeError);
}

TEST_CASE("cpe backward is the adjoint") {
  Rng rng(10);
  CpeWeights w = make_cpe_weights(4, {3, 5});
  for (auto& t : w.weights) t = rng.normal_tensor(t.shape());
  const Tensor v = rng.normal_tensor({4, 5, 5}), up = rng.normal_tensor({4, 5, 5});
  const CpeGradients g = cpe_backward(v, w, up);
  // <up, cpe(v)> is linear in v and in each weight.
  const Tensor dv = rng.normal_tensor(v.shape());
  CHECK(sum(hadamard(up, cpe(dv, w))) == doctest::Approx(sum(hadamard(g.dv, dv))));
  for (std::size_t gidx = 0; gidx < w.weights.size(); ++gidx) {
    CpeWeights only = make_cpe_weights(4, {3, 5});
    only.weights[gidx] = w.weights[gidx];
    CHECK(sum(hadamard(up, cpe(v, only))) == doctest::Approx(sum(hadamard(g.dweights[gidx], w.weights[gidx]))));
  }
}

// --- full layer ------------------------------------------------------------

TEST_CASE("tmsa layer against a composed oracle") {
  Rng rng(11);
  const std::size_t c = 6;
  AttentionConfig cfg = config(3);
  cfg.heads = 2;
  TmsaWeights w = init_tmsa_weights(c, cfg, true, rng);
  w.qkv_pw_bias = rng.normal_tensor({3 * c}, 0.1);
  w.out_pw_bias = rng.normal_tensor({c}, 0.1);
  w.qkv_dw = rng.normal_tensor(w.qkv_dw.shape(), 0.3);
  const Tensor x = rng.normal_tensor({c, 5, 4});

  Tensor mixed = oracle::pointwise(x, w.qkv_pw);
  for (std::size_t ch = 0; ch < 3 * c; ++ch)
    for (auto& v : mixed.plane(ch)) v += w.qkv_pw_bias[ch];
  const Tensor qkv = oracle::depthwise(mixed, w.qkv_dw);
  const Tensor q = slice_channels(qkv, 0, c), k = slice_channels(qkv, c, c), v = slice_channels(qkv, 2 * c, c);
  Tensor attended({c, 5, 4});
  for (std::size_t head = 0; head < 2; ++head) {
    const Tensor wts = oracle::taylor_weights(to_tokens(q, 3 * head, 3), to_tokens(k, 3 * head, 3),
                                              cfg.focused_factor, w.modulation[0], cfg.epsilon);
    from_tokens(oracle::matmul(wts, to_tokens(v, 3 * head, 3)), attended, 3 * head);
  }
  for (std::size_t g = 0; g < 2; ++g) {
    const Tensor pos = oracle::depthwise(slice_channels(v, 3 * g, 3), w.cpe.weights[g]);
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t i = 0; i < 20; ++i) attended.plane(3 * g + ch)[i] += pos.plane(ch)[i];
  }
  Tensor ref = oracle::pointwise(attended, w.out_pw);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (auto& val : ref.plane(ch)) val += w.out_pw_bias[ch];

  const Tensor out = tmsa_pp_full(x, w, cfg);
  CHECK(max_abs_diff(out, ref) < 1e-10);
  CHECK(tmsa_pp_full(x, w, cfg, Exec::kParallel) == out);

  cfg.heads = 3;
  CHECK_THROWS_AS(tmsa_pp_full(x, w, cfg), ShapeError);
}

TEST_CASE("identity layer weights reproduce the kernel") {
  Rng rng(12);
  const AttentionConfig cfg = config(4);
  const TmsaWeights w = identity_tmsa_weights(4, cfg);
  const Tensor x = rng.normal_tensor({4, 3, 3});
  const Tensor tok = to_tokens(x, 0, 4);
  Tensor ref({4, 3, 3});
  from_tokens(tmsa_linear({tok, tok, tok}, cfg), ref, 0);
  CHECK(max_abs_diff(tmsa_pp_full(x, w, cfg), ref) < 1e-12);
}
