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
#include "mbtf/cpe.hpp"
#include "mbtf/rng.hpp"
#include "mbtf/training.hpp"
#include "oracles.hpp"

using namespace mbtf;

TEST_CASE("synthetic task") {
  MicroTask task;
  Rng a(1), b(1);
  const Sample s = make_sample(task, a), t = make_sample(task, b);
  CHECK(s.clean == t.clean);
  CHECK(s.noisy == t.noisy);
  CHECK(s.clean.shape() == Shape{4, 16, 16});
  CHECK(max_abs(s.clean) <= 0.5);

  // Noise has the requested spread.
  const Tensor noise = sub(s.noisy, s.clean);
  double var = 0.0;
  for (double v : noise.values()) var += v * v;
  CHECK(std::sqrt(var / noise.size()) == doctest::Approx(0.1).epsilon(0.1));

  task.sigma = -1.0;
  CHECK_THROWS_AS(task.validate(), ConfigError);
}

TEST_CASE("Fourier magnitudes against std::complex") {
  Rng rng(2);
  const Tensor x = rng.normal_tensor({2, 5, 6});
  const Tensor m = dft_magnitudes(x);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto ref = oracle::dft_magnitude(x, c);
    for (std::size_t i = 0; i < 30; ++i) CHECK(m.plane(c)[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
  // Orthonormal: energy is preserved.
  CHECK(sum(hadamard(m, m)) == doctest::Approx(sum(hadamard(x, x))));
}

TEST_CASE("loss and its gradient") {
  Rng rng(3);
  const Tensor pred = rng.normal_tensor({2, 4, 4}), target = rng.normal_tensor({2, 4, 4});
  double l1 = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) l1 += std::abs(pred[i] - target[i]);
  l1 /= pred.size();
  double f = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto a = oracle::dft_magnitude(pred, c), b = oracle::dft_magnitude(target, c);
    for (std::size_t i = 0; i < a.size(); ++i) f += std::abs(a[i] - b[i]);
  }
  f /= pred.size();
  CHECK(restoration_loss(pred, target) == doctest::Approx(l1 + kFftLossWeight * f));
  CHECK(restoration_loss(target, target) == 0.0);

  const Tensor g = restoration_loss_grad(pred, target);
  const double h = 1e-6;
  Tensor p = pred;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double fp = restoration_loss(p, target);
    p[i] = keep - h;
    const double fm = restoration_loss(p, target);
    p[i] = keep;
    CHECK(g[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("micro block forward") {
  Rng rng(4);
  const AttentionConfig cfg = default_micro_attention(4);
  MicroParams p = init_micro_params(4, cfg, rng);
  const Tensor x = rng.normal_tensor({4, 5, 5});
  // Output projection starts at zero: the block is the identity.
  CHECK(micro_forward(x, p, cfg) == x);

  p.wo = rng.normal_tensor(p.wo.shape());
  for (auto& k : p.cpe.weights) k = rng.normal_tensor(k.shape(), 0.3);
  const Tensor tok = to_tokens(x, 0, 4);
  const Tensor q = oracle::matmul(tok, transpose(p.wq)), k = oracle::matmul(tok, transpose(p.wk)),
               v = oracle::matmul(tok, transpose(p.wv));
  const Tensor w = oracle::taylor_weights(q, k, cfg.focused_factor, p.s, cfg.epsilon);
  const Tensor mixed = add(oracle::matmul(w, v), cpe_tokens(v, 5, 5, p.cpe));
  Tensor ref = x;
  const Tensor delta = oracle::matmul(mixed, transpose(p.wo));
  Tensor delta_map({4, 5, 5});
  from_tokens(delta, delta_map, 0);
  add_inplace(ref, delta_map);
  CHECK(max_abs_diff(micro_forward(x, p, cfg), ref) < 1e-12);
  CHECK_THROWS_AS(micro_forward(rng.normal_tensor({3, 5, 5}), p, cfg), ShapeError);
}

TEST_CASE("micro gradient is the directional derivative") {
  Rng rng(5);
  MicroTask task;
  task.patch = 8;
  const AttentionConfig cfg = default_micro_attention(4);
  MicroParams p = init_micro_params(4, cfg, rng);
  p.wo = rng.normal_tensor(p.wo.shape(), 0.1);
  for (auto& k : p.cpe.weights) k = rng.normal_tensor(k.shape(), 0.1);
  std::vector<Sample> batch{make_sample(task, rng), make_sample(task, rng)};
  for (int trial = 0; trial < 3; ++trial) {
    const MicroParams d = random_direction(p, rng);
    CHECK(directional_derivative_error(batch, p, cfg, d) < 1e-4);
  }
  const MicroGrad g = micro_loss_and_grad(batch, p, cfg);
  CHECK(g.loss == doctest::Approx(micro_loss(batch, p, cfg)));
  CHECK_THROWS_AS(micro_loss({}, p, cfg), std::invalid_argument);
}

TEST_CASE("parameter vector helpers") {
  Rng rng(6);
  const AttentionConfig cfg = default_micro_attention(4);
  MicroParams p = init_micro_params(4, cfg, rng);
  const MicroParams d = random_direction(p, rng);
  const double before = dot(p, p);
  MicroParams q = p;
  axpy(q, 2.0, d);
  CHECK(dot(q, q) == doctest::Approx(before + 4.0 * dot(p, d) + 4.0 * dot(d, d)));
  CHECK(q.s == doctest::Approx(p.s + 2.0 * d.s));
  CHECK(named_tensors(p).size() >= 6);
}

TEST_CASE("training loop bookkeeping") {
  MicroTask task;
  task.patch = 8;
  task.batch = 2;
  const TrainState frozen = micro_train(task, 4, 0.0);
  CHECK(frozen.loss_history.size() == 4);
  for (double l : frozen.loss_history) CHECK(l == frozen.initial_loss);
  CHECK(frozen.params.s == frozen.initial_s);

  const TrainState a = micro_train(task, 10, kDefaultMicroLr), b = micro_train(task, 10, kDefaultMicroLr);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.loss_history.back() < a.initial_loss);
  CHECK(a.params.s >= 0.0);

  const std::string csv = loss_history_csv(a);
  CHECK(csv.rfind("step,loss\n0,", 0) == 0);

  CHECK_THROWS_AS(micro_train(task, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(micro_train(task, 5, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(micro_train(task, 50, 1e6), NumericError);
}
