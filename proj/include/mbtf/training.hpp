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
#include <string>
#include <utility>
#include <vector>

#include "mbtf/attention.hpp"
#include "mbtf/cpe.hpp"

namespace mbtf {

class Rng;

/// Seeded synthetic denoising task. Clean patches are sums of two
/// low-frequency sinusoids per channel (at most one cycle per patch, peak
/// amplitude <= 0.5); noisy = clean + N(0, sigma^2).
struct MicroTask {
  std::size_t channels = 4;
  std::size_t patch = 16;
  double sigma = 0.1;
  std::size_t batch = 4;
  std::uint64_t seed = 1;
  void validate() const;
};

struct Sample {
  Tensor clean;  ///< C x patch x patch
  Tensor noisy;
};

Tensor make_clean_patch(const MicroTask& task, Rng& rng);
Sample make_sample(const MicroTask& task, Rng& rng);

/// Weight of the Fourier-magnitude term in the loss.
inline constexpr double kFftLossWeight = 0.1;

/// Orthonormal 2-D DFT magnitudes of every channel plane (naive summation).
Tensor dft_magnitudes(const Tensor& x);

/// mean |pred - target| + lambda * mean | |F(pred)| - |F(target)| |.
double restoration_loss(const Tensor& pred, const Tensor& target, double lambda = kFftLossWeight);
/// Subgradient of restoration_loss with respect to pred (sign(0) = 0, and
/// bins with |F(pred)| = 0 contribute nothing).
Tensor restoration_loss_grad(const Tensor& pred, const Tensor& target, double lambda = kFftLossWeight);

/// pred = x + Wo (attn(Wq x, Wk x, Wv x) + CPE(Wv x)) per pixel, one head.
struct MicroParams {
  Tensor wq, wk, wv;  ///< D x C
  Tensor wo;          ///< C x D
  CpeWeights cpe;     ///< D channels
  double s = 0.5;
};

/// Wq, Wk ~ N(0, 1/C); Wv = I + N(0, 0.02^2) on the leading block; Wo = 0,
/// so the untrained block is the identity; zero CPE; s from cfg.
MicroParams init_micro_params(std::size_t channels, const AttentionConfig& cfg, Rng& rng);

Tensor micro_forward(const Tensor& x, const MicroParams& p, const AttentionConfig& cfg);

/// Mean loss over a batch and its gradient with respect to every parameter
/// (same layout as MicroParams).
struct MicroGrad {
  double loss = 0.0;
  MicroParams grad;
};
MicroGrad micro_loss_and_grad(const std::vector<Sample>& batch, const MicroParams& p, const AttentionConfig& cfg);
double micro_loss(const std::vector<Sample>& batch, const MicroParams& p, const AttentionConfig& cfg);

/// Applies p += alpha * d to every parameter (s included).
void axpy(MicroParams& p, double alpha, const MicroParams& d);
/// Sum of elementwise products over all parameters.
double dot(const MicroParams& a, const MicroParams& b);
MicroParams random_direction(const MicroParams& like, Rng& rng);

struct TrainState {
  MicroParams params;
  std::size_t steps = 0;
  double initial_loss = 0.0;         ///< evaluation loss before step 1
  std::vector<double> loss_history;  ///< evaluation loss after each step
  double initial_s = 0.5;
};

/// One head, D = C, p = 4, s = 0.5, CPE kernels {3, 5}.
AttentionConfig default_micro_attention(std::size_t channels = 4);
inline constexpr double kDefaultMicroLr = 2.0;

/// Plain gradient descent. Every step draws a fresh batch from the task's
/// seeded stream; the recorded loss is on a fixed evaluation batch drawn
/// first, so lr = 0 gives a constant history. Throws NumericError when the
/// evaluation loss exceeds 1e3 x its initial value.
TrainState micro_train(const MicroTask& task, std::size_t steps, double lr,
                       const AttentionConfig& cfg = default_micro_attention());

/// Relative error between the analytic directional derivative g.d and the
/// central difference (L(p + h d) - L(p - h d)) / 2h on one batch.
double directional_derivative_error(const std::vector<Sample>& batch, const MicroParams& p,
                                    const AttentionConfig& cfg, const MicroParams& direction, double h = 1e-6);

std::vector<std::pair<std::string, Tensor>> named_tensors(const MicroParams& p);
std::string loss_history_csv(const TrainState& state);

}  // namespace mbtf
