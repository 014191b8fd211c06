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

#include "mbtf/training.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mbtf/attention_grad.hpp"
#include "mbtf/rng.hpp"

namespace mbtf {

void MicroTask::validate() const {
  if (channels == 0 || patch == 0 || batch == 0) throw ConfigError("micro task: sizes must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("micro task: sigma must be finite and >= 0");
}

Tensor make_clean_patch(const MicroTask& task, Rng& rng) {
  const std::size_t n = task.patch;
  Tensor out({task.channels, n, n});
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < task.channels; ++c) {
    for (int wave = 0; wave < 2; ++wave) {
      const double amp = rng.uniform(0.05, 0.25);
      const double fy = rng.uniform(-1.0, 1.0), fx = rng.uniform(-1.0, 1.0);  // cycles per patch
      const double phase = rng.uniform(0.0, two_pi);
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
          const double t = two_pi * (fy * static_cast<double>(y) + fx * static_cast<double>(x)) / static_cast<double>(n);
          out.at(c, y, x) += amp * std::sin(t + phase);
        }
    }
  }
  return out;
}

Sample make_sample(const MicroTask& task, Rng& rng) {
  Sample s;
  s.clean = make_clean_patch(task, rng);
  s.noisy = add(s.clean, rng.normal_tensor(s.clean.shape(), task.sigma));
  return s;
}

// ---------------------------------------------------------------------------
// Loss

namespace {

// cos / sin of 2 pi (a / h + b / w) from per-axis tables.
struct Twiddle {
  std::vector<double> cy, sy, cx, sx;
  Twiddle(std::size_t h, std::size_t w) : cy(h), sy(h), cx(w), sx(w) {
    for (std::size_t i = 0; i < h; ++i) {
      cy[i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(h));
      sy[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(h));
    }
    for (std::size_t i = 0; i < w; ++i) {
      cx[i] = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(w));
      sx[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(w));
    }
  }
  double cos_sum(std::size_t a, std::size_t b) const { return cy[a] * cx[b] - sy[a] * sx[b]; }
  double sin_sum(std::size_t a, std::size_t b) const { return sy[a] * cx[b] + cy[a] * sx[b]; }
};

struct Spectrum {
  std::size_t channels = 0, h = 0, w = 0;
  std::vector<double> re, im;  // per channel, h * w bins
};

// F[ky][kx] = sum_{y,x} f[y][x] exp(-2 pi i (ky y / h + kx x / w)) / sqrt(h w)
Spectrum dft(const Tensor& x) {
  require_rank(x, 3, "dft");
  Spectrum s{x.dim(0), x.dim(1), x.dim(2), {}, {}};
  const std::size_t h = s.h, w = s.w, bins = h * w;
  s.re.assign(s.channels * bins, 0.0);
  s.im.assign(s.channels * bins, 0.0);
  const double norm = 1.0 / std::sqrt(static_cast<double>(bins));
  const Twiddle t(h, w);
  for (std::size_t c = 0; c < s.channels; ++c) {
    const auto plane = x.plane(c);
    for (std::size_t ky = 0; ky < h; ++ky)
      for (std::size_t kx = 0; kx < w; ++kx) {
        double re = 0.0, im = 0.0;
        for (std::size_t y = 0; y < h; ++y) {
          const std::size_t iy = (ky * y) % h;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const std::size_t ix = (kx * xx) % w;
            const double v = plane[y * w + xx];
            re += v * t.cos_sum(iy, ix);
            im -= v * t.sin_sum(iy, ix);
          }
        }
        s.re[c * bins + ky * w + kx] = re * norm;
        s.im[c * bins + ky * w + kx] = im * norm;
      }
  }
  return s;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Tensor dft_magnitudes(const Tensor& x) {
  const Spectrum s = dft(x);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(s.re[i], s.im[i]);
  return out;
}

double restoration_loss(const Tensor& pred, const Tensor& target, double lambda) {
  require_same_shape(pred, target, "restoration_loss");
  require_finite(pred, "restoration_loss pred");
  const double count = static_cast<double>(pred.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) l1 += std::abs(pred[i] - target[i]);
  if (lambda == 0.0) return l1 / count;
  const Tensor mp = dft_magnitudes(pred), mt = dft_magnitudes(target);
  double spec = 0.0;
  for (std::size_t i = 0; i < mp.size(); ++i) spec += std::abs(mp[i] - mt[i]);
  return l1 / count + lambda * spec / count;
}

Tensor restoration_loss_grad(const Tensor& pred, const Tensor& target, double lambda) {
  require_same_shape(pred, target, "restoration_loss_grad");
  const double count = static_cast<double>(pred.size());
  Tensor g(pred.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = sign(pred[i] - target[i]) / count;
  if (lambda == 0.0) return g;

  const Spectrum sp = dft(pred);
  const Tensor mt = dft_magnitudes(target);
  // Upstream on each complex bin: d|F|/dF scaled by the magnitude residual
  // sign. Pulling back through the (real) DFT is the conjugate transform.
  const std::size_t bins = sp.h * sp.w;
  Tensor gre({sp.channels, sp.h, sp.w}), gim({sp.channels, sp.h, sp.w});
  for (std::size_t i = 0; i < sp.re.size(); ++i) {
    const double mag = std::hypot(sp.re[i], sp.im[i]);
    if (mag == 0.0) continue;
    const double coef = lambda * sign(mag - mt[i]) / count / mag;
    gre[i] = coef * sp.re[i];
    gim[i] = coef * sp.im[i];
  }
  // d re_k / d f_x = cos(theta_kx) / sqrt(N), d im_k / d f_x = -sin(theta_kx) / sqrt(N).
  const double norm = 1.0 / std::sqrt(static_cast<double>(bins));
  const Twiddle t(sp.h, sp.w);
  for (std::size_t c = 0; c < sp.channels; ++c)
    for (std::size_t y = 0; y < sp.h; ++y)
      for (std::size_t x = 0; x < sp.w; ++x) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < sp.h; ++ky)
          for (std::size_t kx = 0; kx < sp.w; ++kx) {
            const std::size_t iy = (ky * y) % sp.h, ix = (kx * x) % sp.w;
            acc += gre.at(c, ky, kx) * t.cos_sum(iy, ix) - gim.at(c, ky, kx) * t.sin_sum(iy, ix);
          }
        g.at(c, y, x) += acc * norm;
      }
  return g;
}

// ---------------------------------------------------------------------------
// Model

AttentionConfig default_micro_attention(std::size_t channels) {
  AttentionConfig cfg;
  cfg.heads = 1;
  cfg.head_dim = channels;
  cfg.focused_factor = 4.0;
  cfg.modulation = 0.5;
  cfg.cpe_kernels = {3, 5};
  return cfg;
}

MicroParams init_micro_params(std::size_t channels, const AttentionConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.head_dim;
  MicroParams p;
  const double scale = 1.0 / std::sqrt(static_cast<double>(channels));
  p.wq = rng.normal_tensor({d, channels}, scale);
  p.wk = rng.normal_tensor({d, channels}, scale);
  p.wv = rng.normal_tensor({d, channels}, 0.02);
  for (std::size_t i = 0; i < std::min(d, channels); ++i) p.wv.at(i, i) += 1.0;
  p.wo = Tensor({channels, d});
  p.cpe = make_cpe_weights(d, cfg.cpe_kernels);
  p.s = cfg.modulation;
  return p;
}

namespace {

struct ForwardCache {
  Tensor tokens;  ///< n x C
  QkvTriple qkv;  ///< n x D each
  Tensor vmap;    ///< D x h x w
  Tensor mixed;   ///< attention + CPE, n x D
  Tensor pred;    ///< C x h x w
};

Tensor tokens_of(const Tensor& x) { return to_tokens(x, 0, x.dim(0)); }

Tensor as_map(const Tensor& tokens, std::size_t h, std::size_t w) {
  Tensor out({tokens.dim(1), h, w});
  from_tokens(tokens, out, 0);
  return out;
}

ForwardCache forward_cached(const Tensor& x, const MicroParams& p, const AttentionConfig& cfg) {
  require_rank(x, 3, "micro_forward");
  if (x.dim(0) != p.wq.dim(1)) throw ShapeError("micro_forward: channel count does not match weights");
  const std::size_t h = x.dim(1), w = x.dim(2);
  ForwardCache c;
  c.tokens = tokens_of(x);
  c.qkv = {matmul(c.tokens, transpose(p.wq)), matmul(c.tokens, transpose(p.wk)), matmul(c.tokens, transpose(p.wv))};
  AttentionConfig local = cfg;
  local.modulation = p.s;
  c.vmap = as_map(c.qkv.v, h, w);
  c.mixed = add(tmsa_linear(c.qkv, local), tokens_of(cpe(c.vmap, p.cpe)));
  c.pred = add(x, as_map(matmul(c.mixed, transpose(p.wo)), h, w));
  return c;
}

MicroParams zeros_like(const MicroParams& p) {
  MicroParams z;
  z.wq = Tensor(p.wq.shape());
  z.wk = Tensor(p.wk.shape());
  z.wv = Tensor(p.wv.shape());
  z.wo = Tensor(p.wo.shape());
  z.cpe = p.cpe;
  for (auto& k : z.cpe.weights) k = Tensor(k.shape());
  z.s = 0.0;
  return z;
}

template <class Fn>
void zip_tensors(MicroParams& a, const MicroParams& b, Fn&& fn) {
  fn(a.wq, b.wq);
  fn(a.wk, b.wk);
  fn(a.wv, b.wv);
  fn(a.wo, b.wo);
  for (std::size_t g = 0; g < a.cpe.weights.size(); ++g) fn(a.cpe.weights[g], b.cpe.weights[g]);
}

}  // namespace

Tensor micro_forward(const Tensor& x, const MicroParams& p, const AttentionConfig& cfg) {
  return forward_cached(x, p, cfg).pred;
}

double micro_loss(const std::vector<Sample>& batch, const MicroParams& p, const AttentionConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("micro_loss: empty batch");
  double total = 0.0;
  for (const auto& s : batch) total += restoration_loss(micro_forward(s.noisy, p, cfg), s.clean);
  return total / static_cast<double>(batch.size());
}

MicroGrad micro_loss_and_grad(const std::vector<Sample>& batch, const MicroParams& p, const AttentionConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("micro_loss_and_grad: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  MicroGrad out;
  out.grad = zeros_like(p);
  AttentionConfig local = cfg;
  local.modulation = p.s;
  for (const auto& s : batch) {
    const ForwardCache c = forward_cached(s.noisy, p, cfg);
    const std::size_t h = s.noisy.dim(1), w = s.noisy.dim(2);
    out.loss += restoration_loss(c.pred, s.clean) * inv_b;
    const Tensor dpred = tokens_of(scale(restoration_loss_grad(c.pred, s.clean), inv_b));  // n x C

    add_inplace(out.grad.wo, matmul(transpose(dpred), c.mixed));
    const Tensor dmixed = matmul(dpred, p.wo);  // n x D
    const TmsaGradients ga = tmsa_grad(c.qkv, local, dmixed);
    const CpeGradients gc = cpe_backward(c.vmap, p.cpe, as_map(dmixed, h, w));
    for (std::size_t g = 0; g < gc.dweights.size(); ++g) add_inplace(out.grad.cpe.weights[g], gc.dweights[g]);
    const Tensor dv = add(ga.dv, tokens_of(gc.dv));
    add_inplace(out.grad.wq, matmul(transpose(ga.dq), c.tokens));
    add_inplace(out.grad.wk, matmul(transpose(ga.dk), c.tokens));
    add_inplace(out.grad.wv, matmul(transpose(dv), c.tokens));
    out.grad.s += ga.ds;
  }
  return out;
}

void axpy(MicroParams& p, double alpha, const MicroParams& d) {
  zip_tensors(p, d, [&](Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += alpha * b[i];
  });
  p.s += alpha * d.s;
}

double dot(const MicroParams& a, const MicroParams& b) {
  double acc = a.s * b.s;
  MicroParams tmp = a;
  zip_tensors(tmp, b, [&](Tensor& x, const Tensor& y) {
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  });
  return acc;
}

MicroParams random_direction(const MicroParams& like, Rng& rng) {
  MicroParams d = zeros_like(like);
  zip_tensors(d, like, [&](Tensor& x, const Tensor&) { x = rng.normal_tensor(x.shape()); });
  d.s = rng.normal();
  return d;
}

double directional_derivative_error(const std::vector<Sample>& batch, const MicroParams& p,
                                    const AttentionConfig& cfg, const MicroParams& direction, double h) {
  const double analytic = dot(micro_loss_and_grad(batch, p, cfg).grad, direction);
  MicroParams plus = p, minus = p;
  axpy(plus, h, direction);
  axpy(minus, -h, direction);
  const double numeric = (micro_loss(batch, plus, cfg) - micro_loss(batch, minus, cfg)) / (2.0 * h);
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

TrainState micro_train(const MicroTask& task, std::size_t steps, double lr, const AttentionConfig& cfg) {
  task.validate();
  cfg.validate();
  if (steps == 0) throw std::invalid_argument("micro_train: steps must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("micro_train: lr must be finite and >= 0");
  if (cfg.heads != 1) throw ConfigError("micro_train: a single head is trained");

  Rng init_rng(task.seed);
  Rng data_rng(task.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainState state;
  state.params = init_micro_params(task.channels, cfg, init_rng);
  state.initial_s = state.params.s;

  std::vector<Sample> eval;
  for (std::size_t i = 0; i < task.batch; ++i) eval.push_back(make_sample(task, data_rng));
  state.initial_loss = micro_loss(eval, state.params, cfg);

  for (std::size_t step = 0; step < steps; ++step) {
    std::vector<Sample> batch;
    for (std::size_t i = 0; i < task.batch; ++i) batch.push_back(make_sample(task, data_rng));
    const MicroGrad g = micro_loss_and_grad(batch, state.params, cfg);
    axpy(state.params, -lr, g.grad);
    if (state.params.s < 0.0) state.params.s = 0.0;  // s >= 0 is a config invariant
    const double loss = micro_loss(eval, state.params, cfg);
    if (!std::isfinite(loss) || loss > 1e3 * state.initial_loss) {
      throw NumericError("micro_train: diverged at step " + std::to_string(step + 1) + " (loss " +
                         std::to_string(loss) + ", initial " + std::to_string(state.initial_loss) +
                         "); lower the learning rate");
    }
    state.loss_history.push_back(loss);
    state.steps = step + 1;
  }
  return state;
}

std::vector<std::pair<std::string, Tensor>> named_tensors(const MicroParams& p) {
  std::vector<std::pair<std::string, Tensor>> out{{"wq", p.wq}, {"wk", p.wk}, {"wv", p.wv}, {"wo", p.wo}};
  for (std::size_t g = 0; g < p.cpe.weights.size(); ++g) out.emplace_back("cpe" + std::to_string(g), p.cpe.weights[g]);
  out.emplace_back("modulation", Tensor({1}, p.s));
  return out;
}

std::string loss_history_csv(const TrainState& state) {
  std::ostringstream out;
  out.precision(17);
  out << "step,loss\n0," << state.initial_loss << '\n';
  for (std::size_t i = 0; i < state.loss_history.size(); ++i) out << i + 1 << ',' << state.loss_history[i] << '\n';
  return out.str();
}

}  // namespace mbtf
