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

#include "mbtf/attention_grad.hpp"

#include <algorithm>
#include <cmath>

namespace mbtf {

Tensor normalize_rows_backward(const Tensor& x, const Tensor& grad_out) {
  require_same_shape(x, grad_out, "normalize_rows_backward");
  const std::size_t n = x.dim(0), d = x.dim(1);
  Tensor dx({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const auto gi = grad_out.row(i);
    double ss = 0.0;
    for (double v : xi) ss += v * v;
    if (ss == 0.0) continue;
    const double norm = std::sqrt(ss);
    double proj = 0.0;
    for (std::size_t a = 0; a < d; ++a) proj += (xi[a] / norm) * gi[a];
    auto di = dx.row(i);
    for (std::size_t a = 0; a < d; ++a) di[a] = (gi[a] - (xi[a] / norm) * proj) / norm;
  }
  return dx;
}

Tensor phi_p_backward(const Tensor& x, double p, PhiNorm norm, const Tensor& grad_out) {
  require_same_shape(x, grad_out, "phi_p_backward");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const double sign = fault::active() == fault::Fault::kPhiSign ? -1.0 : 1.0;
  Tensor dx({n, d});
  std::vector<double> r(d), u(d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    const auto gi = grad_out.row(i);
    double peak = 0.0, relu_ss = 0.0, in_ss = 0.0;
    for (double v : xi) {
      in_ss += v * v;
      if (v > 0.0) {
        peak = std::max(peak, v);
        relu_ss += v * v;
      }
    }
    if (peak == 0.0) continue;
    double pow_ss = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      r[a] = xi[a] > 0.0 ? std::pow(xi[a] / peak, p) : 0.0;
      pow_ss += r[a] * r[a];
    }
    const double rnorm = std::sqrt(pow_ss);
    const double target = std::sqrt(norm == PhiNorm::kInput ? in_ss : relu_ss);
    // phi = sign * target * u with u = r / |r|. The peak rescale only moves r
    // along u, which the projection below removes, so it is held constant.
    double dtarget = 0.0, u_du = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      u[a] = r[a] / rnorm;
      const double g = sign * gi[a];
      dtarget += g * u[a];
      u_du += u[a] * target * g;
    }
    auto di = dx.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      if (xi[a] <= 0.0) {
        if (norm == PhiNorm::kInput) di[a] = dtarget * xi[a] / target;
        continue;
      }
      const double du = target * sign * gi[a];
      const double dr = (du - u[a] * u_du) / rnorm;
      const double drdx = p * std::pow(xi[a] / peak, p - 1.0) / peak;
      // d|x|/dx_a and d|ReLU(x)|/dx_a agree on positive coordinates.
      di[a] = dr * drdx + dtarget * xi[a] / target;
    }
  }
  return dx;
}

TmsaGradients tmsa_grad(const QkvTriple& t, const AttentionConfig& cfg, const Tensor& upstream) {
  t.validate();
  cfg.validate();
  require_rank(upstream, 2, "tmsa_grad upstream");
  if (upstream.dim(0) != t.tokens() || upstream.dim(1) != t.v.dim(1)) {
    throw ShapeError("tmsa_grad: upstream shape does not match output");
  }
  require_finite(upstream, "tmsa_grad upstream");

  const std::size_t n = t.tokens(), d = t.q.dim(1), dv = t.v.dim(1);
  const double s = cfg.modulation, p = cfg.focused_factor;
  const Tensor qn = normalize_rows(t.q);
  const Tensor kn = normalize_rows(t.k);
  const Tensor qphi = phi_p(qn, p, cfg.phi_norm);
  const Tensor kphi = phi_p(kn, p, cfg.phi_norm);

  // Forward accumulators.
  Tensor kv({d, dv}), phikv({d, dv});
  std::vector<double> ksum(d, 0.0), phiksum(d, 0.0), vsum(dv, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t b = 0; b < dv; ++b) vsum[b] += t.v.at(j, b);
    for (std::size_t a = 0; a < d; ++a) {
      ksum[a] += kn.at(j, a);
      phiksum[a] += kphi.at(j, a);
      for (std::size_t b = 0; b < dv; ++b) {
        kv.at(a, b) += kn.at(j, a) * t.v.at(j, b);
        phikv.at(a, b) += kphi.at(j, a) * t.v.at(j, b);
      }
    }
  }

  // Backward through out_i = num_i / den_i, row by row.
  Tensor dqn({n, d}), dqphi({n, d});
  Tensor dkv({d, dv}), dphikv({d, dv});
  std::vector<double> dksum(d, 0.0), dphiksum(d, 0.0), dvsum(dv, 0.0);
  std::vector<double> dnum(dv);
  double ds = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = qn.row(i);
    const auto pi = qphi.row(i);
    const auto gi = upstream.row(i);
    double den = static_cast<double>(n) + cfg.epsilon;
    double den_rem = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      den += qi[a] * ksum[a];
      den_rem += pi[a] * phiksum[a];
    }
    den += s * den_rem;
    double g_dot_num = 0.0, num_rem_dot = 0.0;
    for (std::size_t b = 0; b < dv; ++b) {
      double first = 0.0, rem = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        first += qi[a] * kv.at(a, b);
        rem += pi[a] * phikv.at(a, b);
      }
      const double num = vsum[b] + first + s * rem;
      g_dot_num += gi[b] * num;
      num_rem_dot += gi[b] * rem;
      dnum[b] = gi[b] / den;
    }
    const double dden = -g_dot_num / (den * den);
    ds += num_rem_dot / den + dden * den_rem;

    auto dqi = dqn.row(i);
    auto dpi = dqphi.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      double acc_first = dden * ksum[a], acc_rem = dden * phiksum[a];
      for (std::size_t b = 0; b < dv; ++b) {
        acc_first += kv.at(a, b) * dnum[b];
        acc_rem += phikv.at(a, b) * dnum[b];
        dkv.at(a, b) += qi[a] * dnum[b];
        dphikv.at(a, b) += s * pi[a] * dnum[b];
      }
      dqi[a] = acc_first;
      dpi[a] = s * acc_rem;
      dksum[a] += dden * qi[a];
      dphiksum[a] += s * dden * pi[a];
    }
    for (std::size_t b = 0; b < dv; ++b) dvsum[b] += dnum[b];
  }

  // Backward through the key/value accumulators.
  Tensor dkn({n, d}), dkphi({n, d});
  TmsaGradients g;
  g.dv = Tensor({n, dv});
  for (std::size_t j = 0; j < n; ++j) {
    const auto vj = t.v.row(j);
    auto dvj = g.dv.row(j);
    for (std::size_t b = 0; b < dv; ++b) dvj[b] = dvsum[b];
    for (std::size_t a = 0; a < d; ++a) {
      double acc_k = dksum[a], acc_phi = dphiksum[a];
      for (std::size_t b = 0; b < dv; ++b) {
        acc_k += dkv.at(a, b) * vj[b];
        acc_phi += dphikv.at(a, b) * vj[b];
        dvj[b] += kn.at(j, a) * dkv.at(a, b) + kphi.at(j, a) * dphikv.at(a, b);
      }
      dkn.at(j, a) = acc_k;
      dkphi.at(j, a) = acc_phi;
    }
  }

  add_inplace(dqn, phi_p_backward(qn, p, cfg.phi_norm, dqphi));
  add_inplace(dkn, phi_p_backward(kn, p, cfg.phi_norm, dkphi));
  g.dq = normalize_rows_backward(t.q, dqn);
  g.dk = normalize_rows_backward(t.k, dkn);
  g.ds = ds;
  require_finite(g.dq, "tmsa_grad dq");
  require_finite(g.dk, "tmsa_grad dk");
  require_finite(g.dv, "tmsa_grad dv");
  return g;
}

}  // namespace mbtf
