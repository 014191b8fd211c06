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

#include "mbtf/attention.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <string>

namespace mbtf {

namespace fault {
namespace {
std::atomic<Fault> g_fault{Fault::kNone};
}
void inject(Fault f) { g_fault.store(f); }
Fault active() { return g_fault.load(); }
}  // namespace fault

void AttentionConfig::validate() const {
  if (heads == 0 || head_dim == 0) throw ConfigError("attention: heads and head_dim must be positive");
  if (!(focused_factor >= 1.0)) throw ConfigError("attention: focused factor p must be >= 1");
  if (!(modulation >= 0.0)) throw ConfigError("attention: modulation s must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("attention: epsilon must be > 0");
  if (cpe_kernels.empty()) throw ConfigError("attention: at least one CPE kernel required");
  for (auto k : cpe_kernels) {
    if (k % 2 == 0) throw ConfigError("attention: CPE kernels must be odd");
  }
}

void QkvTriple::validate() const {
  require_rank(q, 2, "qkv.q");
  require_rank(k, 2, "qkv.k");
  require_rank(v, 2, "qkv.v");
  if (q.shape() != k.shape()) throw ShapeError("qkv: q and k shapes differ");
  if (v.dim(0) != q.dim(0)) throw ShapeError("qkv: v token count differs from q");
  require_finite(q, "qkv.q");
  require_finite(k, "qkv.k");
  require_finite(v, "qkv.v");
}

Tensor phi_p(const Tensor& x, double p, PhiNorm norm) {
  require_rank(x, 2, "phi_p");
  if (!(p >= 1.0)) throw std::invalid_argument("phi_p: p must be >= 1");
  const std::size_t n = x.dim(0), d = x.dim(1);
  Tensor out({n, d});
  const double sign = fault::active() == fault::Fault::kPhiSign ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = x.row(i);
    auto dst = out.row(i);
    double peak = 0.0, relu_ss = 0.0, in_ss = 0.0;
    for (double v : src) {
      in_ss += v * v;
      if (v > 0.0) {
        peak = std::max(peak, v);
        relu_ss += v * v;
      }
    }
    if (peak == 0.0) continue;
    // Power of the peak-scaled ReLU; the final rescale removes the scale.
    double pow_ss = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double r = src[a] > 0.0 ? std::pow(src[a] / peak, p) : 0.0;
      dst[a] = r;
      pow_ss += r * r;
    }
    const double target = std::sqrt(norm == PhiNorm::kInput ? in_ss : relu_ss);
    const double factor = sign * target / std::sqrt(pow_ss);
    for (double& v : dst) v *= factor;
  }
  return out;
}

Tensor softmax_attention_oracle(const QkvTriple& t) {
  t.validate();
  const std::size_t n = t.tokens(), d = t.q.dim(1), dv = t.v.dim(1);
  const double temp = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor out({n, dv});
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t a = 0; a < d; ++a) dot += t.q.at(i, a) * t.k.at(j, a);
      logits[j] = dot * temp;
      peak = std::max(peak, logits[j]);
    }
    double z = 0.0;
    for (auto& l : logits) {
      l = std::exp(l - peak);
      z += l;
    }
    auto dst = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = logits[j] / z;
      const auto vj = t.v.row(j);
      for (std::size_t b = 0; b < dv; ++b) dst[b] += wij * vj[b];
    }
  }
  require_finite(out, "softmax_attention_oracle");
  return out;
}

namespace {

struct MappedQk {
  Tensor qn, kn, qphi, kphi;
};

MappedQk map_qk(const QkvTriple& t, const AttentionConfig& cfg) {
  MappedQk m;
  m.qn = normalize_rows(t.q);
  m.kn = normalize_rows(t.k);
  m.qphi = phi_p(m.qn, cfg.focused_factor, cfg.phi_norm);
  m.kphi = phi_p(m.kn, cfg.focused_factor, cfg.phi_norm);
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Unnormalised pair weight 1 + [fo] q.k + [rem] s phi(q).phi(k).
Tensor pair_weights(const MappedQk& m, double s, bool first_order, bool remainder) {
  const std::size_t n = m.qn.dim(0);
  Tensor w({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = 1.0;
      if (first_order) v += dot(m.qn.row(i), m.kn.row(j));
      if (remainder) v += s * dot(m.qphi.row(i), m.kphi.row(j));
      w.at(i, j) = v;
    }
  return w;
}

// Shared linear-time evaluation; `with_remainder` false gives the
// first-order path. Per-element accumulation order is identical for both
// execution modes.
Tensor linear_attention(const QkvTriple& t, const AttentionConfig& cfg, bool with_remainder, Exec exec,
                        AttentionDiagnostics* diag) {
  t.validate();
  cfg.validate();
  const std::size_t n = t.tokens(), d = t.q.dim(1), dv = t.v.dim(1);
  const MappedQk m = map_qk(t, cfg);
  const double s = with_remainder ? cfg.modulation : 0.0;

  Tensor kv({d, dv}), phikv({d, dv});
  std::vector<double> ksum(d, 0.0), phiksum(d, 0.0), vsum(dv, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t b = 0; b < dv; ++b) vsum[b] += t.v.at(j, b);

  const auto accumulate_row = [&](std::size_t a) {
    auto kv_a = kv.row(a);
    auto phikv_a = phikv.row(a);
    for (std::size_t j = 0; j < n; ++j) {
      const double ka = m.kn.at(j, a);
      const double pa = m.kphi.at(j, a);
      ksum[a] += ka;
      phiksum[a] += pa;
      const auto vj = t.v.row(j);
      for (std::size_t b = 0; b < dv; ++b) {
        kv_a[b] += ka * vj[b];
        phikv_a[b] += pa * vj[b];
      }
    }
  };

  Tensor out({n, dv});
  std::vector<double> dens(n);
  const double count = static_cast<double>(n);
  const auto query_row = [&](std::size_t i) {
    const auto qi = m.qn.row(i);
    const auto pi = m.qphi.row(i);
    auto dst = out.row(i);
    double den_first = 0.0, den_rem = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      den_first += qi[a] * ksum[a];
      den_rem += pi[a] * phiksum[a];
    }
    const double den = count + den_first + s * den_rem + cfg.epsilon;
    dens[i] = den;
    for (std::size_t b = 0; b < dv; ++b) {
      double first = 0.0, rem = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        first += qi[a] * kv.at(a, b);
        rem += pi[a] * phikv.at(a, b);
      }
      dst[b] = (vsum[b] + first + s * rem) / den;
    }
  };

  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(d); ++a) accumulate_row(static_cast<std::size_t>(a));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) query_row(static_cast<std::size_t>(i));
  } else {
    for (std::size_t a = 0; a < d; ++a) accumulate_row(a);
    for (std::size_t i = 0; i < n; ++i) query_row(i);
  }

  for (double den : dens) {
    if (!(den >= cfg.epsilon)) {
      throw NumericError("tmsa_linear: denominator " + std::to_string(den) + " below epsilon");
    }
    if (diag) {
      diag->min_denominator = std::min(diag->min_denominator, den);
      if (den < 10.0 * cfg.epsilon) ++diag->low_denominators;
    } else if (den < 10.0 * cfg.epsilon) {
      std::cerr << "warning: tmsa_linear denominator " << den << " within 10x of epsilon\n";
    }
  }
  require_finite(out, "tmsa_linear");
  return out;
}

}  // namespace

Tensor tmsa_quadratic_oracle(const QkvTriple& t, const AttentionConfig& cfg) {
  t.validate();
  cfg.validate();
  const std::size_t n = t.tokens(), dv = t.v.dim(1);
  const MappedQk m = map_qk(t, cfg);
  const Tensor w = pair_weights(m, cfg.modulation, true, true);
  Tensor out({n, dv});
  for (std::size_t i = 0; i < n; ++i) {
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) den += w.at(i, j);
    den += cfg.epsilon;
    auto dst = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w.at(i, j) / den;
      const auto vj = t.v.row(j);
      for (std::size_t b = 0; b < dv; ++b) dst[b] += wij * vj[b];
    }
  }
  require_finite(out, "tmsa_quadratic_oracle");
  return out;
}

Tensor first_order_linear(const QkvTriple& t, const AttentionConfig& cfg, Exec exec) {
  return linear_attention(t, cfg, false, exec, nullptr);
}

Tensor tmsa_linear(const QkvTriple& t, const AttentionConfig& cfg, Exec exec, AttentionDiagnostics* diag) {
  return linear_attention(t, cfg, true, exec, diag);
}

Tensor dense_attention_map(const QkvTriple& t, const AttentionConfig& cfg, bool include_first_order,
                           bool include_remainder) {
  if (t.q.rank() == 2 && t.q.dim(0) > kDenseMapGuard) {
    throw GuardError("dense_attention_map: " + std::to_string(t.q.dim(0)) + " tokens exceed guard of " +
                     std::to_string(kDenseMapGuard));
  }
  t.validate();
  cfg.validate();
  const MappedQk m = map_qk(t, cfg);
  Tensor w = pair_weights(m, cfg.modulation, include_first_order, include_remainder);
  const std::size_t n = t.tokens();
  for (std::size_t i = 0; i < n; ++i) {
    auto r = w.row(i);
    double den = cfg.epsilon;
    for (double v : r) den += v;
    for (double& v : r) v /= den;
  }
  return w;
}

Tensor simplified_attention_map(const QkvTriple& t, const AttentionConfig& cfg) {
  if (t.q.rank() == 2 && t.q.dim(0) > kDenseMapGuard) {
    throw GuardError("simplified_attention_map: token count exceeds guard");
  }
  t.validate();
  cfg.validate();
  return pair_weights(map_qk(t, cfg), cfg.modulation, true, true);
}

double mean_row_entropy(const Tensor& map) {
  require_rank(map, 2, "mean_row_entropy");
  double total = 0.0;
  for (std::size_t i = 0; i < map.dim(0); ++i) {
    const auto r = map.row(i);
    double z = 0.0;
    for (double v : r) z += v;
    double h = 0.0;
    for (double v : r) {
      if (v <= 0.0) continue;
      const double pr = v / z;
      h -= pr * std::log(pr);
    }
    total += h;
  }
  return total / static_cast<double>(map.dim(0));
}

}  // namespace mbtf
