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

#include "mbtf/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "mbtf/backbone.hpp"
#include "mbtf/checked.hpp"
#include "mbtf/embedding.hpp"
#include "mbtf/rng.hpp"

namespace mbtf {

std::uint64_t attention_macs(AttentionKind kind, std::uint64_t h, std::uint64_t w, std::uint64_t d,
                             std::uint64_t k) {
  if (h == 0 || w == 0 || d == 0 || k == 0) throw std::invalid_argument("attention_macs: arguments must be positive");
  const std::uint64_t n = checked_mul(h, w);
  switch (kind) {
    case AttentionKind::kSoftmax:
      return checked_add(checked_product(2, n, n, d), checked_product(4, n, d, d));
    case AttentionKind::kTmsa:
      return checked_add(checked_product(8, n, d, d), checked_product(4, k, k, n, d));
  }
  throw std::invalid_argument("attention_macs: unknown kind");
}

AttentionKind parse_attention_kind(const std::string& name) {
  if (name == "softmax") return AttentionKind::kSoftmax;
  if (name == "tmsa") return AttentionKind::kTmsa;
  throw std::invalid_argument("unknown attention kind '" + name + "' (expected softmax or tmsa)");
}

std::string bench_op_name(BenchOp op) {
  switch (op) {
    case BenchOp::kTmsaLinear: return "tmsa_linear";
    case BenchOp::kTmsaLinearParallel: return "tmsa_linear_omp";
    case BenchOp::kSoftmaxOracle: return "softmax_oracle";
    case BenchOp::kQuadraticOracle: return "tmsa_quadratic";
    case BenchOp::kNoop: return "noop";
  }
  return "unknown";
}

BenchOp parse_bench_op(const std::string& name) {
  for (BenchOp op : {BenchOp::kTmsaLinear, BenchOp::kTmsaLinearParallel, BenchOp::kSoftmaxOracle,
                     BenchOp::kQuadraticOracle, BenchOp::kNoop}) {
    if (bench_op_name(op) == name) return op;
  }
  throw std::invalid_argument("unknown benchmark op '" + name + "'");
}

LogLogFit fit_loglog(const std::vector<double>& n, const std::vector<double>& t) {
  if (n.size() != t.size() || n.size() < 2) throw std::invalid_argument("fit_loglog: need >= 2 paired points");
  const std::size_t m = n.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(n[i] > 0.0) || !(t[i] > 0.0)) throw std::invalid_argument("fit_loglog: values must be positive");
    lx[i] = std::log(n[i]);
    ly[i] = std::log(t[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog: sizes must differ");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(m));
  return fit;
}

double timer_resolution() {
  using clock = std::chrono::steady_clock;
  double best = 1.0;
  for (int i = 0; i < 16; ++i) {
    const auto a = clock::now();
    auto b = clock::now();
    while (b == a) b = clock::now();
    best = std::min(best, std::chrono::duration<double>(b - a).count());
  }
  return best;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Keeps results observable so the optimiser cannot drop timed work.
volatile double g_sink = 0.0;

double noop_work() {
  double acc = 0.0;
  for (int i = 0; i < 200000; ++i) acc += std::sqrt(static_cast<double>(i) + g_sink);
  return acc;
}

}  // namespace

ScalingReport bench_scaling(BenchOp op, const std::vector<std::size_t>& sizes, std::size_t reps,
                            std::size_t head_dim, std::uint64_t seed) {
  if (sizes.size() < 4) throw std::invalid_argument("bench_scaling: need at least 4 sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0 || (i > 0 && sizes[i] <= sizes[i - 1])) {
      throw std::invalid_argument("bench_scaling: sizes must be positive and strictly increasing");
    }
  }
  if (reps < 5) throw std::invalid_argument("bench_scaling: need at least 5 repetitions");
  if (head_dim == 0) throw std::invalid_argument("bench_scaling: head_dim must be positive");
  const bool quadratic = op == BenchOp::kSoftmaxOracle || op == BenchOp::kQuadraticOracle;
  if (quadratic && sizes.back() > kQuadraticBenchGuard) {
    throw GuardError("bench_scaling: " + bench_op_name(op) + " limited to n <= " +
                     std::to_string(kQuadraticBenchGuard));
  }

  AttentionConfig cfg;
  cfg.head_dim = head_dim;
  ScalingReport report;
  report.op = op;
  report.head_dim = head_dim;
  for (std::size_t n : sizes) {
    Rng rng(seed + n);
    const QkvTriple t{rng.normal_tensor({n, head_dim}), rng.normal_tensor({n, head_dim}),
                      rng.normal_tensor({n, head_dim})};
    const auto run = [&] {
      switch (op) {
        case BenchOp::kTmsaLinear: g_sink = tmsa_linear(t, cfg, Exec::kSerial)[0]; break;
        case BenchOp::kTmsaLinearParallel: g_sink = tmsa_linear(t, cfg, Exec::kParallel)[0]; break;
        case BenchOp::kSoftmaxOracle: g_sink = softmax_attention_oracle(t)[0]; break;
        case BenchOp::kQuadraticOracle: g_sink = tmsa_quadratic_oracle(t, cfg)[0]; break;
        case BenchOp::kNoop: g_sink = noop_work(); break;
      }
    };
    run();  // warm-up
    ScalingPoint point;
    point.tokens = n;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto start = std::chrono::steady_clock::now();
      run();
      point.samples.push_back(seconds_since(start));
    }
    std::vector<double> sorted = point.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    point.median_seconds = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    report.points.push_back(std::move(point));
  }
  std::vector<double> ns, ts;
  for (const auto& p : report.points) {
    ns.push_back(static_cast<double>(p.tokens));
    ts.push_back(std::max(p.median_seconds, 1e-12));
  }
  report.fit = fit_loglog(ns, ts);
  report.coarse_timer = report.points.front().median_seconds < 100.0 * timer_resolution();
  return report;
}

std::string scaling_csv(const std::vector<ScalingReport>& reports) {
  std::ostringstream out;
  out.precision(9);
  out << "op,head_dim,tokens,median_seconds,reps,slope,residual,coarse_timer\n";
  for (const auto& r : reports)
    for (const auto& p : r.points) {
      out << bench_op_name(r.op) << ',' << r.head_dim << ',' << p.tokens << ',' << p.median_seconds << ','
          << p.samples.size() << ',' << r.fit.slope << ',' << r.fit.residual << ',' << (r.coarse_timer ? 1 : 0)
          << '\n';
    }
  return out.str();
}

std::string scaling_svg(const std::vector<ScalingReport>& reports) {
  constexpr double kW = 640, kH = 420, kPad = 60;
  double lx0 = INFINITY, lx1 = -INFINITY, ly0 = INFINITY, ly1 = -INFINITY;
  for (const auto& r : reports)
    for (const auto& p : r.points) {
      const double lx = std::log10(static_cast<double>(p.tokens));
      const double ly = std::log10(std::max(p.median_seconds, 1e-12));
      lx0 = std::min(lx0, lx);
      lx1 = std::max(lx1, lx);
      ly0 = std::min(ly0, ly);
      ly1 = std::max(ly1, ly);
    }
  if (!(lx1 > lx0)) lx1 = lx0 + 1;
  if (!(ly1 > ly0)) ly1 = ly0 + 1;
  const auto px = [&](double lx) { return kPad + (lx - lx0) / (lx1 - lx0) * (kW - 2 * kPad); };
  const auto py = [&](double ly) { return kH - kPad - (ly - ly0) / (ly1 - ly0) * (kH - 2 * kPad); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream out;
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">log10 tokens</text>\n"
      << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15 " << kH / 2
      << ")\" text-anchor=\"middle\">log10 seconds</text>\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const char* color = colors[i % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& p : r.points) {
      out << px(std::log10(static_cast<double>(p.tokens))) << ','
          << py(std::log10(std::max(p.median_seconds, 1e-12))) << ' ';
    }
    out << "\"/>\n<text x=\"" << kPad + 10 << "\" y=\"" << kPad + 16 * i << "\" fill=\"" << color << "\">"
        << bench_op_name(r.op) << " slope " << r.fit.slope << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

double measure_branch_speedup(const ModelConfig& cfg, std::size_t extent, std::size_t reps, std::uint64_t seed) {
  if (reps == 0) throw std::invalid_argument("measure_branch_speedup: reps must be positive");
  Rng rng(seed);
  const ModelWeights w = init_model_weights(cfg, rng);
  const Tensor image = rng.uniform_tensor({cfg.in_channels, extent, extent}, 0.0, 1.0);
  const auto time = [&](Exec exec) {
    ForwardOptions opt;
    opt.exec = exec;
    std::vector<double> samples;
    backbone_forward(image, w, cfg, opt);
    for (std::size_t r = 0; r < reps; ++r) {
      const auto start = std::chrono::steady_clock::now();
      g_sink = backbone_forward(image, w, cfg, opt)[0];
      samples.push_back(seconds_since(start));
    }
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
  };
  return time(Exec::kSerial) / time(Exec::kParallel);
}

RankReport measure_attention_rank(const QkvTriple& t, const AttentionConfig& cfg, const CpeWeights* cpe_weights,
                                  std::size_t h, std::size_t w, double tol) {
  t.validate();
  const std::size_t n = t.tokens();
  if (n > kRankGuard) throw GuardError("measure_attention_rank: n = " + std::to_string(n) + " exceeds " +
                                       std::to_string(kRankGuard));
  if (h * w != n) throw ShapeError("measure_attention_rank: grid " + std::to_string(h) + "x" + std::to_string(w) +
                                   " does not hold " + std::to_string(n) + " tokens");
  Tensor map = simplified_attention_map(t, cfg);
  RankReport r;
  r.rank_kernel = rank_estimate(map, tol);
  if (cpe_weights == nullptr) {
    r.rank_with_cpe = r.rank_kernel;
    return r;
  }
  add_inplace(map, cpe_token_matrix(*cpe_weights, 0, h, w));
  r.rank_with_cpe = rank_estimate(map, tol);
  return r;
}

QkvTriple focusing_probe() {
  Tensor q({4, 2}), k({4, 2});
  for (std::size_t i = 0; i < 4; ++i) {
    q.at(i, 0) = FocusVectors::q[0];
    q.at(i, 1) = FocusVectors::q[1];
    k.at(i, 0) = FocusVectors::keys[i][0];
    k.at(i, 1) = FocusVectors::keys[i][1];
  }
  return {q, k, Tensor::identity(4)};
}

std::size_t dsdcn_influence_radius(std::optional<double> bound, std::size_t size, std::uint64_t seed) {
  if (size < 3 || size % 2 == 0) throw std::invalid_argument("dsdcn_influence_radius: size must be odd and >= 3");
  constexpr std::size_t kChannels = 2;
  DsdcnConfig cfg;
  cfg.in_channels = kChannels;
  cfg.out_channels = kChannels;
  cfg.kernel = 3;
  cfg.offset_bound = bound;
  Rng rng(seed);
  DsdcnWeights w = init_dsdcn_weights(cfg, rng);
  // Input-dependent offsets around large constant shifts, up to ~10 pixels.
  for (std::size_t c = 0; c < kChannels; ++c) w.offset_dw.at(c, 1, 1) = 1.0;
  w.offset_pw = rng.uniform_tensor(w.offset_pw.shape(), -1.0, 1.0);
  w.offset_pw_bias = rng.uniform_tensor(w.offset_pw_bias.shape(), -9.0, 9.0);
  const Tensor x = rng.uniform_tensor({kChannels, size, size}, 0.0, 1.0);
  const std::size_t c0 = size / 2;
  const Tensor base = dsdcn_forward(x, w, cfg);

  std::size_t radius = 0;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t xx = 0; xx < size; ++xx) {
      Tensor probe = x;
      for (std::size_t c = 0; c < kChannels; ++c) probe.at(c, y, xx) += 1.0;
      const Tensor out = dsdcn_forward(probe, w, cfg);
      bool changed = false;
      for (std::size_t c = 0; c < kChannels; ++c) changed |= out.at(c, c0, c0) != base.at(c, c0, c0);
      if (changed) {
        const std::size_t dy = y > c0 ? y - c0 : c0 - y, dx = xx > c0 ? xx - c0 : c0 - xx;
        radius = std::max({radius, dy, dx});
      }
    }
  return radius;
}

namespace {

std::string format_bound(const std::optional<double>& b) {
  if (!b) return "none";
  std::ostringstream out;
  out << *b;
  return out.str();
}

// Oracle error and runtime of the linear kernel on a seeded random instance,
// plus the focusing-probe statistics of the corresponding dense map.
AblationRow attention_row(const std::string& axis, const std::string& setting, const AttentionConfig& cfg,
                          const QkvTriple& random, bool first_order_only, const CpeWeights* cpe_weights,
                          std::size_t side) {
  AblationRow row;
  row.axis = axis;
  row.setting = setting;
  const auto start = std::chrono::steady_clock::now();
  const Tensor fast = first_order_only ? first_order_linear(random, cfg) : tmsa_linear(random, cfg);
  row.runtime_seconds = seconds_since(start);
  AttentionConfig oracle_cfg = cfg;
  if (first_order_only) oracle_cfg.modulation = 0.0;
  row.oracle_error = max_abs_diff(fast, tmsa_quadratic_oracle(random, oracle_cfg));
  const Tensor map = dense_attention_map(focusing_probe(), cfg, true, !first_order_only);
  row.entropy = mean_row_entropy(map);
  row.max_weight = max_abs(map);
  row.rank = measure_attention_rank(random, oracle_cfg, cpe_weights, side, side).rank_with_cpe;
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const AblationSpec& spec) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(spec.tokens))));
  if (side * side != spec.tokens || spec.tokens == 0) {
    throw std::invalid_argument("run_ablation: tokens must be a nonzero perfect square");
  }
  if (spec.head_dim == 0) throw std::invalid_argument("run_ablation: head_dim must be positive");
  Rng rng(spec.seed);
  const std::size_t n = spec.tokens, d = spec.head_dim;
  const QkvTriple random{rng.normal_tensor({n, d}), rng.normal_tensor({n, d}), rng.normal_tensor({n, d})};
  CpeWeights cpe_weights = make_cpe_weights(d, {3, 5});
  for (auto& k : cpe_weights.weights) k = rng.truncated_normal_tensor(k.shape(), 0.02);

  AttentionConfig base;
  base.head_dim = d;
  std::vector<AblationRow> rows;
  rows.push_back(attention_row("baseline", "s=0.5 p=4 cpe=on", base, random, false, &cpe_weights, side));
  if (spec.remainder) {
    AttentionConfig c = base;
    c.modulation = 0.0;
    rows.push_back(attention_row("remainder", "s=0", c, random, false, &cpe_weights, side));
  }
  if (spec.cpe) {
    rows.push_back(attention_row("cpe", "off", base, random, false, nullptr, side));
  }
  if (spec.first_order_only) {
    rows.push_back(attention_row("order", "first-order only", base, random, true, &cpe_weights, side));
  }
  for (double p : spec.p_values) {
    AttentionConfig c = base;
    c.focused_factor = p;
    std::ostringstream s;
    s << "p=" << p;
    rows.push_back(attention_row("focused_factor", s.str(), c, random, false, &cpe_weights, side));
  }
  for (const auto& b : spec.offset_bounds) {
    AblationRow row;
    row.axis = "offset_bound";
    row.setting = format_bound(b);
    const auto start = std::chrono::steady_clock::now();
    row.influence_radius = dsdcn_influence_radius(b, 17, spec.seed);
    row.runtime_seconds = seconds_since(start);
    row.window_9x9 = *row.influence_radius <= 4;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows, bool include_runtime) {
  std::ostringstream out;
  out.precision(9);
  out << "axis,setting,oracle_error,entropy,max_weight,rank,influence_radius,window_9x9";
  if (include_runtime) out << ",runtime_seconds";
  out << '\n';
  const auto opt = [&](const auto& v) {
    if (v) out << *v;
    else out << "na";
  };
  for (const auto& r : rows) {
    out << r.axis << ',' << r.setting << ',';
    opt(r.oracle_error);
    out << ',';
    opt(r.entropy);
    out << ',';
    opt(r.max_weight);
    out << ',';
    opt(r.rank);
    out << ',';
    opt(r.influence_radius);
    out << ',';
    if (r.window_9x9) out << (*r.window_9x9 ? "yes" : "no");
    else out << "na";
    if (include_runtime) out << ',' << r.runtime_seconds;
    out << '\n';
  }
  return out.str();
}

}  // namespace mbtf
