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

// Command-line front end: verification suites, benchmarks, attention maps,
// cost calculators, restoration demo, micro-training and ablations.

#include <omp.h>

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbtf/analysis.hpp"
#include "mbtf/backbone.hpp"
#include "mbtf/checkpoint.hpp"
#include "mbtf/embedding.hpp"
#include "mbtf/rng.hpp"
#include "mbtf/tensor_io.hpp"
#include "mbtf/training.hpp"
#include "mbtf/verify.hpp"

namespace fs = std::filesystem;
using namespace mbtf;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kFailed = 1, kUsage = 2, kIo = 3 };

struct Shared {
  std::uint64_t seed = 1;
  std::string config = "nano";
  std::string out_dir = ".";
  std::string format;
  int threads = 1;

  Exec exec() const { return threads > 1 ? Exec::kParallel : Exec::kSerial; }
  fs::path out(const std::string& name) const { return fs::path(out_dir) / name; }
};

void ensure_out_dir(const Shared& s) {
  std::error_code ec;
  fs::create_directories(s.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + s.out_dir + ": " + ec.message());
}

// ---------------------------------------------------------------------------

int cmd_verify(const Shared& s, const std::string& suite, const std::string& fault_name) {
  if (fault_name == "phi-sign") {
    fault::inject(fault::Fault::kPhiSign);
  } else if (!fault_name.empty()) {
    throw std::invalid_argument("unknown fault '" + fault_name + "' (expected phi-sign)");
  }
  const VerificationReport report = run_verification(suite, s.seed);
  std::cout << report.to_jsonl();
  return report.all_passed() ? kOk : kFailed;
}

int cmd_bench(const Shared& s, std::vector<std::string> ops, std::vector<std::size_t> sizes, std::size_t reps,
              std::size_t head_dim, bool branch_speedup) {
  ensure_out_dir(s);
  if (ops.empty()) ops = {"tmsa_linear", "softmax_oracle"};
  std::vector<ScalingReport> reports;
  for (const auto& name : ops) {
    const BenchOp op = parse_bench_op(name);
    std::vector<std::size_t> n = sizes;
    if (n.empty()) {
      n = (op == BenchOp::kSoftmaxOracle || op == BenchOp::kQuadraticOracle)
              ? std::vector<std::size_t>{256, 512, 1024, 2048}
              : std::vector<std::size_t>{1024, 4096, 16384, 65536};
    }
    reports.push_back(bench_scaling(op, n, reps, head_dim, s.seed));
    const auto& r = reports.back();
    json j;
    j["op"] = name;
    j["slope"] = r.fit.slope;
    j["residual"] = r.fit.residual;
    j["coarse_timer"] = r.coarse_timer;
    std::cout << j.dump() << '\n';
  }
  const std::string fmt = s.format.empty() ? "csv" : s.format;
  if (fmt == "csv") {
    write_file_atomic(s.out("bench.csv"), scaling_csv(reports));
  } else if (fmt == "svg") {
    write_file_atomic(s.out("bench.svg"), scaling_svg(reports));
  } else {
    throw std::invalid_argument("bench: --format must be csv or svg");
  }
  if (branch_speedup) {
    const ModelConfig cfg = resolve_model_config(s.config);
    json j;
    j["branch_speedup"] = measure_branch_speedup(cfg, 32, 3, s.seed);
    j["threads"] = s.threads;
    std::cout << j.dump() << '\n';
  }
  return kOk;
}

std::string real_tag(double v) {
  std::ostringstream out;
  out << v;
  std::string t = out.str();
  for (auto& ch : t)
    if (ch == '.') ch = '_';
  return t;
}

int cmd_attn_map(const Shared& s, const std::string& probe, std::vector<double> p_values, std::size_t tokens) {
  ensure_out_dir(s);
  const std::string fmt = s.format.empty() ? "pgm" : s.format;
  if (fmt != "pgm" && fmt != "raw") throw std::invalid_argument("attn-map: --format must be pgm or raw");
  QkvTriple t;
  if (probe == "focusing") {
    t = focusing_probe();
  } else if (probe == "uniform") {
    if (tokens == 0 || tokens > kDenseMapGuard) throw GuardError("attn-map: tokens must be in [1, 4096]");
    t = {Tensor({tokens, 2}, 0.5), Tensor({tokens, 2}, 0.5), Tensor::identity(tokens)};
  } else if (probe == "random") {
    if (tokens == 0 || tokens > kDenseMapGuard) throw GuardError("attn-map: tokens must be in [1, 4096]");
    Rng rng(s.seed);
    t = {rng.normal_tensor({tokens, 8}), rng.normal_tensor({tokens, 8}), rng.normal_tensor({tokens, 8})};
  } else {
    throw std::invalid_argument("attn-map: unknown probe '" + probe + "' (expected focusing, uniform or random)");
  }
  if (p_values.empty()) p_values = {3.0, 4.0, 8.0};

  struct Job {
    double s, p;
  };
  std::vector<Job> jobs{{0.0, 4.0}, {0.5, 4.0}};
  for (double p : p_values)
    if (p != 4.0) jobs.push_back({0.5, p});
  for (const auto& job : jobs) {
    AttentionConfig cfg;
    cfg.head_dim = t.q.dim(1);
    cfg.modulation = job.s;
    cfg.focused_factor = job.p;
    const Tensor map = dense_attention_map(t, cfg);
    const std::string stem = "attn_" + probe + "_s" + real_tag(job.s) + "_p" + real_tag(job.p);
    const std::string file = stem + (fmt == "pgm" ? ".pgm" : ".ttnsr");
    write_file_atomic(s.out(file), fmt == "pgm" ? encode_heatmap_pgm(map) : encode_tensor(map));
    double row0_max = 0.0;
    for (double v : map.row(0)) row0_max = std::max(row0_max, v);
    json j;
    j["file"] = file;
    j["s"] = job.s;
    j["p"] = job.p;
    j["entropy"] = mean_row_entropy(map);
    j["row0_max"] = row0_max;
    std::cout << j.dump() << '\n';
  }
  return kOk;
}

int cmd_macs(const Shared& s, const std::string& kind, std::uint64_t h, std::uint64_t w, std::uint64_t d,
             std::uint64_t k) {
  json j;
  j["kind"] = kind;
  if (kind == "softmax" || kind == "tmsa") {
    j["macs"] = attention_macs(parse_attention_kind(kind), h, w, d, k);
  } else if (kind == "dsdcn") {
    j["macs"] = dsdcn_macs(d, k, h, w);
  } else if (kind == "dcn") {
    j["macs"] = dcn_macs(d, k, h, w);
  } else if (kind == "model") {
    const ModelConfig cfg = resolve_model_config(s.config);
    j["config"] = cfg.name;
    j["params"] = count_params(cfg);
    j["macs"] = model_macs(cfg, h, w);
    j["resolution"] = std::to_string(h) + "x" + std::to_string(w);
    j["note"] = "published MAC figures do not state their input resolution; compare at your own";
  } else {
    throw std::invalid_argument("macs: unknown kind '" + kind + "' (expected softmax, tmsa, dsdcn, dcn, model)");
  }
  std::cout << j.dump() << '\n';
  return kOk;
}

// Mirror index into [0, n) without repeating the edge sample.
std::size_t reflect(std::size_t i, std::size_t n) {
  if (n == 1) return 0;
  const std::size_t period = 2 * (n - 1);
  const std::size_t m = i % period;
  return m < n ? m : period - m;
}

int cmd_restore(const Shared& s, const std::string& input, const std::string& output, const std::string& checkpoint,
                const std::string& init, const std::string& save_prefix) {
  const ModelConfig cfg = resolve_model_config(s.config);
  if (cfg.in_channels != 3) throw ConfigError("restore: config must take 3 input channels");
  ModelWeights w;
  if (!checkpoint.empty()) {
    w = load_checkpoint(checkpoint, cfg);
  } else if (init == "zero") {
    w = make_model_weights(cfg);
  } else if (init == "random") {
    Rng rng(s.seed);
    w = init_model_weights(cfg, rng);
  } else {
    throw std::invalid_argument("restore: --init must be zero or random");
  }
  if (!save_prefix.empty()) save_checkpoint(save_prefix, w, cfg);

  const Image img = decode_ppm(read_file(input));
  const Tensor x = image_to_tensor(img);
  const std::size_t h = img.height, wd = img.width;
  const std::size_t ph = (h + 7) / 8 * 8, pw = (wd + 7) / 8 * 8;
  Tensor padded({3, ph, pw});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < ph; ++y)
      for (std::size_t xx = 0; xx < pw; ++xx) padded.at(c, y, xx) = x.at(c, reflect(y, h), reflect(xx, wd));
  ForwardOptions opt;
  opt.exec = s.exec();
  const Tensor restored = backbone_forward(padded, w, cfg, opt);
  Tensor out({3, h, wd});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < wd; ++xx) out.at(c, y, xx) = restored.at(c, y, xx);
  write_file_atomic(output, encode_ppm(tensor_to_image(out)));
  json j;
  j["input"] = input;
  j["output"] = output;
  j["size"] = std::to_string(wd) + "x" + std::to_string(h);
  j["padded"] = std::to_string(pw) + "x" + std::to_string(ph);
  std::cout << j.dump() << '\n';
  return kOk;
}

int cmd_micro_train(const Shared& s, std::size_t steps, double lr, double sigma) {
  ensure_out_dir(s);
  MicroTask task;
  task.seed = s.seed;
  task.sigma = sigma;
  const TrainState st = micro_train(task, steps, lr);
  write_file_atomic(s.out("loss.csv"), loss_history_csv(st));
  save_named_tensors(s.out("micro_weights"), "micro-train", named_tensors(st.params));
  json j;
  j["steps"] = st.steps;
  j["initial_loss"] = st.initial_loss;
  j["final_loss"] = st.loss_history.back();
  j["ratio"] = st.loss_history.back() / st.initial_loss;
  j["s_initial"] = st.initial_s;
  j["s_final"] = st.params.s;
  std::cout << j.dump() << '\n';
  return kOk;
}

int cmd_ablate(const Shared& s) {
  ensure_out_dir(s);
  AblationSpec spec;
  spec.seed = s.seed;
  const auto rows = run_ablation(spec);
  const std::string csv = ablation_csv(rows);
  write_file_atomic(s.out("ablation.csv"), csv);
  std::cout << csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Focused Taylor attention toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Shared s;
  app.add_option("--seed", s.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--config", s.config, "Model config: nano, b, l, xl or a file")->capture_default_str();
  app.add_option("--out-dir", s.out_dir, "Directory for written files")->capture_default_str();
  app.add_option("--format", s.format, "Output format")->check(CLI::IsMember({"csv", "svg", "pgm", "raw"}));
  app.add_option("--threads", s.threads, "OpenMP threads")->check(CLI::Range(1, 1024))->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Run a property suite, JSON lines on stdout");
  std::string suite = "all", fault_name;
  verify->add_option("suite", suite, "kernel, gradients, embedding, backbone, all")
      ->check(CLI::IsMember(verification_suites()));
  verify->add_option("--inject-fault", fault_name, "Self-test hook: phi-sign");

  auto* bench = app.add_subcommand("bench", "Runtime scaling benchmarks");
  std::vector<std::string> ops;
  std::vector<std::size_t> sizes;
  std::size_t reps = 5, head_dim = 16;
  bool speedup = false;
  bench->add_option("--op", ops, "tmsa_linear, tmsa_linear_omp, softmax_oracle, tmsa_quadratic, noop")
      ->delimiter(',');
  bench->add_option("--sizes", sizes, "Token counts (>= 4, increasing)")->delimiter(',');
  bench->add_option("--reps", reps, "Timed repetitions per size")->capture_default_str();
  bench->add_option("--head-dim", head_dim, "Head dimension")->capture_default_str();
  bench->add_flag("--branch-speedup", speedup, "Also time serial vs parallel branch evaluation");

  auto* attn = app.add_subcommand("attn-map", "Render dense attention maps");
  std::string probe = "focusing";
  std::vector<double> p_values;
  std::size_t tokens = 64;
  attn->add_option("--probe", probe, "focusing, uniform or random")->capture_default_str();
  attn->add_option("--p", p_values, "Focused factors for the sweep")->delimiter(',');
  attn->add_option("--tokens", tokens, "Token count for uniform/random probes")->capture_default_str();

  auto* macs = app.add_subcommand("macs", "Closed-form cost calculators");
  std::string kind = "tmsa";
  std::uint64_t mh = 16, mw = 16, md = 8, mk = 3;
  macs->add_option("--kind", kind, "softmax, tmsa, dsdcn, dcn, model")->capture_default_str();
  macs->add_option("--height", mh, "Feature height")->capture_default_str();
  macs->add_option("--width", mw, "Feature width")->capture_default_str();
  macs->add_option("--dim", md, "Channel dimension D")->capture_default_str();
  macs->add_option("--kernel", mk, "Kernel size K")->capture_default_str();

  auto* restore = app.add_subcommand("restore", "Run the backbone on a binary PPM");
  std::string input, output, checkpoint, init = "zero", save_ckpt;
  restore->add_option("--input", input)->required();
  restore->add_option("--output", output)->required();
  restore->add_option("--checkpoint", checkpoint, "Checkpoint prefix");
  restore->add_option("--init", init, "zero or random when no checkpoint")->capture_default_str();
  restore->add_option("--save-checkpoint", save_ckpt, "Write the weights used");

  auto* train = app.add_subcommand("micro-train", "Fit one attention block to synthetic denoising");
  std::size_t steps = 500;
  double lr = kDefaultMicroLr, sigma = 0.1;
  train->add_option("--steps", steps)->capture_default_str();
  train->add_option("--lr", lr)->capture_default_str();
  train->add_option("--sigma", sigma)->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Ablation table over the attention and offset knobs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  omp_set_num_threads(s.threads);
  try {
    if (*verify) return cmd_verify(s, suite, fault_name);
    if (*bench) return cmd_bench(s, ops, sizes, reps, head_dim, speedup);
    if (*attn) return cmd_attn_map(s, probe, p_values, tokens);
    if (*macs) return cmd_macs(s, kind, mh, mw, md, mk);
    if (*restore) return cmd_restore(s, input, output, checkpoint, init, save_ckpt);
    if (*train) return cmd_micro_train(s, steps, lr, sigma);
    if (*ablate) return cmd_ablate(s);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const GuardError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {  // includes ConfigError and ShapeError
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
