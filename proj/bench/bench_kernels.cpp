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

// Serial vs OpenMP timings for the parallel kernels. Each pair is also
// checked for bit-identical output, since the parallel paths only split
// work across independent output elements.
//
//   bench_kernels [threads] [reps]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "mbtf/backbone.hpp"
#include "mbtf/conv.hpp"
#include "mbtf/embedding.hpp"
#include "mbtf/rng.hpp"

using namespace mbtf;

namespace {

double median_seconds(const std::function<Tensor()>& fn, int reps, Tensor* last) {
  *last = fn();  // warm-up
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    *last = fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

bool compare(const char* name, const std::function<Tensor(Exec)>& fn, int reps) {
  Tensor serial, parallel;
  const double ts = median_seconds([&] { return fn(Exec::kSerial); }, reps, &serial);
  const double tp = median_seconds([&] { return fn(Exec::kParallel); }, reps, &parallel);
  const bool same = serial == parallel;
  std::printf("%-22s %12.6f %12.6f %8.2fx  %s\n", name, ts, tp, ts / tp, same ? "identical" : "MISMATCH");
  return same;
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  if (threads < 1 || reps < 1) {
    std::fprintf(stderr, "usage: bench_kernels [threads >= 1] [reps >= 1]\n");
    return 2;
  }
  omp_set_num_threads(threads);
  std::printf("threads %d, reps %d (median seconds)\n", threads, reps);
  std::printf("%-22s %12s %12s %9s\n", "kernel", "serial", "parallel", "speedup");

  Rng rng(7);
  const Tensor a = rng.normal_tensor({256, 256}), b = rng.normal_tensor({256, 256});
  const QkvTriple t{rng.normal_tensor({16384, 16}), rng.normal_tensor({16384, 16}), rng.normal_tensor({16384, 16})};
  AttentionConfig cfg;
  cfg.head_dim = 16;
  const Tensor fmap = rng.normal_tensor({32, 64, 64});
  const Tensor dw = rng.normal_tensor({32, 5, 5}), pw = rng.normal_tensor({32, 32});
  DsdcnConfig dcfg;
  dcfg.in_channels = dcfg.out_channels = 32;
  const DsdcnWeights dwts = init_dsdcn_weights(dcfg, rng);
  const ModelConfig nano = ModelConfig::nano();
  const ModelWeights mw = init_model_weights(nano, rng);
  const Tensor image = rng.uniform_tensor({3, 64, 64}, 0.0, 1.0);

  bool ok = true;
  ok &= compare("matmul 256", [&](Exec e) { return matmul(a, b, e); }, reps);
  ok &= compare("tmsa_linear n=16384", [&](Exec e) { return tmsa_linear(t, cfg, e); }, reps);
  ok &= compare("depthwise 5x5", [&](Exec e) { return depthwise_conv2d(fmap, dw, Tensor(), 1, e); }, reps);
  ok &= compare("pointwise", [&](Exec e) { return pointwise_conv(fmap, pw, Tensor(), e); }, reps);
  ok &= compare("dsdcn", [&](Exec e) { return dsdcn_forward(fmap, dwts, dcfg, e); }, reps);
  ok &= compare("backbone nano 64x64", [&](Exec e) {
    ForwardOptions opt;
    opt.exec = e;
    return backbone_forward(image, mw, nano, opt);
  }, reps);
  return ok ? 0 : 1;
}
