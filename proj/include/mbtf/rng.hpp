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
#include <random>

#include "mbtf/tensor.hpp"

namespace mbtf {

/// Seeded generator with a platform-independent sequence.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Real-valued draws are derived here rather than through the
/// <random> distributions, whose algorithms are implementation-defined:
///   uniform()  = (bits >> 11) * 2^-53                   in [0, 1)
///   normal()   = Box-Muller on two uniforms, both outputs used in turn
/// Single owner; not thread-safe.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Normal(0, stddev) redrawn until |z| <= bound * stddev.
  double truncated_normal(double stddev, double bound = 2.0);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  Tensor normal_tensor(Shape shape, double stddev = 1.0);
  Tensor uniform_tensor(Shape shape, double lo, double hi);
  Tensor truncated_normal_tensor(Shape shape, double stddev);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mbtf
