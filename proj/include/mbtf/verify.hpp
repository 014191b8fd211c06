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
#include <vector>

namespace mbtf {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double value = 0.0;      ///< measured quantity (error, count, ...)
  double tolerance = 0.0;  ///< bound it was held to
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  /// One JSON object per line, fixed key order, no timings.
  std::string to_jsonl() const;
};

/// kernel, gradients, embedding, backbone, all.
const std::vector<std::string>& verification_suites();

/// Runs one suite (or all). Throws std::invalid_argument on an unknown name.
VerificationReport run_verification(const std::string& suite, std::uint64_t seed);

}  // namespace mbtf
