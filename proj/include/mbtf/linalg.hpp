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

#include <vector>

#include "mbtf/tensor.hpp"

namespace mbtf {

/// Selects the serial reference loop or the OpenMP kernel. Both produce
/// bit-identical results: parallel kernels only split work across output
/// elements and keep every per-element accumulation in serial order.
enum class Exec { kSerial, kParallel };

/// a[m x k] * b[k x n]. Each output element accumulates over k in ascending
/// order in both execution modes.
Tensor matmul(const Tensor& a, const Tensor& b, Exec exec = Exec::kSerial);

/// Scales every row to unit Euclidean norm. All-zero rows stay zero.
Tensor normalize_rows(const Tensor& x);

/// Singular values in descending order.
std::vector<double> singular_values(const Tensor& m);

/// Number of singular values above tol * sigma_max.
std::size_t rank_estimate(const Tensor& m, double tol = 1e-8);

/// Bilinear interpolation of channel `channel` of a D x h x w feature map at
/// real coordinates (y, x). Neighbours outside the map read as zero.
double bilinear_sample(const Tensor& feature, double y, double x, std::size_t channel);

/// Unchecked core of bilinear_sample on one h x w plane.
double bilinear_sample_plane(std::span<const double> plane, std::size_t h, std::size_t w, double y,
                             double x);

}  // namespace mbtf
