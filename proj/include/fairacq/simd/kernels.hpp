// Copyright 2026 The fairacq Authors.
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

// Data-parallel inner loops shared by the model, fairness and partition code.
//
// Every kernel has a scalar reference implementation and, where the build and
// the CPU allow it, an AVX2+FMA variant. The variant is chosen once at first
// use; FAIRACQ_SIMD=scalar in the environment forces the reference path.
//
// Matrices are dense row-major; `rows` x `cols` with leading dimension `cols`.

#include <cstddef>
#include <span>
#include <string_view>

namespace fairacq::simd {

struct KernelTable {
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // out[i] = x_i . w + bias
  void (*row_dots)(const double* x, std::size_t rows, std::size_t cols,
                   const double* w, double bias, double* out);

  // Upper triangle of gram += sum_i weights[i] * x_i x_i^T. `gram` is
  // cols x cols row-major; the strict lower triangle is left untouched.
  void (*weighted_gram)(const double* x, std::size_t rows, std::size_t cols,
                        const double* weights, double* gram);

  // out += sum_i weights[i] * x_i
  void (*weighted_row_sum)(const double* x, std::size_t rows, std::size_t cols,
                           const double* weights, double* out);

  // out[i] = sum_j (x_ij - mean_j)^2 * inv_var_j
  void (*diag_mahalanobis)(const double* x, std::size_t rows, std::size_t cols,
                           const double* mean, const double* inv_var,
                           double* out);
};

const KernelTable& scalar_kernels();

// nullptr when the build or the running CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// The table selected for this process.
const KernelTable& active_kernels();

// span wrappers over active_kernels(); sizes are checked with assert only.

double dot(std::span<const double> a, std::span<const double> b);

void axpy(double alpha, std::span<const double> x, std::span<double> y);

void row_dots(std::span<const double> x, std::size_t cols,
              std::span<const double> w, double bias, std::span<double> out);

void weighted_gram(std::span<const double> x, std::size_t cols,
                   std::span<const double> weights, std::span<double> gram);

void weighted_row_sum(std::span<const double> x, std::size_t cols,
                      std::span<const double> weights, std::span<double> out);

void diag_mahalanobis(std::span<const double> x, std::size_t cols,
                      std::span<const double> mean,
                      std::span<const double> inv_var, std::span<double> out);

}  // namespace fairacq::simd
