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

#include "fairacq/simd/kernels.hpp"

namespace fairacq::simd {
namespace generic {
namespace {

double Dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void RowDots(const double* x, std::size_t rows, std::size_t cols,
             const double* w, double bias, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    out[i] = Dot(x + i * cols, w, cols) + bias;
  }
}

void WeightedGram(const double* x, std::size_t rows, std::size_t cols,
                  const double* weights, double* gram) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = x + i * cols;
    const double w = weights[i];
    for (std::size_t a = 0; a < cols; ++a) {
      const double c = w * row[a];
      double* g = gram + a * cols;
      for (std::size_t b = a; b < cols; ++b) g[b] += c * row[b];
    }
  }
}

void WeightedRowSum(const double* x, std::size_t rows, std::size_t cols,
                    const double* weights, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    Axpy(weights[i], x + i * cols, out, cols);
  }
}

void DiagMahalanobis(const double* x, std::size_t rows, std::size_t cols,
                     const double* mean, const double* inv_var, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = x + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = row[j] - mean[j];
      acc += d * d * inv_var[j];
    }
    out[i] = acc;
  }
}

}  // namespace

const KernelTable kTable{
    "scalar",   &Dot,           &Axpy, &RowDots, &WeightedGram,
    &WeightedRowSum, &DiagMahalanobis,
};

}  // namespace generic

const KernelTable& scalar_kernels() { return generic::kTable; }

}  // namespace fairacq::simd
