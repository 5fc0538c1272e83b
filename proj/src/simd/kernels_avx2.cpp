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

// Compiled with -mavx2 -mfma. Nothing here may run before the dispatcher has
// confirmed CPU support.

#include "fairacq/simd/kernels.hpp"

#if defined(FAIRACQ_ENABLE_AVX2)

#include <immintrin.h>

namespace fairacq::simd {
namespace avx2 {
namespace {

inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double Dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void Axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
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
      Axpy(w * row[a], row + a, gram + a * cols + a, cols - a);
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
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d d =
          _mm256_sub_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(mean + j));
      acc = _mm256_fmadd_pd(_mm256_mul_pd(d, d), _mm256_loadu_pd(inv_var + j),
                            acc);
    }
    double s = HorizontalSum(acc);
    for (; j < cols; ++j) {
      const double d = row[j] - mean[j];
      s += d * d * inv_var[j];
    }
    out[i] = s;
  }
}

}  // namespace

extern const KernelTable kTable;
const KernelTable kTable{
    "avx2",          &Dot,           &Axpy, &RowDots, &WeightedGram,
    &WeightedRowSum, &DiagMahalanobis,
};

}  // namespace avx2
}  // namespace fairacq::simd

#endif  // FAIRACQ_ENABLE_AVX2
