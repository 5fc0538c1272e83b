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

#include <cassert>
#include <cstdlib>
#include <string_view>

#include "fairacq/simd/kernels.hpp"

namespace fairacq::simd {

#if defined(FAIRACQ_ENABLE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

namespace {

bool CpuHasAvx2Fma() {
#if defined(FAIRACQ_ENABLE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& Select() {
  const char* env = std::getenv("FAIRACQ_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") {
    return scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(FAIRACQ_ENABLE_AVX2)
  static const bool supported = CpuHasAvx2Fma();
  return supported ? &avx2::kTable : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable& table = Select();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active_kernels().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

void row_dots(std::span<const double> x, std::size_t cols,
              std::span<const double> w, double bias, std::span<double> out) {
  assert(w.size() == cols && x.size() == out.size() * cols);
  active_kernels().row_dots(x.data(), out.size(), cols, w.data(), bias,
                            out.data());
}

void weighted_gram(std::span<const double> x, std::size_t cols,
                   std::span<const double> weights, std::span<double> gram) {
  assert(gram.size() == cols * cols && x.size() == weights.size() * cols);
  active_kernels().weighted_gram(x.data(), weights.size(), cols,
                                 weights.data(), gram.data());
}

void weighted_row_sum(std::span<const double> x, std::size_t cols,
                      std::span<const double> weights, std::span<double> out) {
  assert(out.size() == cols && x.size() == weights.size() * cols);
  active_kernels().weighted_row_sum(x.data(), weights.size(), cols,
                                    weights.data(), out.data());
}

void diag_mahalanobis(std::span<const double> x, std::size_t cols,
                      std::span<const double> mean,
                      std::span<const double> inv_var, std::span<double> out) {
  assert(mean.size() == cols && inv_var.size() == cols &&
         x.size() == out.size() * cols);
  active_kernels().diag_mahalanobis(x.data(), out.size(), cols, mean.data(),
                                    inv_var.data(), out.data());
}

}  // namespace fairacq::simd
