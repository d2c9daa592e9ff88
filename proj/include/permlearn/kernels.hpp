// Copyright 2026-present the permlearn project
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

#include <cstddef>

// Vectorized inner loops behind the numeric modules. Every kernel has a
// scalar reference implementation; an AVX2+FMA variant is selected at
// runtime on capable x86 hosts. The environment variable PERMLEARN_KERNELS
// ({auto, scalar, avx2}) overrides the selection.

namespace permlearn::kern {

struct Ops {
    double (*sum)(const double* x, std::size_t n);
    double (*max)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    // dst[i] = exp(src[i])
    void (*exp)(double* dst, const double* src, std::size_t n);
    // max_i x[i] + log(sum_i exp(x[i] - max))
    double (*logsumexp)(const double* x, std::size_t n);
    // x[i] -= c
    void (*sub_scalar)(double* x, std::size_t n, double c);
    // x[i] -= v[i]
    void (*sub_vec)(double* x, const double* v, std::size_t n);
    // acc[i] = max(acc[i], x[i])
    void (*max_into)(double* acc, const double* x, std::size_t n);
    // acc[i] += exp(x[i] - m[i])
    void (*exp_sub_acc)(double* acc, const double* x, const double* m, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double* y, double a, const double* x, std::size_t n);
    // x[i] *= a
    void (*scale)(double* x, double a, std::size_t n);
    // dst[i] = a[i] * b[i]
    void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
    // acc[i] += a[i] * b[i]
    void (*fma_acc)(double* acc, const double* a, const double* b, std::size_t n);
};

// Active table (dispatched once at startup).
const Ops& ops();

// Named tables, used by the equivalence tests.
const Ops& scalar_ops();
bool avx2_available();
const Ops& avx2_ops();  // valid only when avx2_available()

const char* active_backend();  // "scalar" or "avx2"

}  // namespace permlearn::kern
