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

#include "permlearn/kernels.hpp"

#include <cmath>

namespace permlearn::kern {
namespace scalar {

double sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double max(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void exp(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = std::exp(src[i]);
}

double logsumexp(const double* x, std::size_t n) {
    double m = max(x, n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

void sub_scalar(double* x, std::size_t n, double c) {
    for (std::size_t i = 0; i < n; ++i) x[i] -= c;
}

void sub_vec(double* x, const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] -= v[i];
}

void max_into(double* acc, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > acc[i]) acc[i] = x[i];
}

void exp_sub_acc(double* acc, const double* x, const double* m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += std::exp(x[i] - m[i]);
}

void axpy(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void mul(double* dst, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void fma_acc(double* acc, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += a[i] * b[i];
}

}  // namespace scalar

const Ops& scalar_ops() {
    static const Ops table = {
        scalar::sum,        scalar::max,      scalar::dot,     scalar::exp,
        scalar::logsumexp,  scalar::sub_scalar, scalar::sub_vec, scalar::max_into,
        scalar::exp_sub_acc, scalar::axpy,    scalar::scale,   scalar::mul,
        scalar::fma_acc,
    };
    return table;
}

}  // namespace permlearn::kern
