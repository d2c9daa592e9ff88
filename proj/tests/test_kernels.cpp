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

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <doctest.h>

#include "permlearn/kernels.hpp"
#include "permlearn/rng.hpp"

using namespace permlearn;

namespace {

constexpr double kRelTol = 1e-14;

bool close(double a, double b, double rel = kRelTol) {
    double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
    return std::fabs(a - b) <= rel * scale;
}

std::vector<double> random_vec(std::size_t n, double lo, double hi, Philox& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

// every length from 1 to a few vector widths, plus ragged tails
const std::size_t kLengths[] = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 67, 128, 200};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar and simd variants agree elementwise") {
    if (!kern::avx2_available()) return;
    const auto& s = kern::scalar_ops();
    const auto& v = kern::avx2_ops();
    Philox rng(42);

    for (std::size_t n : kLengths) {
        CAPTURE(n);
        auto a = random_vec(n, -30.0, 30.0, rng);
        auto b = random_vec(n, -30.0, 30.0, rng);

        // reductions reorder; compare against the accumulated magnitude
        double mag_sum = 0.0, mag_dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mag_sum += std::fabs(a[i]);
            mag_dot += std::fabs(a[i] * b[i]);
        }
        CHECK(std::fabs(s.sum(a.data(), n) - v.sum(a.data(), n)) <= kRelTol * (mag_sum + 1.0));
        CHECK(s.max(a.data(), n) == v.max(a.data(), n));
        CHECK(std::fabs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <=
              kRelTol * (mag_dot + 1.0));
        CHECK(close(s.logsumexp(a.data(), n), v.logsumexp(a.data(), n)));

        std::vector<double> es(n), ev(n);
        s.exp(es.data(), a.data(), n);
        v.exp(ev.data(), a.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(es[i], ev[i]));

        auto xs = a, xv = a;
        s.sub_scalar(xs.data(), n, 1.25);
        v.sub_scalar(xv.data(), n, 1.25);
        CHECK(xs == xv);

        xs = a;
        xv = a;
        s.sub_vec(xs.data(), b.data(), n);
        v.sub_vec(xv.data(), b.data(), n);
        CHECK(xs == xv);

        xs = a;
        xv = a;
        s.max_into(xs.data(), b.data(), n);
        v.max_into(xv.data(), b.data(), n);
        CHECK(xs == xv);

        auto accs = random_vec(n, 0.0, 1.0, rng);
        auto accv = accs;
        s.exp_sub_acc(accs.data(), a.data(), b.data(), n);
        v.exp_sub_acc(accv.data(), a.data(), b.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(accs[i], accv[i]));

        xs = a;
        xv = a;
        s.axpy(xs.data(), 0.37, b.data(), n);
        v.axpy(xv.data(), 0.37, b.data(), n);
        // fma contraction differs from mul+add by at most one product ulp
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::fabs(xs[i] - xv[i]) <= kRelTol * (std::fabs(0.37 * b[i]) + 1.0));

        xs = a;
        xv = a;
        s.scale(xs.data(), -2.5, n);
        v.scale(xv.data(), -2.5, n);
        CHECK(xs == xv);

        std::vector<double> ms(n), mv(n);
        s.mul(ms.data(), a.data(), b.data(), n);
        v.mul(mv.data(), a.data(), b.data(), n);
        CHECK(ms == mv);

        accs = random_vec(n, -1.0, 1.0, rng);
        accv = accs;
        s.fma_acc(accs.data(), a.data(), b.data(), n);
        v.fma_acc(accv.data(), a.data(), b.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::fabs(accs[i] - accv[i]) <= kRelTol * (std::fabs(a[i] * b[i]) + 1.0));
    }
}

TEST_CASE("simd exp tracks libm across the working range") {
    if (!kern::avx2_available()) return;
    const auto& v = kern::avx2_ops();
    Philox rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        auto x = random_vec(16, -700.0, 700.0, rng);
        std::vector<double> got(16);
        v.exp(got.data(), x.data(), 16);
        for (int i = 0; i < 16; ++i) {
            double want = std::exp(x[i]);
            CHECK(std::fabs(got[i] - want) <= 4e-16 * std::max(want, 1e-300) + 1e-300);
        }
    }
}

TEST_CASE("logsumexp is stable at extreme magnitudes") {
    const auto& k = kern::ops();
    std::vector<double> big = {1000.0, 1000.0};
    CHECK(close(k.logsumexp(big.data(), 2), 1000.0 + std::log(2.0), 1e-15));
    std::vector<double> tiny = {-1000.0, -1000.0, -1000.0, -1000.0};
    CHECK(close(k.logsumexp(tiny.data(), 4), -1000.0 + std::log(4.0), 1e-15));
}

TEST_CASE("backend selection reports a valid table") {
    std::string name = kern::active_backend();
    CHECK((name == "scalar" || name == "avx2"));
    std::vector<double> x = {1.0, 2.0, 3.0};
    CHECK(kern::ops().sum(x.data(), 3) == doctest::Approx(6.0));
}

}  // TEST_SUITE
