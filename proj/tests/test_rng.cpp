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
#include <set>
#include <vector>

#include <doctest.h>

#include "permlearn/rng.hpp"

using namespace permlearn;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the stream bitwise") {
    Philox a(123), b(123);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("seeds and streams decorrelate") {
    Philox a(123, 0), b(123, 1), c(124, 0);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t va = a.next_u64();
        same_ab += va == b.next_u64();
        same_ac += va == c.next_u64();
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("uniform stays inside the open unit interval") {
    Philox rng(5);
    double mean = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        mean += u / n;
    }
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal moments") {
    Philox rng(6);
    const int n = 200000;
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        mean += z / n;
        sq += z * z / n;
    }
    CHECK(std::fabs(mean) < 0.01);
    CHECK(sq == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("below is unbiased over small ranges") {
    Philox rng(7);
    std::vector<int> counts(5, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.below(5)];
    for (int c : counts) CHECK(std::fabs(c / double(n) - 0.2) < 0.01);
}

TEST_CASE("mix_seed separates indices") {
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(mix_seed(42, i));
    CHECK(seen.size() == 1000);
    CHECK(mix_seed(42, 1) != mix_seed(43, 1));
}

}  // TEST_SUITE
