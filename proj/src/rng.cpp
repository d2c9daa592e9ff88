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

#include "permlearn/rng.hpp"

#include <cmath>

namespace permlearn {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t* lo, std::uint32_t* hi) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    *lo = static_cast<std::uint32_t>(p);
    *hi = static_cast<std::uint32_t>(p >> 32);
}

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mul_hi_lo(kPhiloxM4x32A, ctr[0], &lo0, &hi0);
    mul_hi_lo(kPhiloxM4x32B, ctr[2], &lo1, &hi1);
    std::uint32_t c0 = hi1 ^ ctr[1] ^ key[0];
    std::uint32_t c1 = lo1;
    std::uint32_t c2 = hi0 ^ ctr[3] ^ key[1];
    std::uint32_t c3 = lo0;
    ctr[0] = c0;
    ctr[1] = c1;
    ctr[2] = c2;
    ctr[3] = c3;
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(stream);
    ctr_[3] = static_cast<std::uint32_t>(stream >> 32);
}

void Philox::advance() {
    std::uint32_t c[4] = {ctr_[0], ctr_[1], ctr_[2], ctr_[3]};
    std::uint32_t k[2] = {key_[0], key_[1]};
    for (int r = 0; r < 10; ++r) {
        philox_round(c, k);
        k[0] += kPhiloxW32A;
        k[1] += kPhiloxW32B;
    }
    out_[0] = c[0];
    out_[1] = c[1];
    out_[2] = c[2];
    out_[3] = c[3];
    have_ = 4;
    if (++ctr_[0] == 0) ++ctr_[1];  // 64-bit block counter; stream words untouched
}

std::uint64_t Philox::next_u64() {
    if (have_ < 2) advance();
    std::uint64_t lo = out_[4 - have_];
    std::uint64_t hi = out_[4 - have_ + 1];
    have_ -= 2;
    return (hi << 32) | lo;
}

double Philox::uniform() {
    // 53-bit mantissa in [0,1), then clamp into the open interval
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    if (u < 1e-20) u = 1e-20;
    if (u > 1.0 - 1e-20) u = 1.0 - 1e-20;
    return u;
}

double Philox::gumbel() { return -std::log(-std::log(uniform())); }

double Philox::normal() {
    if (have_normal_) {
        have_normal_ = false;
        return spare_normal_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_normal_ = r * std::sin(a);
    have_normal_ = true;
    return r * std::cos(a);
}

std::uint64_t Philox::below(std::uint64_t n) {
    // modulo with rejection to keep the draw unbiased
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace permlearn
