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

#include <cstdint>

namespace permlearn {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011). The key is
// the user seed and the high counter words carry a stream id, so draws keyed
// by (seed, stream) are independent of generation order.
class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    // uniform on (0,1), clamped away from both endpoints
    double uniform();
    // standard Gumbel via -log(-log(u))
    double gumbel();
    // standard normal via Box-Muller
    double normal();

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n);

private:
    void advance();

    std::uint32_t key_[2];
    std::uint32_t ctr_[4];
    std::uint32_t out_[4];
    int have_ = 0;          // unread 32-bit words in out_
    bool have_normal_ = false;
    double spare_normal_ = 0.0;
};

// splitmix64 step, used to derive independent substream seeds
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace permlearn
