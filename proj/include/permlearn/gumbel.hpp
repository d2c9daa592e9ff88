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
#include <utility>
#include <vector>

#include "permlearn/matching.hpp"
#include "permlearn/sinkhorn.hpp"

namespace permlearn {

constexpr double kEulerMascheroni = 0.57721566490153286060651209008240243;

struct GumbelNoise {
    Matrix entries;
    std::uint64_t seed;
};

// n x n i.i.d. standard Gumbel entries; a pure function of (n, seed)
GumbelNoise sample_gumbel(std::size_t n, std::uint64_t seed);
Matrix gumbel_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

// hungarian(X + eps): a Gumbel-Matching draw
Permutation sample_gumbel_matching(const Matrix& x, std::uint64_t seed);

// sinkhorn(X + eps, cfg): a Gumbel-Sinkhorn draw; as tau -> 0 with growing L
// it approaches the matching draw with the same noise
DoublyStochasticMatrix sample_gumbel_sinkhorn(const Matrix& x, const SinkhornConfig& cfg,
                                              std::uint64_t seed);

struct KlParams {
    Matrix x;          // posterior parameter
    double tau;        // posterior temperature
    double tau_prior;  // prior temperature

    void validate() const;
};

// Closed-form KL between the Gumbel-space codes (X+eps)/tau and
// eps/tau_prior:
//   N^2 (log(tau/tau_prior) - 1 + gamma (tau_prior/tau - 1))
//     + (tau_prior/tau) sum x_ij
//     + Gamma(1 + tau_prior/tau) sum exp(-x_ij tau_prior/tau)
double kl_gumbel_space(const KlParams& p);

// d kl / d x_ij, used by the variational fit
Matrix kl_gumbel_space_grad(const Matrix& x, double tau, double tau_prior);

// log density of (a + g)/b at z, g standard Gumbel:
// log b - (b z - a + exp(a - b z))
double gumbel_affine_log_density(double z, double a, double b);

// Exact discrete KL(q||p); +inf when q puts mass where p has none.
double discrete_kl(const std::vector<double>& q, const std::vector<double>& p);

// KLs before and after pushing both distributions through the deterministic
// map g (g[i] = index of the image point). Data processing:
// first >= second.
std::pair<double, double> kl_data_processing_check(const std::vector<double>& q,
                                                   const std::vector<double>& p,
                                                   const std::vector<int>& g);

}  // namespace permlearn
