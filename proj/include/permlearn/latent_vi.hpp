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
#include <vector>

#include "permlearn/gumbel.hpp"
#include "permlearn/perm.hpp"

namespace permlearn {

// Synthetic matching problem: observed rows are a noisy row-permutation of a
// canonical template, observed = P*^T template + N(0, sigma^2).
struct SyntheticMatchTask {
    Matrix tmpl;      // N x D canonical items
    Matrix observed;  // N x D
    Permutation true_perm;
    double sigma = 0.0;
    std::uint64_t seed = 0;

    static SyntheticMatchTask make(int n, int d, double sigma, std::uint64_t seed);
};

struct VariationalState {
    Matrix x;  // posterior parameter of G.S.(X, tau)
    double tau = 1.0;
    double tau_prior = 1.0;
    int mc_samples = 1;

    void validate() const;
};

// Monte Carlo surrogate ELBO with the KL evaluated in Gumbel code space:
// mean_s log N(observed; S_s^T template, sigma^2) - KL((X+eps)/tau || eps/tau_prior)
double surrogate_elbo(const VariationalState& state, const SyntheticMatchTask& task,
                      std::uint64_t seed, int sinkhorn_iterations = 20);

struct FitResult {
    VariationalState state;
    double accuracy;  // fraction of rows where hungarian(X) matches P*
    std::vector<double> elbo_trace;
};

FitResult fit_posterior(const SyntheticMatchTask& task, VariationalState init, int steps,
                        std::uint64_t seed, bool use_kl = true, double learning_rate = 0.1,
                        int sinkhorn_iterations = 20);

// Metropolis over permutations with random transposition proposals targeting
// the gaussian likelihood (exact row-match score when sigma == 0). Returns
// the accuracy of the most-visited assignment per row.
double mcmc_baseline(const SyntheticMatchTask& task, int sweeps, std::uint64_t seed);

}  // namespace permlearn
