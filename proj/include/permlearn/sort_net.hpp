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
#include <string>
#include <vector>

#include "permlearn/matching.hpp"
#include "permlearn/perm.hpp"

namespace permlearn {

// Two-layer permutation-equivariant sorting network: a shared per-element
// encoder (1 -> n_units, relu) followed by a shared row head
// (n_units -> N). Row i of the logits depends only on element i, which is
// exactly what makes shuffled inputs produce identically shuffled rows.
struct SortNetParams {
    Matrix w1;  // n_units x 1
    Matrix b1;  // 1 x n_units
    Matrix w2;  // N x n_units
    Matrix b2;  // 1 x N
    int n_units = 32;
    int n = 0;

    static SortNetParams init(int n, int n_units, std::uint64_t seed);
    void validate() const;
};

struct TrainConfig {
    int n = 5;
    double tau = 1.0;
    int iterations = 20;           // Sinkhorn rounds L
    double noise_scale = 1.0;      // Gumbel perturbation scale on the logits
    int samples_per_example = 10;  // Gumbel draws per example
    int batch_size = 10;           // examples per step
    double learning_rate = 1e-3;
    int steps = 10000;
    int n_units = 32;
    std::uint64_t seed = 0;
    double train_low = 0.0, train_high = 1.0;
    double test_low = 0.0, test_high = 1.0;

    void validate() const;
};

// logits row i = W2 relu(W1 x_i + b1) + b2
Matrix logits_from_sequence(const std::vector<double>& x, const SortNetParams& params);

struct SoftRecon {
    std::vector<double> reconstruction;  // S((g + noise*eps)/tau)^T x
    double loss;                         // squared l2 distance to sorted(x)
};

SoftRecon soft_reconstruct(const std::vector<double>& x, const SortNetParams& params, double tau,
                           int iterations, double noise_scale, std::uint64_t seed);

// hungarian(logits); mapping[i] is the predicted rank of element i
Permutation hard_sort(const std::vector<double>& x, const SortNetParams& params);

// rank of each element, i.e. the permutation with sorted = P^T x
Permutation true_sort_permutation(const std::vector<double>& x);

struct TrainResult {
    SortNetParams params;
    std::vector<double> loss_curve;
};

// Minimizes the Monte Carlo surrogate of the reconstruction loss on an
// infinite stream of uniform sequences. Deterministic given cfg.seed.
TrainResult train_sort(const TrainConfig& cfg);

struct EvalResult {
    double prop_any_wrong = 0.0;
    double prop_wrong = 0.0;
    double kendall_tau = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

// Mean metrics over `count` fresh sequences from U(low, high).
EvalResult eval_sort(const SortNetParams& params, int count, double low, double high,
                     std::uint64_t seed);

std::string params_to_json(const SortNetParams& params);
SortNetParams params_from_json(const std::string& text);

}  // namespace permlearn
