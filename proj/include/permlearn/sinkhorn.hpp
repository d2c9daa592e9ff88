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

#include <vector>

#include "permlearn/perm.hpp"

namespace permlearn {

// Truncated, temperature-scaled Sinkhorn normalization. Each round applies
// row normalization then column normalization to exp(X/tau); the column pass
// comes last, so column sums are exact and row sums carry the truncation
// residual. L is always fully unrolled (no early stopping) so that forward
// and backward passes see the same iteration count.
struct SinkhornConfig {
    double tau = 1.0;
    int iterations = 20;
    bool log_space = true;
    // optional extra row pass after the last round; off by default
    bool final_row_pass = false;

    void validate() const;
};

// log S^L(X/tau); every entry <= 0
Matrix log_sinkhorn(const Matrix& x, const SinkhornConfig& cfg);

DoublyStochasticMatrix sinkhorn(const Matrix& x, const SinkhornConfig& cfg);

// <P,X>_F + tau * h(P), the objective S(X/tau) maximizes over the Birkhoff
// polytope
double entropy_reg_objective(const DoublyStochasticMatrix& p, const Matrix& x, double tau);

// single row-normalization of exp(x/tau); the 1-row specialization of the
// operator
std::vector<double> softmax(const std::vector<double>& x, double tau);

}  // namespace permlearn
