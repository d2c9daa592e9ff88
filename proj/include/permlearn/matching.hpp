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

#include "permlearn/perm.hpp"

namespace permlearn {

// Maximum-weight assignment: argmax_P sum_i X[i, p(i)]. O(N^3) shortest
// augmenting paths on the negated matrix; ties resolved to the lexicographically
// smallest mapping among the optimal assignments.
Permutation hungarian(const Matrix& x);

double assignment_value(const Matrix& x, const Permutation& p);

struct BruteForceResult {
    Permutation perm;
    double value;
    bool is_unique;
};

// N! enumeration oracle; N <= 8
BruteForceResult brute_force_match(const Matrix& x);

}  // namespace permlearn
