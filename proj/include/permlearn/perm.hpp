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

#include "permlearn/matrix.hpp"

namespace permlearn {

// Bijection on {0..N-1}. mapping[i] is the column assigned to row i of the
// corresponding permutation matrix: P(i, mapping[i]) = 1. A stacked object
// X~ is unscrambled as X_rec = P^T X~; every module uses this orientation.
class Permutation {
public:
    Permutation() = default;  // empty permutation
    explicit Permutation(std::vector<int> mapping);
    static Permutation identity(std::size_t n);

    std::size_t size() const { return mapping_.size(); }
    int operator[](std::size_t i) const { return mapping_[i]; }
    const std::vector<int>& mapping() const { return mapping_; }

    Permutation inverse() const;
    Matrix to_matrix() const;
    static Permutation from_matrix(const Matrix& m);

    bool operator==(const Permutation& o) const { return mapping_ == o.mapping_; }

private:
    std::vector<int> mapping_;
};

// Element of the Birkhoff polytope. `tol` is the feasibility the entries
// actually satisfy: every row and column sum lies within tol of 1.
class DoublyStochasticMatrix {
public:
    static constexpr double kDefaultTol = 1e-6;

    // Validates against the given tolerance; throws FeasibilityError.
    DoublyStochasticMatrix(Matrix entries, double tol = kDefaultTol);

    // Accepts any near-feasible matrix and records the measured deviation
    // (never below `floor`) as the tolerance.
    static DoublyStochasticMatrix with_measured_tol(Matrix entries, double floor = kDefaultTol);

    const Matrix& entries() const { return entries_; }
    double tol() const { return tol_; }
    std::size_t size() const { return entries_.rows(); }

    // worst |row sum - 1| / |col sum - 1| of an arbitrary square matrix
    static double feasibility_deviation(const Matrix& m);

private:
    DoublyStochasticMatrix() = default;
    Matrix entries_;
    double tol_ = kDefaultTol;
};

struct MetricsReport {
    double prop_any_wrong = 0.0;  // 1 if any position differs, else 0
    double prop_wrong = 0.0;      // fraction of positions assigned differently
    double kendall_tau = 1.0;
    double l1 = 0.0;  // mean absolute reconstruction error
    double l2 = 0.0;  // root mean squared reconstruction error
};

// trace(A^T B) = sum of elementwise products
double frobenius_inner(const Matrix& a, const Matrix& b);

// h(P) = -sum p log p with 0 log 0 := 0 (entries below 1e-300 are dropped)
double entropy(const DoublyStochasticMatrix& p);
double entropy(const Matrix& p);

// Kendall tau-a over pair concordance; permutations carry no ties.
double kendall_tau(const Permutation& p, const Permutation& q);

// Rows of `truth` and `scrambled` are the object pieces (row-permuted by the
// true permutation). The predicted reconstruction is P_pred^T scrambled.
MetricsReport reconstruction_metrics(const Matrix& truth, const Permutation& predicted_perm,
                                     const Matrix& scrambled, const Permutation& true_perm);

}  // namespace permlearn
