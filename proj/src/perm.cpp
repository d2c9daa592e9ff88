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

#include "permlearn/perm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "permlearn/kernels.hpp"

namespace permlearn {

Permutation::Permutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
    std::vector<char> seen(mapping_.size(), 0);
    for (int v : mapping_) {
        if (v < 0 || static_cast<std::size_t>(v) >= mapping_.size() || seen[v])
            throw DomainError("Permutation: mapping is not a bijection");
        seen[v] = 1;
    }
}

Permutation Permutation::identity(std::size_t n) {
    std::vector<int> m(n);
    std::iota(m.begin(), m.end(), 0);
    return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
    std::vector<int> inv(mapping_.size());
    for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = static_cast<int>(i);
    return Permutation(std::move(inv));
}

Matrix Permutation::to_matrix() const {
    Matrix m(size(), size());
    for (std::size_t i = 0; i < size(); ++i) m(i, mapping_[i]) = 1.0;
    return m;
}

Permutation Permutation::from_matrix(const Matrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("Permutation::from_matrix: matrix not square");
    std::vector<int> mapping(m.rows(), -1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            if (std::fabs(v - 1.0) < 1e-9) {
                if (mapping[i] != -1)
                    throw DomainError("Permutation::from_matrix: two ones in row " +
                                      std::to_string(i));
                mapping[i] = static_cast<int>(j);
            } else if (std::fabs(v) > 1e-9) {
                throw DomainError("Permutation::from_matrix: entry not 0/1");
            }
        }
        if (mapping[i] == -1)
            throw DomainError("Permutation::from_matrix: no one in row " + std::to_string(i));
    }
    return Permutation(std::move(mapping));
}

double DoublyStochasticMatrix::feasibility_deviation(const Matrix& m) {
    const auto& k = kern::ops();
    double worst = 0.0;
    std::vector<double> colsum(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        worst = std::max(worst, std::fabs(k.sum(m.row(i), m.cols()) - 1.0));
        for (std::size_t j = 0; j < m.cols(); ++j) colsum[j] += m(i, j);
    }
    for (double s : colsum) worst = std::max(worst, std::fabs(s - 1.0));
    return worst;
}

DoublyStochasticMatrix::DoublyStochasticMatrix(Matrix entries, double tol) {
    if (entries.rows() != entries.cols())
        throw DimensionError("DoublyStochasticMatrix: matrix not square");
    // a rounding-level excursion outside [0,1] is clamped, anything larger
    // is rejected
    constexpr double slack = 1e-12;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        double& v = entries.data()[i];
        if (!(v >= -slack && v <= 1.0 + slack))
            throw FeasibilityError("DoublyStochasticMatrix: entry outside [0,1]");
        v = std::min(1.0, std::max(0.0, v));
    }
    double dev = feasibility_deviation(entries);
    if (dev > tol)
        throw FeasibilityError("DoublyStochasticMatrix: row/col sum deviates by " +
                               std::to_string(dev) + " > tol " + std::to_string(tol));
    entries_ = std::move(entries);
    tol_ = tol;
}

DoublyStochasticMatrix DoublyStochasticMatrix::with_measured_tol(Matrix entries, double floor) {
    double dev = feasibility_deviation(entries);
    return DoublyStochasticMatrix(std::move(entries), std::max(floor, dev * (1.0 + 1e-9)));
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "frobenius_inner");
    require_finite(a, "frobenius_inner");
    require_finite(b, "frobenius_inner");
    return kern::ops().dot(a.data(), b.data(), a.size());
}

double entropy(const Matrix& p) {
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double v = p.data()[i];
        if (v < 0.0) throw DomainError("entropy: negative entry");
        if (v > 1e-300) h -= v * std::log(v);
    }
    return h;
}

double entropy(const DoublyStochasticMatrix& p) { return entropy(p.entries()); }

double kendall_tau(const Permutation& p, const Permutation& q) {
    if (p.size() != q.size()) throw DimensionError("kendall_tau: size mismatch");
    std::size_t n = p.size();
    if (n < 2) return 1.0;
    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            int dp = p[i] - p[j];
            int dq = q[i] - q[j];
            if ((dp > 0) == (dq > 0))
                ++concordant;
            else
                ++discordant;
        }
    return static_cast<double>(concordant - discordant) /
           (static_cast<double>(n) * (n - 1) / 2.0);
}

MetricsReport reconstruction_metrics(const Matrix& truth, const Permutation& predicted_perm,
                                     const Matrix& scrambled, const Permutation& true_perm) {
    if (truth.rows() != scrambled.rows() || truth.cols() != scrambled.cols() ||
        predicted_perm.size() != truth.rows() || true_perm.size() != truth.rows())
        throw DimensionError("reconstruction_metrics: inconsistent sizes");

    std::size_t n = truth.rows(), d = truth.cols();
    MetricsReport r;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (predicted_perm[i] != true_perm[i]) ++wrong;
    r.prop_wrong = static_cast<double>(wrong) / static_cast<double>(n);
    r.prop_any_wrong = wrong > 0 ? 1.0 : 0.0;
    r.kendall_tau = kendall_tau(predicted_perm, true_perm);

    // reconstruction row i is scrambled row pred^{-1}(i)
    Permutation inv = predicted_perm.inverse();
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* rec = scrambled.row(inv[i]);
        const double* t = truth.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double diff = rec[j] - t[j];
            abs_sum += std::fabs(diff);
            sq_sum += diff * diff;
        }
    }
    r.l1 = abs_sum / static_cast<double>(n * d);
    r.l2 = std::sqrt(sq_sum / static_cast<double>(n * d));
    return r;
}

}  // namespace permlearn
