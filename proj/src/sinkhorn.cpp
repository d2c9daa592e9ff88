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

#include "permlearn/sinkhorn.hpp"

#include <cmath>
#include <limits>

#include "permlearn/kernels.hpp"

namespace permlearn {

void SinkhornConfig::validate() const {
    if (!(tau > 0.0)) throw DomainError("SinkhornConfig: tau must be positive");
    if (iterations < 1) throw DomainError("SinkhornConfig: iterations must be >= 1");
}

namespace {

void row_normalize_log(Matrix& l) {
    const auto& k = kern::ops();
    for (std::size_t i = 0; i < l.rows(); ++i) {
        double* r = l.row(i);
        k.sub_scalar(r, l.cols(), k.logsumexp(r, l.cols()));
    }
}

void col_normalize_log(Matrix& l) {
    const auto& k = kern::ops();
    std::size_t n = l.cols();
    std::vector<double> colmax(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < l.rows(); ++i) k.max_into(colmax.data(), l.row(i), n);
    std::vector<double> colsum(n, 0.0);
    for (std::size_t i = 0; i < l.rows(); ++i)
        k.exp_sub_acc(colsum.data(), l.row(i), colmax.data(), n);
    std::vector<double> collse(n);
    for (std::size_t j = 0; j < n; ++j) collse[j] = colmax[j] + std::log(colsum[j]);
    for (std::size_t i = 0; i < l.rows(); ++i) k.sub_vec(l.row(i), collse.data(), n);
}

Matrix naive_sinkhorn(const Matrix& x, const SinkhornConfig& cfg) {
    const auto& k = kern::ops();
    Matrix s(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) s.data()[i] = std::exp(x.data()[i] / cfg.tau);
    if (!all_finite(s)) throw OverflowError("sinkhorn: exp(X/tau) overflowed; use log_space");
    std::size_t n = x.cols();
    for (int it = 0; it < cfg.iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) k.scale(s.row(i), 1.0 / k.sum(s.row(i), n), n);
        std::vector<double> colsum(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) c += s(i, j);
            colsum[j] = c;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) s(i, j) /= colsum[j];
    }
    if (cfg.final_row_pass)
        for (std::size_t i = 0; i < n; ++i) k.scale(s.row(i), 1.0 / k.sum(s.row(i), n), n);
    if (!all_finite(s)) throw OverflowError("sinkhorn: non-finite value in naive iteration");
    return s;
}

}  // namespace

Matrix log_sinkhorn(const Matrix& x, const SinkhornConfig& cfg) {
    cfg.validate();
    require_finite(x, "sinkhorn");
    if (x.rows() != x.cols()) throw DimensionError("sinkhorn: matrix not square");

    Matrix l = x;
    kern::ops().scale(l.data(), 1.0 / cfg.tau, l.size());
    for (int it = 0; it < cfg.iterations; ++it) {
        row_normalize_log(l);
        col_normalize_log(l);
    }
    if (cfg.final_row_pass) row_normalize_log(l);
    return l;
}

DoublyStochasticMatrix sinkhorn(const Matrix& x, const SinkhornConfig& cfg) {
    Matrix s;
    if (cfg.log_space) {
        Matrix l = log_sinkhorn(x, cfg);
        s = Matrix(l.rows(), l.cols());
        kern::ops().exp(s.data(), l.data(), l.size());
    } else {
        cfg.validate();
        require_finite(x, "sinkhorn");
        if (x.rows() != x.cols()) throw DimensionError("sinkhorn: matrix not square");
        s = naive_sinkhorn(x, cfg);
    }
    return DoublyStochasticMatrix::with_measured_tol(std::move(s));
}

double entropy_reg_objective(const DoublyStochasticMatrix& p, const Matrix& x, double tau) {
    if (!(tau > 0.0)) throw DomainError("entropy_reg_objective: tau must be positive");
    if (DoublyStochasticMatrix::feasibility_deviation(p.entries()) > p.tol())
        throw FeasibilityError("entropy_reg_objective: P violates its own tolerance");
    return frobenius_inner(p.entries(), x) + tau * entropy(p);
}

std::vector<double> softmax(const std::vector<double>& x, double tau) {
    if (!(tau > 0.0)) throw DomainError("softmax: tau must be positive");
    const auto& k = kern::ops();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / tau;
    double lse = k.logsumexp(y.data(), y.size());
    k.sub_scalar(y.data(), y.size(), lse);
    k.exp(y.data(), y.data(), y.size());
    return y;
}

}  // namespace permlearn
