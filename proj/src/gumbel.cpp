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

#include "permlearn/gumbel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "permlearn/rng.hpp"

namespace permlearn {

Matrix gumbel_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    Philox rng(seed);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gumbel();
    return m;
}

GumbelNoise sample_gumbel(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample_gumbel: n must be >= 1");
    return {gumbel_matrix(n, n, seed), seed};
}

Permutation sample_gumbel_matching(const Matrix& x, std::uint64_t seed) {
    require_finite(x, "sample_gumbel_matching");
    Matrix noisy = x;
    Matrix eps = gumbel_matrix(x.rows(), x.cols(), seed);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy.data()[i] += eps.data()[i];
    return hungarian(noisy);
}

DoublyStochasticMatrix sample_gumbel_sinkhorn(const Matrix& x, const SinkhornConfig& cfg,
                                              std::uint64_t seed) {
    require_finite(x, "sample_gumbel_sinkhorn");
    Matrix noisy = x;
    Matrix eps = gumbel_matrix(x.rows(), x.cols(), seed);
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy.data()[i] += eps.data()[i];
    return sinkhorn(noisy, cfg);
}

void KlParams::validate() const {
    if (!(tau > 0.0) || !(tau_prior > 0.0))
        throw DomainError("KlParams: temperatures must be positive");
    require_finite(x, "KlParams");
}

namespace {

// Gamma(1+r) via lgamma; r is capped so the value stays finite in double
// precision.
double gamma_1p(double r) {
    if (r > 50.0)
        throw OverflowError("kl_gumbel_space: tau_prior/tau = " + std::to_string(r) +
                            " exceeds 50; Gamma(1+r) would be astronomically large");
    return std::exp(std::lgamma(1.0 + r));
}

}  // namespace

double kl_gumbel_space(const KlParams& p) {
    p.validate();
    const double r = p.tau_prior / p.tau;
    const double gamma_r = gamma_1p(r);
    const double n2 = static_cast<double>(p.x.size());

    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        double xv = p.x.data()[i];
        double arg = -xv * r;
        if (arg > 700.0)
            throw OverflowError("kl_gumbel_space: exp(-x*tau_prior/tau) overflows at entry " +
                                std::to_string(i) + " (x = " + std::to_string(xv) + ")");
        s1 += xv;
        s2 += std::exp(arg);
    }
    return n2 * (std::log(p.tau / p.tau_prior) - 1.0 + kEulerMascheroni * (r - 1.0)) + r * s1 +
           gamma_r * s2;
}

Matrix kl_gumbel_space_grad(const Matrix& x, double tau, double tau_prior) {
    KlParams p{x, tau, tau_prior};
    p.validate();
    const double r = tau_prior / tau;
    const double gamma_r = gamma_1p(r);
    Matrix g(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double arg = -x.data()[i] * r;
        if (arg > 700.0)
            throw OverflowError("kl_gumbel_space_grad: exp overflow at entry " +
                                std::to_string(i));
        g.data()[i] = r - gamma_r * r * std::exp(arg);
    }
    return g;
}

double gumbel_affine_log_density(double z, double a, double b) {
    return std::log(b) - (b * z - a + std::exp(a - b * z));
}

double discrete_kl(const std::vector<double>& q, const std::vector<double>& p) {
    if (q.size() != p.size()) throw DimensionError("discrete_kl: support size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] < 0.0 || p[i] < 0.0) throw DomainError("discrete_kl: negative probability");
        if (q[i] == 0.0) continue;
        if (p[i] == 0.0) return std::numeric_limits<double>::infinity();
        kl += q[i] * std::log(q[i] / p[i]);
    }
    return kl;
}

std::pair<double, double> kl_data_processing_check(const std::vector<double>& q,
                                                   const std::vector<double>& p,
                                                   const std::vector<int>& g) {
    if (g.size() != q.size()) throw DimensionError("kl_data_processing_check: map size mismatch");
    double before = discrete_kl(q, p);
    int image_size = 0;
    for (int v : g) {
        if (v < 0) throw DomainError("kl_data_processing_check: negative image index");
        image_size = std::max(image_size, v + 1);
    }
    std::vector<double> gq(image_size, 0.0), gp(image_size, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        gq[g[i]] += q[i];
        gp[g[i]] += p[i];
    }
    double after = discrete_kl(gq, gp);
    return {before, after};
}

}  // namespace permlearn
