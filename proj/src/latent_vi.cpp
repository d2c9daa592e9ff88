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

#include "permlearn/latent_vi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "permlearn/kernels.hpp"
#include "permlearn/optim.hpp"
#include "permlearn/rng.hpp"
#include "permlearn/tape.hpp"

namespace permlearn {

namespace {

constexpr std::uint64_t kTagTemplate = 0x11;
constexpr std::uint64_t kTagPerm = 0x12;
constexpr std::uint64_t kTagObsNoise = 0x13;
constexpr std::uint64_t kTagElbo = 0x14;
constexpr std::uint64_t kTagFit = 0x15;
constexpr std::uint64_t kTagMcmc = 0x16;

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

double match_fraction(const Permutation& a, const Permutation& b) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(a.size());
}

// log N(observed; recon, sigma^2) summed over all N*D entries
double gaussian_loglik(const Matrix& observed, const Matrix& recon, double sigma) {
    double sq = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double d = observed.data()[i] - recon.data()[i];
        sq += d * d;
    }
    double nd = static_cast<double>(observed.size());
    return -sq / (2.0 * sigma * sigma) - nd * (std::log(sigma) + kLogSqrt2Pi);
}

}  // namespace

SyntheticMatchTask SyntheticMatchTask::make(int n, int d, double sigma, std::uint64_t seed) {
    if (n < 2 || d < 1) throw DomainError("SyntheticMatchTask: need n >= 2, d >= 1");
    if (sigma < 0.0) throw DomainError("SyntheticMatchTask: sigma must be >= 0");

    SyntheticMatchTask task;
    task.sigma = sigma;
    task.seed = seed;

    Philox trng(mix_seed(seed, kTagTemplate));
    task.tmpl = Matrix(n, d);
    for (std::size_t i = 0; i < task.tmpl.size(); ++i) task.tmpl.data()[i] = trng.normal();

    Philox prng(mix_seed(seed, kTagPerm));
    std::vector<int> mapping(n);
    std::iota(mapping.begin(), mapping.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(mapping[i], mapping[prng.below(static_cast<std::uint64_t>(i) + 1)]);
    task.true_perm = Permutation(mapping);

    // observed = P*^T template + noise, so observed row i is template row
    // pinv(i) plus noise
    Permutation pinv = task.true_perm.inverse();
    Philox nrng(mix_seed(seed, kTagObsNoise));
    task.observed = Matrix(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            task.observed(i, j) = task.tmpl(pinv[i], j) + sigma * nrng.normal();
    return task;
}

void VariationalState::validate() const {
    if (!(tau > 0.0) || !(tau_prior > 0.0))
        throw DomainError("VariationalState: temperatures must be positive");
    if (mc_samples < 1) throw DomainError("VariationalState: mc_samples must be >= 1");
    require_finite(x, "VariationalState");
}

double surrogate_elbo(const VariationalState& state, const SyntheticMatchTask& task,
                      std::uint64_t seed, int sinkhorn_iterations) {
    state.validate();
    if (!(task.sigma > 0.0))
        throw DomainError("surrogate_elbo: sigma must be positive (likelihood degenerate)");
    if (state.x.rows() != task.tmpl.rows())
        throw DimensionError("surrogate_elbo: X and task sizes differ");

    SinkhornConfig cfg;
    cfg.tau = state.tau;
    cfg.iterations = sinkhorn_iterations;

    const std::uint64_t key = mix_seed(seed, kTagElbo);
    double ll = 0.0;
    for (int s = 0; s < state.mc_samples; ++s) {
        Matrix noisy = state.x;
        Matrix eps = gumbel_matrix(noisy.rows(), noisy.cols(), mix_seed(key, s));
        for (std::size_t i = 0; i < noisy.size(); ++i) noisy.data()[i] += eps.data()[i];
        Matrix smat = sinkhorn(noisy, cfg).entries();
        Matrix recon = matmul(transpose(smat), task.tmpl);
        ll += gaussian_loglik(task.observed, recon, task.sigma);
    }
    ll /= state.mc_samples;
    return ll - kl_gumbel_space({state.x, state.tau, state.tau_prior});
}

FitResult fit_posterior(const SyntheticMatchTask& task, VariationalState init, int steps,
                        std::uint64_t seed, bool use_kl, double learning_rate,
                        int sinkhorn_iterations) {
    init.validate();
    if (!(task.sigma > 0.0))
        throw DomainError("fit_posterior: sigma must be positive (likelihood degenerate)");
    if (steps < 0) throw DomainError("fit_posterior: steps must be >= 0");

    VariationalState state = std::move(init);
    const double inv_var2 = 1.0 / (2.0 * task.sigma * task.sigma);
    const double nd = static_cast<double>(task.observed.size());
    const double ll_const = nd * (std::log(task.sigma) + kLogSqrt2Pi);
    const std::uint64_t key = mix_seed(seed, kTagFit);

    Adam opt(state.x.size(), learning_rate);
    FitResult result;
    result.elbo_trace.reserve(steps);

    ad::Tape tape;
    for (int step = 0; step < steps; ++step) {
        tape.clear();
        ad::ValueId xin = tape.input(state.x);
        ad::ValueId tmpl = tape.constant(task.tmpl);
        ad::ValueId obs = tape.constant(task.observed);

        ad::ValueId total = -1;
        for (int s = 0; s < state.mc_samples; ++s) {
            std::uint64_t draw = static_cast<std::uint64_t>(step) * state.mc_samples + s;
            ad::ValueId eps = tape.constant(
                gumbel_matrix(state.x.rows(), state.x.cols(), mix_seed(key, draw)));
            ad::ValueId noisy = tape.add(xin, eps);
            ad::ValueId smat = ad::sinkhorn_graph(tape, noisy, state.tau, sinkhorn_iterations);
            ad::ValueId recon = tape.matmul(tape.transpose(smat), tmpl);
            ad::ValueId sq = tape.sq_error(recon, obs);
            total = total < 0 ? sq : tape.add(total, sq);
        }
        ad::ValueId mean_sq = tape.scale(total, 1.0 / state.mc_samples);

        double sq_value = tape.value(mean_sq)(0, 0);
        double elbo = -sq_value * inv_var2 - ll_const;
        Matrix grad_neg_elbo;
        tape.backward(mean_sq);
        grad_neg_elbo = tape.grad(xin);
        kern::ops().scale(grad_neg_elbo.data(), inv_var2, grad_neg_elbo.size());

        if (use_kl) {
            elbo -= kl_gumbel_space({state.x, state.tau, state.tau_prior});
            Matrix klg = kl_gumbel_space_grad(state.x, state.tau, state.tau_prior);
            for (std::size_t i = 0; i < grad_neg_elbo.size(); ++i)
                grad_neg_elbo.data()[i] += klg.data()[i];
        }
        if (!std::isfinite(elbo))
            throw TrainingError("fit_posterior: ELBO diverged (non-finite) at step " +
                                std::to_string(step));
        result.elbo_trace.push_back(elbo);
        opt.step(state.x.data(), grad_neg_elbo.data(), state.x.size());
    }

    result.accuracy = match_fraction(hungarian(state.x), task.true_perm);
    result.state = std::move(state);
    return result;
}

double mcmc_baseline(const SyntheticMatchTask& task, int sweeps, std::uint64_t seed) {
    if (sweeps < 0) throw DomainError("mcmc_baseline: sweeps must be >= 0");
    const int n = static_cast<int>(task.tmpl.rows());
    const int d = static_cast<int>(task.tmpl.cols());

    // assignment a(r) = template row for observed row r; truth is (P*)^{-1}
    Permutation truth_assign = task.true_perm.inverse();
    std::vector<int> assign(n);
    std::iota(assign.begin(), assign.end(), 0);

    // row score: gaussian log-likelihood, or a sharp exact-match score at
    // sigma == 0
    auto row_score = [&](int row, int tmpl_row) {
        if (task.sigma > 0.0) {
            double sq = 0.0;
            for (int j = 0; j < d; ++j) {
                double diff = task.observed(row, j) - task.tmpl(tmpl_row, j);
                sq += diff * diff;
            }
            return -sq / (2.0 * task.sigma * task.sigma);
        }
        for (int j = 0; j < d; ++j)
            if (task.observed(row, j) != task.tmpl(tmpl_row, j)) return 0.0;
        return 5.0;
    };

    Philox rng(mix_seed(seed, kTagMcmc));
    std::vector<std::vector<long>> visits(n, std::vector<long>(n, 0));
    const int burn_in = sweeps / 2;
    for (int t = 0; t < sweeps; ++t) {
        int i = static_cast<int>(rng.below(n));
        int j = static_cast<int>(rng.below(n - 1));
        if (j >= i) ++j;
        double delta = row_score(i, assign[j]) + row_score(j, assign[i]) -
                       row_score(i, assign[i]) - row_score(j, assign[j]);
        if (delta >= 0.0 || rng.uniform() < std::exp(delta)) std::swap(assign[i], assign[j]);
        if (t >= burn_in)
            for (int r = 0; r < n; ++r) ++visits[r][assign[r]];
    }

    std::size_t hits = 0;
    for (int r = 0; r < n; ++r) {
        int best = assign[r];  // 0 sweeps: the initialization itself
        if (sweeps > 0) {
            long best_count = -1;
            for (int c = 0; c < n; ++c)
                if (visits[r][c] > best_count) {
                    best_count = visits[r][c];
                    best = c;
                }
        }
        if (best == truth_assign[r]) ++hits;
    }
    return static_cast<double>(hits) / n;
}

}  // namespace permlearn
