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

#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "permlearn/gumbel.hpp"
#include "permlearn/kernels.hpp"
#include "permlearn/sort_net.hpp"
#include "permlearn/tape.hpp"
#include "test_helpers.hpp"

using namespace permlearn;
using test::normal_matrix;
using test::uniform_matrix;

namespace {

std::vector<double> flatten(const Matrix& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
}

Matrix unflatten(const std::vector<double>& v, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    std::copy(v.begin(), v.end(), m.data());
    return m;
}

double sinkhorn_inner(const Matrix& x, const Matrix& upstream, double tau, int rounds) {
    ad::Tape tape;
    ad::ValueId in = tape.input(x);
    ad::ValueId out = ad::sinkhorn_graph(tape, in, tau, rounds);
    return frobenius_inner(upstream, tape.value(out));
}

}  // namespace

TEST_SUITE("autodiff-unroll") {

TEST_CASE("zero rounds reduces to the elementwise exp chain rule") {
    Matrix x(2, 2);
    x(0, 0) = 0.1;
    x(0, 1) = -0.2;
    x(1, 0) = 0.3;
    x(1, 1) = 0.4;
    Matrix upstream(2, 2);
    upstream(0, 0) = 1.0;
    upstream(0, 1) = 2.0;
    upstream(1, 0) = 3.0;
    upstream(1, 1) = 4.0;
    const double tau = 0.5;

    ad::Tape tape;
    ad::ValueId in = tape.input(x);
    ad::ValueId out = ad::sinkhorn_graph(tape, in, tau, 0);
    tape.backward(out, upstream);
    const Matrix& g = tape.grad(in);
    // d<U, exp(X/tau)>/dX = U .* exp(X/tau) / tau
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(g.data()[i] ==
              doctest::Approx(upstream.data()[i] * std::exp(x.data()[i] / tau) / tau)
                  .epsilon(1e-12));
}

TEST_CASE("unrolled gradient matches finite differences") {
    Philox rng(40);
    SinkhornConfig cfg;
    for (int rep = 0; rep < 5; ++rep) {
        Matrix x = uniform_matrix(4, 4, -1.0, 1.0, rng);
        Matrix upstream = uniform_matrix(4, 4, -1.0, 1.0, rng);
        Matrix g = ad::sinkhorn_vjp(x, upstream, cfg);
        auto f = [&](const std::vector<double>& v) {
            return sinkhorn_inner(unflatten(v, 4, 4), upstream, cfg.tau, cfg.iterations);
        };
        CHECK(ad::finite_diff_check(f, flatten(x), 1e-5, flatten(g)) <= 1e-4);
    }
}

TEST_CASE("zero upstream gives zero gradient") {
    Philox rng(41);
    Matrix x = uniform_matrix(4, 4, -1.0, 1.0, rng);
    SinkhornConfig cfg;
    Matrix g = ad::sinkhorn_vjp(x, Matrix(4, 4), cfg);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.data()[i] == 0.0);
}

TEST_CASE("gradients stay finite at very low temperature") {
    Philox rng(42);
    Matrix x = uniform_matrix(5, 5, -1.0, 1.0, rng);
    Matrix upstream = uniform_matrix(5, 5, -1.0, 1.0, rng);
    for (double tau : {0.5, 0.2, 0.1, 0.05}) {
        SinkhornConfig cfg;
        cfg.tau = tau;
        Matrix g = ad::sinkhorn_vjp(x, upstream, cfg);
        CHECK(all_finite(g));
    }
}

TEST_CASE("dense layer") {
    SUBCASE("zero weights pass the upstream through the relu subgradient") {
        Matrix w(3, 2), b(1, 3), in(4, 2), up(4, 3, 1.0);
        ad::DenseResult r = ad::dense_forward_backward(w, b, in, up, true);
        for (std::size_t i = 0; i < r.output.size(); ++i) CHECK(r.output.data()[i] == 0.0);
        // pre-activation is 0 everywhere and relu'(0) := 0
        for (std::size_t i = 0; i < r.grad_b.size(); ++i) CHECK(r.grad_b.data()[i] == 0.0);
    }

    SUBCASE("identity weights without relu pass gradients through") {
        Matrix w = Matrix::identity(3);
        Matrix b(1, 3);
        Philox rng(43);
        Matrix in = normal_matrix(2, 3, rng);
        Matrix up = normal_matrix(2, 3, rng);
        ad::DenseResult r = ad::dense_forward_backward(w, b, in, up, false);
        CHECK(max_abs_diff(r.output, in) == 0.0);
        CHECK(max_abs_diff(r.grad_input, up) == 0.0);
    }

    SUBCASE("random layer matches finite differences") {
        Philox rng(44);
        Matrix w = normal_matrix(3, 2, rng);
        Matrix b = normal_matrix(1, 3, rng);
        Matrix in = normal_matrix(4, 2, rng);
        Matrix up = normal_matrix(4, 3, rng);
        ad::DenseResult r = ad::dense_forward_backward(w, b, in, up, true);
        auto f = [&](const std::vector<double>& v) {
            ad::DenseResult rr = ad::dense_forward_backward(unflatten(v, 3, 2), b, in, up, true);
            return frobenius_inner(up, rr.output);
        };
        CHECK(ad::finite_diff_check(f, flatten(w), 1e-5, flatten(r.grad_w)) <= 1e-4);
    }

    SUBCASE("shape checks") {
        CHECK_THROWS_AS(ad::dense_forward_backward(Matrix(3, 2), Matrix(1, 4), Matrix(4, 2),
                                                   Matrix(4, 3), true),
                        DimensionError);
    }
}

TEST_CASE("finite_diff_check on closed forms") {
    // quadratic: gradient 2x is exact for central differences
    auto quad = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return s;
    };
    std::vector<double> x0 = {0.5, -1.5, 2.0};
    std::vector<double> g0 = {1.0, -3.0, 4.0};
    CHECK(ad::finite_diff_check(quad, x0, 1e-5, g0) <= 1e-9);

    auto constant = [](const std::vector<double>&) { return 3.0; };
    std::vector<double> zero = {0.0, 0.0, 0.0};
    CHECK(ad::finite_diff_check(constant, x0, 1e-5, zero) == 0.0);

    CHECK_THROWS_AS(ad::finite_diff_check(quad, x0, 0.0, g0), DomainError);
}

TEST_CASE("every primitive passes a randomized gradient check") {
    Philox rng(45);
    // f(A) = <U, op(A, B)> for each primitive; keep relu inputs away from
    // the kink so the finite difference is valid
    Matrix a = uniform_matrix(3, 3, 0.1, 1.0, rng);
    Matrix b = uniform_matrix(3, 3, 0.1, 1.0, rng);
    Matrix u = uniform_matrix(3, 3, -1.0, 1.0, rng);
    Matrix rowv = uniform_matrix(1, 3, -1.0, 1.0, rng);

    auto check_unary = [&](auto build) {
        ad::Tape tape;
        ad::ValueId in = tape.input(a);
        ad::ValueId out = build(tape, in);
        tape.backward(out, u);
        Matrix g = tape.grad(in);
        auto f = [&](const std::vector<double>& v) {
            ad::Tape t2;
            ad::ValueId i2 = t2.input(unflatten(v, 3, 3));
            return frobenius_inner(u, t2.value(build(t2, i2)));
        };
        return ad::finite_diff_check(f, flatten(a), 1e-6, flatten(g));
    };

    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) { return t.scale(i, 1.7); }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) { return t.exp(i); }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) { return t.relu(i); }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) { return t.transpose(i); }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) { return t.row_lse_sub(i); }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) { return t.col_lse_sub(i); }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) { return t.matmul(i, t.constant(b)); }) <=
          1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) {
              return t.matmul_transb(t.constant(b), i);
          }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) {
              return t.add_scaled(i, t.constant(b), -0.6);
          }) <= 1e-4);
    CHECK(check_unary([&](ad::Tape& t, ad::ValueId i) {
              return t.add_rowvec(i, t.constant(rowv));
          }) <= 1e-4);

    // scalar loss node checked with an implicit unit seed
    {
        ad::Tape tape;
        ad::ValueId in = tape.input(a);
        ad::ValueId out = tape.sq_error(in, tape.constant(b));
        tape.backward(out);
        Matrix g = tape.grad(in);
        auto f = [&](const std::vector<double>& v) {
            ad::Tape t2;
            return t2.value(t2.sq_error(t2.input(unflatten(v, 3, 3)), t2.constant(b)))(0, 0);
        };
        CHECK(ad::finite_diff_check(f, flatten(a), 1e-6, flatten(g)) <= 1e-4);
    }
}

TEST_CASE("full reconstruction loss gradient at random init") {
    const int n = 5;
    SortNetParams params = SortNetParams::init(n, 32, 7);
    Philox rng(46);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform();
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    Matrix eps = gumbel_matrix(n, n, 48);
    Matrix xm(n, 1), tm(n, 1);
    for (int i = 0; i < n; ++i) {
        xm(i, 0) = x[i];
        tm(i, 0) = sorted[i];
    }

    auto loss_of = [&](const SortNetParams& p, Matrix* grad_w2) {
        ad::Tape tape;
        ad::ValueId w1 = tape.input(p.w1), b1 = tape.input(p.b1);
        ad::ValueId w2 = tape.input(p.w2), b2 = tape.input(p.b2);
        ad::ValueId xin = tape.constant(xm);
        ad::ValueId h = tape.relu(tape.add_rowvec(tape.matmul_transb(xin, w1), b1));
        ad::ValueId logits = tape.add_rowvec(tape.matmul_transb(h, w2), b2);
        ad::ValueId noisy = tape.add_scaled(logits, tape.constant(eps), 1.0);
        ad::ValueId s = ad::sinkhorn_graph(tape, noisy, 1.0, 20);
        ad::ValueId recon = tape.matmul(tape.transpose(s), xin);
        ad::ValueId loss = tape.sq_error(recon, tape.constant(tm));
        double lv = tape.value(loss)(0, 0);
        if (grad_w2 != nullptr) {
            tape.backward(loss);
            *grad_w2 = tape.grad(w2);
        }
        return lv;
    };

    Matrix gw2;
    loss_of(params, &gw2);
    auto f = [&](const std::vector<double>& v) {
        SortNetParams p = params;
        p.w2 = unflatten(v, n, 32);
        return loss_of(p, nullptr);
    };
    CHECK(ad::finite_diff_check(f, flatten(params.w2), 1e-5, flatten(gw2)) <= 1e-3);
}

TEST_CASE("tape replay and immutability") {
    Philox rng(47);
    Matrix x = uniform_matrix(4, 4, -1.0, 1.0, rng);
    ad::Tape tape;
    ad::ValueId in = tape.input(x);
    ad::ValueId out = ad::sinkhorn_graph(tape, in, 1.0, 10);
    Matrix before = tape.value(out);
    CHECK(tape.replay_matches());

    tape.backward(out, Matrix(4, 4, 1.0));
    CHECK(tape.value(out) == before);  // backward never mutates cached values
    CHECK(tape.replay_matches());
}

TEST_CASE("tape error paths") {
    ad::Tape tape;
    ad::ValueId in = tape.input(Matrix(2, 2, 1.0));
    CHECK_THROWS_AS(tape.grad(in), TapeError);
    CHECK_THROWS_AS(tape.backward(in, Matrix(3, 3)), TapeError);
    CHECK_THROWS_AS(tape.backward(in), TapeError);  // non-scalar implicit seed
    CHECK_THROWS_AS(tape.value(99), TapeError);
}

}  // TEST_SUITE
