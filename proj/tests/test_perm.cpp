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

#include <cmath>
#include <vector>

#include <doctest.h>

#include "permlearn/perm.hpp"
#include "test_helpers.hpp"

using namespace permlearn;
using test::normal_matrix;
using test::random_doubly_stochastic;
using test::random_permutation;
using test::uniform_matrix;

TEST_SUITE("perm-core") {

TEST_CASE("permutation validates bijections") {
    CHECK_NOTHROW(Permutation({2, 0, 1}));
    CHECK_THROWS_AS(Permutation({0, 0, 1}), DomainError);
    CHECK_THROWS_AS(Permutation({0, 3, 1}), DomainError);
    CHECK_THROWS_AS(Permutation({-1, 0, 1}), DomainError);
}

TEST_CASE("matrix round-trip is exact and rows/cols have one 1") {
    Philox rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        Permutation p = random_permutation(6, rng);
        Matrix m = p.to_matrix();
        for (std::size_t i = 0; i < 6; ++i) {
            double rs = 0.0, cs = 0.0;
            for (std::size_t j = 0; j < 6; ++j) {
                rs += m(i, j);
                cs += m(j, i);
                CHECK((m(i, j) == 0.0 || m(i, j) == 1.0));
            }
            CHECK(rs == 1.0);
            CHECK(cs == 1.0);
        }
        CHECK(Permutation::from_matrix(m) == p);
        CHECK(p.inverse().inverse() == p);
    }
}

TEST_CASE("frobenius inner product") {
    CHECK(frobenius_inner(Matrix::identity(2), Matrix::identity(2)) == 2.0);

    Matrix x(2, 2);
    x(0, 0) = 1;
    x(0, 1) = 2;
    x(1, 0) = 3;
    x(1, 1) = 4;
    CHECK(frobenius_inner(x, Matrix(2, 2)) == 0.0);

    Matrix anti(2, 2);
    anti(0, 1) = 1.0;
    anti(1, 0) = 1.0;
    CHECK(frobenius_inner(x, anti) == 5.0);

    CHECK_THROWS_AS(frobenius_inner(Matrix(2, 2), Matrix(3, 3)), DimensionError);

    // for a permutation matrix the inner product picks one entry per row
    Philox rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        Permutation p = random_permutation(5, rng);
        Matrix m = uniform_matrix(5, 5, -3.0, 3.0, rng);
        double direct = 0.0;
        for (std::size_t i = 0; i < 5; ++i) direct += m(i, p[i]);
        CHECK(frobenius_inner(p.to_matrix(), m) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("entropy basics") {
    Philox rng(3);
    CHECK(entropy(random_permutation(4, rng).to_matrix()) == 0.0);

    Matrix u(2, 2, 0.5);
    CHECK(entropy(u) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    Matrix neg(2, 2, 0.5);
    neg(0, 0) = -0.1;
    CHECK_THROWS_AS(entropy(neg), DomainError);
}

TEST_CASE("entropy agrees with direct summation on random points") {
    Philox rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix m = random_doubly_stochastic(3, 6, rng);
        double direct = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m.data()[i] > 0.0) direct -= m.data()[i] * std::log(m.data()[i]);
        CHECK(entropy(m) == doctest::Approx(direct).epsilon(1e-13));
    }
}

TEST_CASE("entropy is invariant under row and column permutation") {
    Philox rng(5);
    Matrix m = random_doubly_stochastic(5, 8, rng);
    Permutation p1 = random_permutation(5, rng);
    Permutation p2 = random_permutation(5, rng);
    Matrix shuffled = matmul(matmul(p1.to_matrix(), m), transpose(p2.to_matrix()));
    CHECK(entropy(shuffled) == doctest::Approx(entropy(m)).epsilon(1e-12));
}

TEST_CASE("kendall tau") {
    Philox rng(6);
    Permutation p = random_permutation(7, rng);
    CHECK(kendall_tau(p, p) == 1.0);

    Permutation id = Permutation::identity(5);
    Permutation rev({4, 3, 2, 1, 0});
    CHECK(kendall_tau(id, rev) == -1.0);

    CHECK_THROWS_AS(kendall_tau(id, Permutation::identity(4)), DimensionError);

    for (int rep = 0; rep < 30; ++rep) {
        Permutation a = random_permutation(5, rng);
        Permutation b = random_permutation(5, rng);
        // brute pair-concordance count
        double conc = 0.0, disc = 0.0;
        for (int i = 0; i < 5; ++i)
            for (int j = i + 1; j < 5; ++j)
                (((a[i] < a[j]) == (b[i] < b[j])) ? conc : disc) += 1.0;
        double expected = (conc - disc) / 10.0;
        CHECK(kendall_tau(a, b) == doctest::Approx(expected));
        CHECK(kendall_tau(a, b) == kendall_tau(b, a));

        // relabeling the items of both rankings by a common permutation
        // preserves tau
        Permutation c = random_permutation(5, rng);
        std::vector<int> ra(5), rb(5);
        for (int i = 0; i < 5; ++i) {
            ra[i] = a[c[i]];
            rb[i] = b[c[i]];
        }
        CHECK(kendall_tau(Permutation(ra), Permutation(rb)) ==
              doctest::Approx(kendall_tau(a, b)));
    }
}

TEST_CASE("reconstruction metrics") {
    Philox rng(7);
    Permutation truth = random_permutation(5, rng);
    Matrix items = normal_matrix(5, 3, rng);
    // scrambled = P^T-inverse convention: scrambled row i holds item truth(i)
    Matrix scrambled(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) scrambled(i, j) = items(truth[i], j);
    // with that construction items == P^T scrambled
    MetricsReport perfect = reconstruction_metrics(items, truth, scrambled, truth);
    CHECK(perfect.prop_wrong == 0.0);
    CHECK(perfect.prop_any_wrong == 0.0);
    CHECK(perfect.l1 == 0.0);
    CHECK(perfect.l2 == 0.0);
    CHECK(perfect.kendall_tau == 1.0);

    SUBCASE("one transposition at N=5 flips 2 of 5 positions") {
        std::vector<int> m = truth.mapping();
        std::swap(m[0], m[1]);
        MetricsReport r = reconstruction_metrics(items, Permutation(m), scrambled, truth);
        CHECK(r.prop_wrong == doctest::Approx(0.4));
        CHECK(r.prop_any_wrong == 1.0);
    }

    SUBCASE("random prediction matches positionwise oracle") {
        for (int rep = 0; rep < 20; ++rep) {
            Permutation pred = random_permutation(5, rng);
            MetricsReport r = reconstruction_metrics(items, pred, scrambled, truth);
            int wrong = 0;
            double abs_sum = 0.0, sq_sum = 0.0;
            Permutation inv = pred.inverse();
            for (int i = 0; i < 5; ++i) {
                if (pred[i] != truth[i]) ++wrong;
                for (int j = 0; j < 3; ++j) {
                    double diff = scrambled(inv[i], j) - items(i, j);
                    abs_sum += std::fabs(diff);
                    sq_sum += diff * diff;
                }
            }
            CHECK(r.prop_wrong == doctest::Approx(wrong / 5.0));
            CHECK(r.prop_any_wrong == (wrong > 0 ? 1.0 : 0.0));
            CHECK(r.l1 == doctest::Approx(abs_sum / 15.0));
            CHECK(r.l2 == doctest::Approx(std::sqrt(sq_sum / 15.0)));
        }
    }

    SUBCASE("size mismatch throws") {
        CHECK_THROWS_AS(
            reconstruction_metrics(items, Permutation::identity(4), scrambled, truth),
            DimensionError);
    }
}

TEST_CASE("doubly stochastic type enforces its invariants") {
    Matrix u(3, 3, 1.0 / 3.0);
    CHECK_NOTHROW(DoublyStochasticMatrix(u, 1e-12));

    Matrix bad = u;
    bad(0, 0) = 1.5;
    CHECK_THROWS_AS(DoublyStochasticMatrix(bad, 1e-6), FeasibilityError);

    Matrix off = u;
    off(0, 0) = 0.5;  // row 0 and column 0 now sum to 1.1666..
    CHECK_THROWS_AS(DoublyStochasticMatrix(off, 1e-6), FeasibilityError);
    DoublyStochasticMatrix measured = DoublyStochasticMatrix::with_measured_tol(off);
    CHECK(measured.tol() >= 1.0 / 6.0);
}

}  // TEST_SUITE
