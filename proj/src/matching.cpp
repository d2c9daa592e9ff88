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

#include "permlearn/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace permlearn {

namespace {

// Jonker-Volgenant style shortest augmenting path solver for min cost.
// Returns row -> col and fills dual potentials u, v (complementary slack:
// optimal edges have cost[i][j] - u[i] - v[j] == 0).
std::vector<int> solve_min_cost(const Matrix& cost, std::vector<double>& u,
                                std::vector<double>& v) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    u.assign(n + 1, 0.0);
    v.assign(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

// Kuhn's augmenting path on the 0-reduced-cost graph.
bool try_augment(int row, const std::vector<std::vector<int>>& adj, std::vector<int>& col_match,
                 std::vector<char>& visited) {
    for (int j : adj[row]) {
        if (visited[j]) continue;
        visited[j] = 1;
        if (col_match[j] < 0 || try_augment(col_match[j], adj, col_match, visited)) {
            col_match[j] = row;
            return true;
        }
    }
    return false;
}

bool perfect_matching_exists(const std::vector<std::vector<int>>& adj, int n,
                             const std::vector<int>& fixed_rows,
                             const std::vector<char>& col_taken) {
    std::vector<int> col_match(n, -1);
    int need = 0;
    for (int i = 0; i < n; ++i) {
        if (fixed_rows[i] >= 0) continue;
        ++need;
    }
    int matched = 0;
    for (int i = 0; i < n; ++i) {
        if (fixed_rows[i] >= 0) continue;
        std::vector<char> visited(col_taken.begin(), col_taken.end());
        if (try_augment(i, adj, col_match, visited)) ++matched;
    }
    return matched == need;
}

// Lexicographically smallest perfect matching restricted to optimal edges.
std::vector<int> lexicographic_refine(const Matrix& cost, const std::vector<double>& u,
                                      const std::vector<double>& v,
                                      const std::vector<int>& fallback) {
    const int n = static_cast<int>(cost.rows());
    double scale = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::fabs(cost(i, j)));
    const double eps = 1e-9 * scale;

    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (cost(i, j) - u[i + 1] - v[j + 1] <= eps) adj[i].push_back(j);

    std::vector<int> fixed(n, -1);
    std::vector<char> col_taken(n, 0);
    for (int i = 0; i < n; ++i) {
        bool placed = false;
        for (int j : adj[i]) {
            if (col_taken[j]) continue;
            fixed[i] = j;
            col_taken[j] = 1;
            if (perfect_matching_exists(adj, n, fixed, col_taken)) {
                placed = true;
                break;
            }
            fixed[i] = -1;
            col_taken[j] = 0;
        }
        if (!placed) return fallback;  // fp slack ruled out every edge; keep the solver's answer
    }
    return fixed;
}

}  // namespace

double assignment_value(const Matrix& x, const Permutation& p) {
    if (p.size() != x.rows()) throw DimensionError("assignment_value: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += x(i, p[i]);
    return s;
}

Permutation hungarian(const Matrix& x) {
    if (x.rows() != x.cols()) throw DimensionError("hungarian: matrix not square");
    if (x.rows() == 0) throw DimensionError("hungarian: empty matrix");
    require_finite(x, "hungarian");

    // maximize <P,X> == minimize with negated weights
    Matrix cost(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) cost.data()[i] = -x.data()[i];

    std::vector<double> u, v;
    std::vector<int> sol = solve_min_cost(cost, u, v);
    std::vector<int> refined = lexicographic_refine(cost, u, v, sol);

    // never trade optimality for the tie-break
    Permutation cand(refined);
    Permutation base(sol);
    double scale = std::max(1.0, max_abs(x));
    if (assignment_value(x, cand) < assignment_value(x, base) - 1e-6 * scale) return base;
    return cand;
}

BruteForceResult brute_force_match(const Matrix& x) {
    if (x.rows() != x.cols()) throw DimensionError("brute_force_match: matrix not square");
    const std::size_t n = x.rows();
    if (n > 8) throw SizeError("brute_force_match: N > 8");
    require_finite(x, "brute_force_match");

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_value = -std::numeric_limits<double>::infinity();
    bool unique = true;
    double scale = std::max(1.0, max_abs(x));
    const double tie_eps = 1e-12 * scale;
    do {
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i) value += x(i, perm[i]);
        if (value > best_value + tie_eps) {
            best_value = value;
            best = perm;
            unique = true;
        } else if (value > best_value - tie_eps) {
            unique = false;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {Permutation(best), best_value, unique};
}

}  // namespace permlearn
