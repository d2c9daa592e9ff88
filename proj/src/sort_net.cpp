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

#include "permlearn/sort_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "permlearn/gumbel.hpp"
#include "permlearn/optim.hpp"
#include "permlearn/rng.hpp"
#include "permlearn/tape.hpp"

namespace permlearn {

namespace {

// substream tags for the different random draws
constexpr std::uint64_t kTagInit = 0x01;
constexpr std::uint64_t kTagData = 0x02;
constexpr std::uint64_t kTagNoise = 0x03;
constexpr std::uint64_t kTagEval = 0x04;

Matrix column(const std::vector<double>& x) {
    Matrix m(x.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) m(i, 0) = x[i];
    return m;
}

std::vector<double> uniform_sequence(std::uint64_t key, std::uint64_t stream, int n, double low,
                                     double high) {
    Philox rng(key, stream);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = low + (high - low) * rng.uniform();
    return x;
}

}  // namespace

SortNetParams SortNetParams::init(int n, int n_units, std::uint64_t seed) {
    if (n < 1 || n_units < 1) throw DomainError("SortNetParams: sizes must be positive");
    SortNetParams p;
    p.n = n;
    p.n_units = n_units;
    Philox rng(mix_seed(seed, kTagInit));
    p.w1 = Matrix(n_units, 1);
    for (std::size_t i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = 0.1 * rng.normal();
    p.b1 = Matrix(1, n_units);
    p.w2 = Matrix(n, n_units);
    for (std::size_t i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = 0.1 * rng.normal();
    p.b2 = Matrix(1, n);
    return p;
}

void SortNetParams::validate() const {
    if (n < 1 || n_units < 1) throw DomainError("SortNetParams: sizes must be positive");
    if (w1.rows() != static_cast<std::size_t>(n_units) || w1.cols() != 1 ||
        b1.rows() != 1 || b1.cols() != static_cast<std::size_t>(n_units) ||
        w2.rows() != static_cast<std::size_t>(n) ||
        w2.cols() != static_cast<std::size_t>(n_units) || b2.rows() != 1 ||
        b2.cols() != static_cast<std::size_t>(n))
        throw DimensionError("SortNetParams: weight shapes inconsistent");
}

void TrainConfig::validate() const {
    if (n < 2) throw DomainError("TrainConfig: n must be >= 2");
    if (!(tau > 0.0)) throw DomainError("TrainConfig: tau must be positive");
    if (iterations < 1 || samples_per_example < 1 || batch_size < 1 || steps < 1 || n_units < 1)
        throw DomainError("TrainConfig: counts must be positive");
    if (noise_scale < 0.0) throw DomainError("TrainConfig: noise_scale must be >= 0");
    if (!(train_low < train_high) || !(test_low < test_high))
        throw DomainError("TrainConfig: interval bounds must satisfy low < high");
}

Matrix logits_from_sequence(const std::vector<double>& x, const SortNetParams& params) {
    params.validate();
    if (x.size() != static_cast<std::size_t>(params.n))
        throw DimensionError("logits_from_sequence: sequence length != n");
    Matrix xm = column(x);
    require_finite(xm, "logits_from_sequence");
    // h = relu(x W1^T + b1), rows are per-element codes
    Matrix h = matmul_transb(xm, params.w1);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) {
            h(i, j) += params.b1(0, j);
            if (h(i, j) < 0.0) h(i, j) = 0.0;
        }
    Matrix g = matmul_transb(h, params.w2);
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += params.b2(0, j);
    return g;
}

Permutation true_sort_permutation(const std::vector<double>& x) {
    std::vector<int> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
    std::vector<int> rank(x.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
    return Permutation(std::move(rank));
}

SoftRecon soft_reconstruct(const std::vector<double>& x, const SortNetParams& params, double tau,
                           int iterations, double noise_scale, std::uint64_t seed) {
    Matrix logits = logits_from_sequence(x, params);
    if (noise_scale > 0.0) {
        Matrix eps = gumbel_matrix(logits.rows(), logits.cols(), seed);
        for (std::size_t i = 0; i < logits.size(); ++i)
            logits.data()[i] += noise_scale * eps.data()[i];
    }
    SinkhornConfig cfg;
    cfg.tau = tau;
    cfg.iterations = iterations;
    Matrix s = sinkhorn(logits, cfg).entries();

    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());

    SoftRecon out;
    out.reconstruction.assign(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) out.reconstruction[j] += s(i, j) * x[i];
    double loss = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double d = out.reconstruction[j] - sorted[j];
        loss += d * d;
    }
    out.loss = loss;
    return out;
}

Permutation hard_sort(const std::vector<double>& x, const SortNetParams& params) {
    return hungarian(logits_from_sequence(x, params));
}

TrainResult train_sort(const TrainConfig& cfg) {
    cfg.validate();
    SortNetParams params = SortNetParams::init(cfg.n, cfg.n_units, cfg.seed);

    Adam opt_w1(params.w1.size(), cfg.learning_rate);
    Adam opt_b1(params.b1.size(), cfg.learning_rate);
    Adam opt_w2(params.w2.size(), cfg.learning_rate);
    Adam opt_b2(params.b2.size(), cfg.learning_rate);

    const std::uint64_t data_key = mix_seed(cfg.seed, kTagData);
    const std::uint64_t noise_key = mix_seed(cfg.seed, kTagNoise);
    const double inv_count = 1.0 / (cfg.batch_size * cfg.samples_per_example);

    TrainResult result;
    result.loss_curve.reserve(cfg.steps);

    ad::Tape tape;
    for (int step = 0; step < cfg.steps; ++step) {
        tape.clear();
        ad::ValueId w1 = tape.input(params.w1);
        ad::ValueId b1 = tape.input(params.b1);
        ad::ValueId w2 = tape.input(params.w2);
        ad::ValueId b2 = tape.input(params.b2);

        ad::ValueId total = -1;
        for (int e = 0; e < cfg.batch_size; ++e) {
            std::uint64_t example_index =
                static_cast<std::uint64_t>(step) * cfg.batch_size + e;
            std::vector<double> x =
                uniform_sequence(data_key, example_index, cfg.n, cfg.train_low, cfg.train_high);
            std::vector<double> sorted = x;
            std::sort(sorted.begin(), sorted.end());

            ad::ValueId xin = tape.constant(column(x));
            ad::ValueId target = tape.constant(column(sorted));
            ad::ValueId h = tape.relu(tape.add_rowvec(tape.matmul_transb(xin, w1), b1));
            ad::ValueId logits = tape.add_rowvec(tape.matmul_transb(h, w2), b2);

            for (int d = 0; d < cfg.samples_per_example; ++d) {
                std::uint64_t draw_index = example_index * cfg.samples_per_example + d;
                ad::ValueId noisy = logits;
                if (cfg.noise_scale > 0.0) {
                    ad::ValueId eps = tape.constant(
                        gumbel_matrix(cfg.n, cfg.n, mix_seed(noise_key, draw_index)));
                    noisy = tape.add_scaled(logits, eps, cfg.noise_scale);
                }
                ad::ValueId s = ad::sinkhorn_graph(tape, noisy, cfg.tau, cfg.iterations);
                ad::ValueId recon = tape.matmul(tape.transpose(s), xin);
                ad::ValueId loss = tape.sq_error(recon, target);
                total = total < 0 ? loss : tape.add(total, loss);
            }
        }
        ad::ValueId mean_loss = tape.scale(total, inv_count);
        double loss_value = tape.value(mean_loss)(0, 0);
        if (!std::isfinite(loss_value))
            throw TrainingError("train_sort: loss diverged (non-finite) at step " +
                                std::to_string(step));
        result.loss_curve.push_back(loss_value);

        tape.backward(mean_loss);
        opt_w1.step(params.w1.data(), tape.grad(w1).data(), params.w1.size());
        opt_b1.step(params.b1.data(), tape.grad(b1).data(), params.b1.size());
        opt_w2.step(params.w2.data(), tape.grad(w2).data(), params.w2.size());
        opt_b2.step(params.b2.data(), tape.grad(b2).data(), params.b2.size());
    }

    result.params = std::move(params);
    return result;
}

EvalResult eval_sort(const SortNetParams& params, int count, double low, double high,
                     std::uint64_t seed) {
    params.validate();
    if (count < 1) throw DomainError("eval_sort: count must be positive");
    if (!(low < high)) throw DomainError("eval_sort: interval bounds must satisfy low < high");

    const std::uint64_t key = mix_seed(seed, kTagEval);
    EvalResult acc;
    for (int t = 0; t < count; ++t) {
        std::vector<double> x = uniform_sequence(key, t, params.n, low, high);
        std::vector<double> sorted = x;
        std::sort(sorted.begin(), sorted.end());
        Permutation pred = hard_sort(x, params);
        Permutation truth = true_sort_permutation(x);
        MetricsReport m = reconstruction_metrics(column(sorted), pred, column(x), truth);
        acc.prop_any_wrong += m.prop_any_wrong;
        acc.prop_wrong += m.prop_wrong;
        acc.kendall_tau += m.kendall_tau;
        acc.l1 += m.l1;
        acc.l2 += m.l2;
    }
    acc.prop_any_wrong /= count;
    acc.prop_wrong /= count;
    acc.kendall_tau /= count;
    acc.l1 /= count;
    acc.l2 /= count;
    return acc;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw FormatError("params: matrix field must be a 2d array");
    Matrix m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != m.cols()) throw FormatError("params: ragged matrix field");
        for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

}  // namespace

std::string params_to_json(const SortNetParams& params) {
    params.validate();
    nlohmann::json j;
    j["schema_version"] = 1;
    j["model"] = "sort-net";
    j["n"] = params.n;
    j["n_units"] = params.n_units;
    j["w1"] = matrix_to_json(params.w1);
    j["b1"] = matrix_to_json(params.b1);
    j["w2"] = matrix_to_json(params.w2);
    j["b2"] = matrix_to_json(params.b2);
    return j.dump(2) + "\n";
}

SortNetParams params_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("params: invalid json: ") + e.what());
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
        throw FormatError("params: missing or unsupported schema_version");
    SortNetParams p;
    p.n = j.at("n").get<int>();
    p.n_units = j.at("n_units").get<int>();
    p.w1 = matrix_from_json(j.at("w1"));
    p.b1 = matrix_from_json(j.at("b1"));
    p.w2 = matrix_from_json(j.at("w2"));
    p.b2 = matrix_from_json(j.at("b2"));
    p.validate();
    return p;
}

}  // namespace permlearn
