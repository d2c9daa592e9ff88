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
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "permlearn/gumbel.hpp"
#include "permlearn/kernels.hpp"
#include "permlearn/io.hpp"
#include "permlearn/latent_vi.hpp"
#include "permlearn/matching.hpp"
#include "permlearn/rng.hpp"
#include "permlearn/sinkhorn.hpp"
#include "permlearn/sort_net.hpp"
#include "permlearn/tape.hpp"

namespace fs = std::filesystem;
using namespace permlearn;

namespace {

int thread_cap() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PERMLEARN_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
    }
    return static_cast<int>(hw);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// "0:1,0:10" -> {(0,1), (0,10)}
std::vector<std::pair<double, double>> parse_dists(const std::string& text) {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
            throw FormatError("test distribution must be low:high, got " + item);
        out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
    if (out.empty()) throw FormatError("no test distributions given");
    return out;
}

std::vector<int> parse_ints(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw FormatError("empty integer list");
    return out;
}

void write_eval_csv(const std::string& path,
                    const std::vector<std::tuple<double, double, int, EvalResult>>& rows) {
    std::ostringstream out;
    out << "test_dist_low,test_dist_high,N,prop_any_wrong,prop_wrong,kendall_tau,l1,l2\n";
    for (const auto& [lo, hi, n, r] : rows) {
        out << fmt17(lo) << "," << fmt17(hi) << "," << n << "," << fmt17(r.prop_any_wrong) << ","
            << fmt17(r.prop_wrong) << "," << fmt17(r.kendall_tau) << "," << fmt17(r.l1) << ","
            << fmt17(r.l2) << "\n";
    }
    io::write_file(path, out.str());
}

void write_config_snapshot(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ostringstream out;
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    io::write_file(path, out.str());
}

void write_loss_log(const std::string& path, const std::vector<double>& curve) {
    std::ostringstream out;
    out << "step,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) out << i << "," << fmt17(curve[i]) << "\n";
    io::write_file(path, out.str());
}

TrainConfig* add_train_flags(CLI::App* cmd, TrainConfig& cfg) {
    cmd->add_option("--n", cfg.n, "sequence length");
    cmd->add_option("--tau", cfg.tau, "Sinkhorn temperature");
    cmd->add_option("--iters", cfg.iterations, "Sinkhorn rounds");
    cmd->add_option("--noise-scale", cfg.noise_scale, "Gumbel noise scale on logits");
    cmd->add_option("--draws", cfg.samples_per_example, "Gumbel draws per example");
    cmd->add_option("--batch", cfg.batch_size, "examples per step");
    cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    cmd->add_option("--steps", cfg.steps, "training steps");
    cmd->add_option("--units", cfg.n_units, "encoder width");
    cmd->add_option("--seed", cfg.seed, "random seed");
    cmd->add_option("--train-low", cfg.train_low, "training interval lower bound");
    cmd->add_option("--train-high", cfg.train_high, "training interval upper bound");
    return &cfg;
}

std::vector<std::pair<std::string, std::string>> train_config_kv(const TrainConfig& c) {
    return {{"n", std::to_string(c.n)},
            {"tau", fmt17(c.tau)},
            {"iters", std::to_string(c.iterations)},
            {"noise_scale", fmt17(c.noise_scale)},
            {"draws", std::to_string(c.samples_per_example)},
            {"batch", std::to_string(c.batch_size)},
            {"lr", fmt17(c.learning_rate)},
            {"steps", std::to_string(c.steps)},
            {"units", std::to_string(c.n_units)},
            {"seed", std::to_string(c.seed)},
            {"train_low", fmt17(c.train_low)},
            {"train_high", fmt17(c.train_high)}};
}

int run_check_grads(std::uint64_t seed) {
    struct Row {
        std::string name;
        double err;
        double tol;
    };
    std::vector<Row> rows;

    auto check_vjp = [&](double tau, double tol) {
        double worst = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            Philox rng(mix_seed(seed, 100 + rep));
            Matrix x(4, 4), upstream(4, 4);
            for (std::size_t i = 0; i < x.size(); ++i) {
                x.data()[i] = 2.0 * rng.uniform() - 1.0;
                upstream.data()[i] = 2.0 * rng.uniform() - 1.0;
            }
            SinkhornConfig cfg;
            cfg.tau = tau;
            std::vector<double> flat(x.data(), x.data() + x.size());
            auto f = [&](const std::vector<double>& v) {
                Matrix m(4, 4);
                std::copy(v.begin(), v.end(), m.data());
                Matrix s(4, 4);
                Matrix l = log_sinkhorn(m, cfg);
                kern::ops().exp(s.data(), l.data(), l.size());
                return frobenius_inner(upstream, s);
            };
            Matrix g = ad::sinkhorn_vjp(x, upstream, cfg);
            std::vector<double> gflat(g.data(), g.data() + g.size());
            worst = std::max(worst, ad::finite_diff_check(f, flat, 1e-5, gflat));
        }
        rows.push_back({"sinkhorn_vjp tau=" + fmt17(tau), worst, tol});
    };
    check_vjp(1.0, 1e-4);
    check_vjp(0.5, 1e-3);

    {
        Philox rng(mix_seed(seed, 200));
        Matrix w(3, 2), b(1, 3), in(4, 2), up(4, 3);
        for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
        for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
        for (std::size_t i = 0; i < in.size(); ++i) in.data()[i] = rng.normal();
        for (std::size_t i = 0; i < up.size(); ++i) up.data()[i] = rng.normal();
        ad::DenseResult res = ad::dense_forward_backward(w, b, in, up, true);
        std::vector<double> flat(w.data(), w.data() + w.size());
        auto f = [&](const std::vector<double>& v) {
            Matrix wm(3, 2);
            std::copy(v.begin(), v.end(), wm.data());
            ad::DenseResult r = ad::dense_forward_backward(wm, b, in, up, true);
            return frobenius_inner(up, r.output);
        };
        std::vector<double> gflat(res.grad_w.data(), res.grad_w.data() + res.grad_w.size());
        rows.push_back({"dense_layer dW", ad::finite_diff_check(f, flat, 1e-5, gflat), 1e-4});
    }

    {
        // full reconstruction loss gradient wrt every parameter block
        TrainConfig cfg;
        cfg.n = 5;
        cfg.steps = 1;
        cfg.seed = seed;
        SortNetParams params = SortNetParams::init(cfg.n, cfg.n_units, cfg.seed);
        Philox rng(mix_seed(seed, 300));
        std::vector<double> x(cfg.n);
        for (auto& v : x) v = rng.uniform();
        std::vector<double> sorted = x;
        std::sort(sorted.begin(), sorted.end());
        Matrix eps = gumbel_matrix(cfg.n, cfg.n, mix_seed(seed, 301));

        auto loss_and_grads = [&](const SortNetParams& p, Matrix* gw1, Matrix* gb1, Matrix* gw2,
                                  Matrix* gb2) {
            ad::Tape tape;
            Matrix xm(cfg.n, 1), tm(cfg.n, 1);
            for (int i = 0; i < cfg.n; ++i) {
                xm(i, 0) = x[i];
                tm(i, 0) = sorted[i];
            }
            ad::ValueId w1 = tape.input(p.w1), b1 = tape.input(p.b1);
            ad::ValueId w2 = tape.input(p.w2), b2 = tape.input(p.b2);
            ad::ValueId xin = tape.constant(xm);
            ad::ValueId h = tape.relu(tape.add_rowvec(tape.matmul_transb(xin, w1), b1));
            ad::ValueId logits = tape.add_rowvec(tape.matmul_transb(h, w2), b2);
            ad::ValueId noisy = tape.add_scaled(logits, tape.constant(eps), cfg.noise_scale);
            ad::ValueId s = ad::sinkhorn_graph(tape, noisy, cfg.tau, cfg.iterations);
            ad::ValueId recon = tape.matmul(tape.transpose(s), xin);
            ad::ValueId loss = tape.sq_error(recon, tape.constant(tm));
            double lv = tape.value(loss)(0, 0);
            if (gw1 != nullptr) {
                tape.backward(loss);
                *gw1 = tape.grad(w1);
                *gb1 = tape.grad(b1);
                *gw2 = tape.grad(w2);
                *gb2 = tape.grad(b2);
            }
            return lv;
        };

        Matrix gw1, gb1, gw2, gb2;
        loss_and_grads(params, &gw1, &gb1, &gw2, &gb2);

        auto check_block = [&](const std::string& name, Matrix SortNetParams::*field,
                               const Matrix& analytic) {
            const Matrix& block = params.*field;
            std::vector<double> flat(block.data(), block.data() + block.size());
            auto f = [&](const std::vector<double>& v) {
                SortNetParams p = params;
                std::copy(v.begin(), v.end(), (p.*field).data());
                return loss_and_grads(p, nullptr, nullptr, nullptr, nullptr);
            };
            std::vector<double> gflat(analytic.data(), analytic.data() + analytic.size());
            rows.push_back({"sort_loss " + name, ad::finite_diff_check(f, flat, 1e-5, gflat), 1e-3});
        };
        check_block("dW1", &SortNetParams::w1, gw1);
        check_block("db1", &SortNetParams::b1, gb1);
        check_block("dW2", &SortNetParams::w2, gw2);
        check_block("db2", &SortNetParams::b2, gb2);
    }

    bool all_pass = true;
    for (const auto& r : rows) {
        bool ok = r.err <= r.tol;
        all_pass = all_pass && ok;
        std::printf("%-24s max_rel_err=%-12.3e tol=%-8.0e %s\n", r.name.c_str(), r.err, r.tol,
                    ok ? "PASS" : "FAIL");
    }
    return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"differentiable learning over latent permutations"};
    app.require_subcommand(1);

    // sinkhorn
    auto* c_sink = app.add_subcommand("sinkhorn", "apply the truncated Sinkhorn operator");
    std::string sink_in, sink_out, sink_format;
    SinkhornConfig sink_cfg;
    c_sink->add_option("--in", sink_in, "input matrix (.csv/.json)")->required();
    c_sink->add_option("--out", sink_out, "output matrix (.csv/.json)")->required();
    c_sink->add_option("--tau", sink_cfg.tau, "temperature");
    c_sink->add_option("--iters", sink_cfg.iterations, "rounds");
    c_sink->add_option("--format", sink_format, "output format override")
        ->check(CLI::IsMember({"csv", "json"}));

    // match
    auto* c_match = app.add_subcommand("match", "exact maximum-weight matching");
    std::string match_in, match_out;
    c_match->add_option("--in", match_in, "input matrix (.csv/.json)")->required();
    c_match->add_option("--out", match_out, "output permutation (.json)")->required();

    // sample
    auto* c_sample = app.add_subcommand("sample", "draw Gumbel-Matching / Gumbel-Sinkhorn samples");
    std::string sample_mode = "matching", sample_in, sample_out;
    SinkhornConfig sample_cfg;
    std::uint64_t sample_seed = 0;
    int sample_count = 1;
    c_sample->add_option("--mode", sample_mode, "matching|sinkhorn")
        ->check(CLI::IsMember({"matching", "sinkhorn"}));
    c_sample->add_option("--in", sample_in, "parameter matrix (.csv/.json)")->required();
    c_sample->add_option("--out", sample_out, "output samples (json lines)")->required();
    c_sample->add_option("--tau", sample_cfg.tau, "temperature (sinkhorn mode)");
    c_sample->add_option("--iters", sample_cfg.iterations, "rounds (sinkhorn mode)");
    c_sample->add_option("--seed", sample_seed, "random seed");
    c_sample->add_option("--count", sample_count, "number of samples");

    // check-grads
    auto* c_grads = app.add_subcommand("check-grads", "finite-difference gradient gate");
    std::uint64_t grads_seed = 0;
    c_grads->add_option("--seed", grads_seed, "random seed");

    // train-sort
    auto* c_train = app.add_subcommand("train-sort", "train the sorting network");
    TrainConfig train_cfg;
    std::string train_dir = "runs/sort";
    add_train_flags(c_train, train_cfg);
    c_train->add_option("--out-dir", train_dir, "run directory");
    c_train->set_config("--config", "", "key=value config file (flags take precedence)");

    // eval-sort
    auto* c_eval = app.add_subcommand("eval-sort", "evaluate a trained sorting network");
    std::string eval_params, eval_out = "metrics.csv";
    double eval_low = 0.0, eval_high = 1.0;
    int eval_count = 10000;
    std::uint64_t eval_seed = 0;
    c_eval->add_option("--params", eval_params, "params.json from train-sort")->required();
    c_eval->add_option("--out", eval_out, "metrics csv path");
    c_eval->add_option("--test-low", eval_low, "test interval lower bound");
    c_eval->add_option("--test-high", eval_high, "test interval upper bound");
    c_eval->add_option("--count", eval_count, "number of test sequences");
    c_eval->add_option("--seed", eval_seed, "random seed");

    // table1
    auto* c_table = app.add_subcommand("table1", "train and evaluate over a grid of N and intervals");
    TrainConfig table_cfg;
    std::string table_ns = "5,10,15", table_dists = "0:1,0:10", table_dir = "runs/table1";
    int table_count = 10000;
    add_train_flags(c_table, table_cfg);
    c_table->add_option("--ns", table_ns, "comma-separated sequence lengths");
    c_table->add_option("--test-dists", table_dists, "comma-separated low:high test intervals");
    c_table->add_option("--count", table_count, "test sequences per cell");
    c_table->add_option("--out-dir", table_dir, "run directory");
    c_table->set_config("--config", "", "key=value config file (flags take precedence)");

    // vi-match
    auto* c_vi = app.add_subcommand("vi-match", "variational inference over a latent matching");
    int vi_n = 8, vi_d = 10, vi_steps = 3000, vi_seeds = 20, vi_mc = 1, vi_iters = 20,
        vi_sweeps = 10000;
    double vi_sigma = 0.05, vi_tau = 1.0, vi_tau_prior = 1.0, vi_lr = 0.1;
    std::uint64_t vi_seed = 0;
    bool vi_no_kl = false;
    std::string vi_mode = "vi", vi_out = "vi_report.json";
    c_vi->add_option("--n", vi_n, "number of items");
    c_vi->add_option("--d", vi_d, "feature dimension");
    c_vi->add_option("--sigma", vi_sigma, "observation noise");
    c_vi->add_option("--tau", vi_tau, "posterior temperature");
    c_vi->add_option("--tau-prior", vi_tau_prior, "prior temperature");
    c_vi->add_option("--steps", vi_steps, "ascent steps per seed");
    c_vi->add_option("--seeds", vi_seeds, "number of independent seeds");
    c_vi->add_option("--mc-samples", vi_mc, "Monte Carlo samples per step");
    c_vi->add_option("--iters", vi_iters, "Sinkhorn rounds");
    c_vi->add_option("--lr", vi_lr, "Adam learning rate");
    c_vi->add_option("--seed", vi_seed, "base seed");
    c_vi->add_flag("--no-kl", vi_no_kl, "drop the KL regularizer");
    c_vi->add_option("--mode", vi_mode, "vi|mcmc")->check(CLI::IsMember({"vi", "mcmc"}));
    c_vi->add_option("--sweeps", vi_sweeps, "MCMC proposals (mcmc mode)");
    c_vi->add_option("--out", vi_out, "report path (.json)");
    c_vi->set_config("--config", "", "key=value config file (flags take precedence)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e);
            return 0;
        }
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 1;
    }

    try {
        if (c_sink->parsed()) {
            Matrix x = io::load_matrix(sink_in);
            Matrix s = sinkhorn(x, sink_cfg).entries();
            if (sink_format.empty())
                io::save_matrix(sink_out, s);
            else
                io::save_matrix(sink_out, s,
                                sink_format == "csv" ? io::Format::Csv : io::Format::Json);
        } else if (c_match->parsed()) {
            Matrix x = io::load_matrix(match_in);
            Permutation p = hungarian(x);
            nlohmann::json doc;
            doc["schema_version"] = 1;
            doc["mapping"] = p.mapping();
            io::write_file(match_out, doc.dump() + "\n");
        } else if (c_sample->parsed()) {
            Matrix x = io::load_matrix(sample_in);
            std::ostringstream out;
            for (int k = 0; k < sample_count; ++k) {
                std::uint64_t draw_seed = mix_seed(sample_seed, static_cast<std::uint64_t>(k));
                nlohmann::json line;
                line["schema_version"] = 1;
                line["draw"] = k;
                if (sample_mode == "matching") {
                    line["mapping"] = sample_gumbel_matching(x, draw_seed).mapping();
                } else {
                    Matrix s = sample_gumbel_sinkhorn(x, sample_cfg, draw_seed).entries();
                    nlohmann::json rows = nlohmann::json::array();
                    for (std::size_t i = 0; i < s.rows(); ++i) {
                        nlohmann::json row = nlohmann::json::array();
                        for (std::size_t j = 0; j < s.cols(); ++j) row.push_back(s(i, j));
                        rows.push_back(std::move(row));
                    }
                    line["matrix"] = std::move(rows);
                }
                out << line.dump() << "\n";
            }
            io::write_file(sample_out, out.str());
        } else if (c_grads->parsed()) {
            return run_check_grads(grads_seed);
        } else if (c_train->parsed()) {
            fs::create_directories(train_dir);
            write_config_snapshot(train_dir + "/config.snapshot", train_config_kv(train_cfg));
            TrainResult res = train_sort(train_cfg);
            io::write_file(train_dir + "/params.json", params_to_json(res.params));
            write_loss_log(train_dir + "/log.txt", res.loss_curve);
        } else if (c_eval->parsed()) {
            SortNetParams params = params_from_json(io::read_file(eval_params));
            EvalResult r = eval_sort(params, eval_count, eval_low, eval_high, eval_seed);
            write_eval_csv(eval_out, {{eval_low, eval_high, params.n, r}});
        } else if (c_table->parsed()) {
            fs::create_directories(table_dir);
            auto kv = train_config_kv(table_cfg);
            kv.emplace_back("ns", table_ns);
            kv.emplace_back("test_dists", table_dists);
            kv.emplace_back("count", std::to_string(table_count));
            write_config_snapshot(table_dir + "/config.snapshot", kv);

            std::vector<std::tuple<double, double, int, EvalResult>> rows;
            for (int n : parse_ints(table_ns)) {
                TrainConfig cfg = table_cfg;
                cfg.n = n;
                TrainResult res = train_sort(cfg);
                io::write_file(table_dir + "/params_n" + std::to_string(n) + ".json",
                               params_to_json(res.params));
                write_loss_log(table_dir + "/log_n" + std::to_string(n) + ".txt", res.loss_curve);
                for (auto [lo, hi] : parse_dists(table_dists))
                    rows.emplace_back(lo, hi, n,
                                      eval_sort(res.params, table_count, lo, hi, cfg.seed));
            }
            write_eval_csv(table_dir + "/metrics.csv", rows);
        } else if (c_vi->parsed()) {
            nlohmann::json seeds_json = nlohmann::json::array();
            std::vector<nlohmann::json> per_seed(vi_seeds);
            if (vi_mode == "vi") {
                std::vector<int> order(vi_seeds);
                for (int i = 0; i < vi_seeds; ++i) order[i] = i;
                int workers = std::min(thread_cap(), std::max(1, vi_seeds));
                std::vector<std::thread> pool;
                std::atomic<int> next{0};
                auto body = [&]() {
                    for (;;) {
                        int i = next.fetch_add(1);
                        if (i >= vi_seeds) break;
                        std::uint64_t s = mix_seed(vi_seed, static_cast<std::uint64_t>(i));
                        SyntheticMatchTask task = SyntheticMatchTask::make(vi_n, vi_d, vi_sigma, s);
                        VariationalState init;
                        init.x = Matrix(vi_n, vi_n);
                        init.tau = vi_tau;
                        init.tau_prior = vi_tau_prior;
                        init.mc_samples = vi_mc;
                        FitResult fit =
                            fit_posterior(task, init, vi_steps, s, !vi_no_kl, vi_lr, vi_iters);
                        nlohmann::json j;
                        j["seed_index"] = i;
                        j["accuracy"] = fit.accuracy;
                        nlohmann::json trace = nlohmann::json::array();
                        for (std::size_t t = 0; t < fit.elbo_trace.size();
                             t += std::max<std::size_t>(1, fit.elbo_trace.size() / 100))
                            trace.push_back(fit.elbo_trace[t]);
                        j["elbo_trace"] = std::move(trace);
                        per_seed[i] = std::move(j);
                    }
                };
                for (int w = 0; w < workers; ++w) pool.emplace_back(body);
                for (auto& t : pool) t.join();
            } else {
                for (int i = 0; i < vi_seeds; ++i) {
                    std::uint64_t s = mix_seed(vi_seed, static_cast<std::uint64_t>(i));
                    SyntheticMatchTask task = SyntheticMatchTask::make(vi_n, vi_d, vi_sigma, s);
                    nlohmann::json j;
                    j["seed_index"] = i;
                    j["accuracy"] = mcmc_baseline(task, vi_sweeps, s);
                    per_seed[i] = std::move(j);
                }
            }
            double mean = 0.0;
            for (auto& j : per_seed) {
                mean += j["accuracy"].get<double>();
                seeds_json.push_back(std::move(j));
            }
            nlohmann::json doc;
            doc["schema_version"] = 1;
            doc["mode"] = vi_mode;
            doc["n"] = vi_n;
            doc["d"] = vi_d;
            doc["sigma"] = vi_sigma;
            doc["kl"] = !vi_no_kl;
            doc["mean_accuracy"] = mean / vi_seeds;
            doc["seeds"] = std::move(seeds_json);
            io::write_file(vi_out, doc.dump(2) + "\n");
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
