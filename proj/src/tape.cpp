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

#include "permlearn/tape.hpp"

#include <cmath>
#include <limits>

#include "permlearn/kernels.hpp"

namespace permlearn::ad {

namespace {

Matrix row_lse_sub_value(const Matrix& a, Matrix* softmax_weights) {
    const auto& k = kern::ops();
    Matrix y = a;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double* r = y.row(i);
        k.sub_scalar(r, y.cols(), k.logsumexp(r, y.cols()));
    }
    if (softmax_weights != nullptr) {
        *softmax_weights = Matrix(y.rows(), y.cols());
        k.exp(softmax_weights->data(), y.data(), y.size());
    }
    return y;
}

Matrix col_lse_sub_value(const Matrix& a, Matrix* softmax_weights) {
    const auto& k = kern::ops();
    Matrix y = a;
    std::size_t n = y.cols();
    std::vector<double> colmax(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < y.rows(); ++i) k.max_into(colmax.data(), y.row(i), n);
    std::vector<double> colsum(n, 0.0);
    for (std::size_t i = 0; i < y.rows(); ++i)
        k.exp_sub_acc(colsum.data(), y.row(i), colmax.data(), n);
    std::vector<double> collse(n);
    for (std::size_t j = 0; j < n; ++j) collse[j] = colmax[j] + std::log(colsum[j]);
    for (std::size_t i = 0; i < y.rows(); ++i) k.sub_vec(y.row(i), collse.data(), n);
    if (softmax_weights != nullptr) {
        *softmax_weights = Matrix(y.rows(), y.cols());
        k.exp(softmax_weights->data(), y.data(), y.size());
    }
    return y;
}

}  // namespace

ValueId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size()) - 1;
}

ValueId Tape::input(Matrix v) {
    Node n;
    n.op = Op::Input;
    n.val = std::move(v);
    return push(std::move(n));
}

ValueId Tape::constant(Matrix v) {
    Node n;
    n.op = Op::Const;
    n.val = std::move(v);
    return push(std::move(n));
}

Matrix Tape::compute(const Node& n, Matrix* aux_out) const {
    switch (n.op) {
        case Op::Input:
        case Op::Const:
            return n.val;
        case Op::MatMul:
            return permlearn::matmul(nodes_[n.a].val, nodes_[n.b].val);
        case Op::MatMulTransB:
            return permlearn::matmul_transb(nodes_[n.a].val, nodes_[n.b].val);
        case Op::Transpose:
            return permlearn::transpose(nodes_[n.a].val);
        case Op::Add: {
            Matrix r = nodes_[n.a].val;
            const Matrix& b = nodes_[n.b].val;
            for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] += b.data()[i];
            return r;
        }
        case Op::AddRowVec: {
            Matrix r = nodes_[n.a].val;
            const Matrix& v = nodes_[n.b].val;
            for (std::size_t i = 0; i < r.rows(); ++i)
                for (std::size_t j = 0; j < r.cols(); ++j) r(i, j) += v(0, j);
            return r;
        }
        case Op::AddScaled: {
            Matrix r = nodes_[n.a].val;
            kern::ops().axpy(r.data(), n.s, nodes_[n.b].val.data(), r.size());
            return r;
        }
        case Op::Relu: {
            Matrix r = nodes_[n.a].val;
            for (std::size_t i = 0; i < r.size(); ++i)
                if (r.data()[i] < 0.0) r.data()[i] = 0.0;
            return r;
        }
        case Op::Scale: {
            Matrix r = nodes_[n.a].val;
            kern::ops().scale(r.data(), n.s, r.size());
            return r;
        }
        case Op::RowLseSub:
            return row_lse_sub_value(nodes_[n.a].val, aux_out);
        case Op::ColLseSub:
            return col_lse_sub_value(nodes_[n.a].val, aux_out);
        case Op::Exp: {
            const Matrix& a = nodes_[n.a].val;
            Matrix r(a.rows(), a.cols());
            kern::ops().exp(r.data(), a.data(), a.size());
            return r;
        }
        case Op::SqError: {
            const Matrix& a = nodes_[n.a].val;
            const Matrix& b = nodes_[n.b].val;
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                double d = a.data()[i] - b.data()[i];
                s += d * d;
            }
            Matrix r(1, 1);
            r(0, 0) = s;
            return r;
        }
    }
    throw TapeError("Tape: unknown op");
}

ValueId Tape::matmul(ValueId a, ValueId b) {
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::matmul_transb(ValueId a, ValueId b) {
    Node n;
    n.op = Op::MatMulTransB;
    n.a = a;
    n.b = b;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::transpose(ValueId a) {
    Node n;
    n.op = Op::Transpose;
    n.a = a;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::add(ValueId a, ValueId b) {
    require_same_shape(nodes_[a].val, nodes_[b].val, "Tape::add");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::add_rowvec(ValueId a, ValueId v) {
    if (nodes_[v].val.rows() != 1 || nodes_[v].val.cols() != nodes_[a].val.cols())
        throw DimensionError("Tape::add_rowvec: vector shape mismatch");
    Node n;
    n.op = Op::AddRowVec;
    n.a = a;
    n.b = v;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::add_scaled(ValueId a, ValueId b, double s) {
    require_same_shape(nodes_[a].val, nodes_[b].val, "Tape::add_scaled");
    Node n;
    n.op = Op::AddScaled;
    n.a = a;
    n.b = b;
    n.s = s;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::relu(ValueId a) {
    Node n;
    n.op = Op::Relu;
    n.a = a;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::scale(ValueId a, double s) {
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.s = s;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::row_lse_sub(ValueId a) {
    Node n;
    n.op = Op::RowLseSub;
    n.a = a;
    n.val = compute(n, &n.aux);
    return push(std::move(n));
}

ValueId Tape::col_lse_sub(ValueId a) {
    Node n;
    n.op = Op::ColLseSub;
    n.a = a;
    n.val = compute(n, &n.aux);
    return push(std::move(n));
}

ValueId Tape::exp(ValueId a) {
    Node n;
    n.op = Op::Exp;
    n.a = a;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

ValueId Tape::sq_error(ValueId a, ValueId b) {
    require_same_shape(nodes_[a].val, nodes_[b].val, "Tape::sq_error");
    Node n;
    n.op = Op::SqError;
    n.a = a;
    n.b = b;
    n.val = compute(n, nullptr);
    return push(std::move(n));
}

const Matrix& Tape::value(ValueId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw TapeError("Tape::value: id out of range");
    return nodes_[id].val;
}

void Tape::accumulate(ValueId id, const Matrix& g) {
    Node& n = nodes_[id];
    if (!n.grad_set) {
        n.grad = Matrix(n.val.rows(), n.val.cols());
        n.grad_set = true;
    }
    for (std::size_t i = 0; i < n.grad.size(); ++i) n.grad.data()[i] += g.data()[i];
}

void Tape::backward(ValueId output) {
    const Matrix& v = value(output);
    if (v.rows() != 1 || v.cols() != 1)
        throw TapeError("Tape::backward: implicit seed needs a scalar output");
    Matrix seed(1, 1);
    seed(0, 0) = 1.0;
    backward(output, seed);
}

void Tape::backward(ValueId output, const Matrix& upstream) {
    if (output < 0 || static_cast<std::size_t>(output) >= nodes_.size())
        throw TapeError("Tape::backward: output id out of range");
    if (!upstream.same_shape(nodes_[output].val))
        throw TapeError("Tape::backward: upstream shape does not match output");

    for (Node& n : nodes_) {
        n.grad_set = false;
        n.grad = Matrix();
    }
    accumulate(output, upstream);

    const auto& k = kern::ops();
    for (ValueId id = output; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.grad_set) continue;
        const Matrix& g = n.grad;
        switch (n.op) {
            case Op::Input:
            case Op::Const:
                break;
            case Op::MatMul:
                accumulate(n.a, permlearn::matmul_transb(g, nodes_[n.b].val));
                accumulate(n.b, permlearn::matmul(permlearn::transpose(nodes_[n.a].val), g));
                break;
            case Op::MatMulTransB:
                accumulate(n.a, permlearn::matmul(g, nodes_[n.b].val));
                accumulate(n.b, permlearn::matmul(permlearn::transpose(g), nodes_[n.a].val));
                break;
            case Op::Transpose:
                accumulate(n.a, permlearn::transpose(g));
                break;
            case Op::Add:
                accumulate(n.a, g);
                accumulate(n.b, g);
                break;
            case Op::AddRowVec: {
                accumulate(n.a, g);
                Matrix gv(1, g.cols());
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) gv(0, j) += g(i, j);
                accumulate(n.b, gv);
                break;
            }
            case Op::AddScaled: {
                accumulate(n.a, g);
                Matrix gb = g;
                k.scale(gb.data(), n.s, gb.size());
                accumulate(n.b, gb);
                break;
            }
            case Op::Relu: {
                Matrix ga = g;
                const Matrix& out = n.val;
                for (std::size_t i = 0; i < ga.size(); ++i)
                    if (out.data()[i] <= 0.0) ga.data()[i] = 0.0;
                accumulate(n.a, ga);
                break;
            }
            case Op::Scale: {
                Matrix ga = g;
                k.scale(ga.data(), n.s, ga.size());
                accumulate(n.a, ga);
                break;
            }
            case Op::RowLseSub: {
                // dX = G - softmax .* rowsum(G)
                Matrix ga = g;
                for (std::size_t i = 0; i < ga.rows(); ++i) {
                    double rs = k.sum(g.row(i), g.cols());
                    k.axpy(ga.row(i), -rs, n.aux.row(i), ga.cols());
                }
                accumulate(n.a, ga);
                break;
            }
            case Op::ColLseSub: {
                Matrix ga = g;
                std::vector<double> cs(g.cols(), 0.0);
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) cs[j] += g(i, j);
                for (std::size_t i = 0; i < ga.rows(); ++i)
                    for (std::size_t j = 0; j < ga.cols(); ++j)
                        ga(i, j) -= n.aux(i, j) * cs[j];
                accumulate(n.a, ga);
                break;
            }
            case Op::Exp: {
                Matrix ga(g.rows(), g.cols());
                k.mul(ga.data(), g.data(), n.val.data(), g.size());
                accumulate(n.a, ga);
                break;
            }
            case Op::SqError: {
                double gs = g(0, 0);
                const Matrix& a = nodes_[n.a].val;
                const Matrix& b = nodes_[n.b].val;
                Matrix ga(a.rows(), a.cols());
                for (std::size_t i = 0; i < a.size(); ++i)
                    ga.data()[i] = 2.0 * gs * (a.data()[i] - b.data()[i]);
                accumulate(n.a, ga);
                if (nodes_[n.b].op != Op::Const) {
                    Matrix gb = ga;
                    k.scale(gb.data(), -1.0, gb.size());
                    accumulate(n.b, gb);
                }
                break;
            }
        }
    }
}

const Matrix& Tape::grad(ValueId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw TapeError("Tape::grad: id out of range");
    if (!nodes_[id].grad_set) throw TapeError("Tape::grad: no gradient recorded; run backward");
    return nodes_[id].grad;
}

bool Tape::replay_matches() const {
    for (const Node& n : nodes_) {
        Matrix aux;
        Matrix v = compute(n, &aux);
        if (!(v == n.val)) return false;
    }
    return true;
}

void Tape::clear() { nodes_.clear(); }

ValueId sinkhorn_graph(Tape& tape, ValueId logits, double tau, int rounds) {
    if (!(tau > 0.0)) throw DomainError("sinkhorn_graph: tau must be positive");
    if (rounds < 0) throw DomainError("sinkhorn_graph: rounds must be >= 0");
    ValueId cur = tape.scale(logits, 1.0 / tau);
    for (int it = 0; it < rounds; ++it) {
        cur = tape.row_lse_sub(cur);
        cur = tape.col_lse_sub(cur);
    }
    return tape.exp(cur);
}

Matrix sinkhorn_vjp(const Matrix& x, const Matrix& upstream, const SinkhornConfig& cfg) {
    cfg.validate();
    require_finite(x, "sinkhorn_vjp");
    require_same_shape(x, upstream, "sinkhorn_vjp");
    Tape tape;
    ValueId in = tape.input(x);
    ValueId out = sinkhorn_graph(tape, in, cfg.tau, cfg.iterations);
    tape.backward(out, upstream);
    return tape.grad(in);
}

DenseResult dense_forward_backward(const Matrix& w, const Matrix& b, const Matrix& input,
                                   const Matrix& upstream, bool use_relu) {
    if (b.rows() != 1 || b.cols() != w.rows())
        throw DimensionError("dense_forward_backward: bias must be 1 x units");
    Tape tape;
    ValueId win = tape.input(w);
    ValueId bin = tape.input(b);
    ValueId xin = tape.input(input);
    ValueId pre = tape.add_rowvec(tape.matmul_transb(xin, win), bin);
    ValueId out = use_relu ? tape.relu(pre) : pre;
    tape.backward(out, upstream);
    return {tape.value(out), tape.grad(win), tape.grad(bin), tape.grad(xin)};
}

double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& x0, double step,
                         const std::vector<double>& analytic_grad) {
    if (!(step > 0.0)) throw DomainError("finite_diff_check: step must be positive");
    if (analytic_grad.size() != x0.size())
        throw DimensionError("finite_diff_check: gradient length mismatch");
    double worst = 0.0;
    std::vector<double> x = x0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double saved = x[i];
        x[i] = saved + step;
        double fp = f(x);
        x[i] = saved - step;
        double fm = f(x);
        x[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw DomainError("finite_diff_check: non-finite function value");
        double fd = (fp - fm) / (2.0 * step);
        double denom = std::max({std::fabs(fd), std::fabs(analytic_grad[i]), 1e-8});
        worst = std::max(worst, std::fabs(fd - analytic_grad[i]) / denom);
    }
    return worst;
}

}  // namespace permlearn::ad
