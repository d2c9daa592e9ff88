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

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "permlearn/matrix.hpp"
#include "permlearn/sinkhorn.hpp"

namespace permlearn::ad {

using ValueId = int;

// Record of primitive operations with cached intermediates; replaying the
// tape forward reproduces the recorded values bitwise, and the backward pass
// reads but never mutates them. One tape per thread.
class Tape {
public:
    enum class Op : std::uint8_t {
        Input,
        Const,
        MatMul,        // a * b
        MatMulTransB,  // a * b^T
        Transpose,
        Add,
        AddRowVec,     // a + broadcast row vector (1 x C)
        AddScaled,     // a + s * b
        Relu,
        Scale,         // s * a
        RowLseSub,     // a - rowLSE(a), broadcast over columns
        ColLseSub,     // a - colLSE(a), broadcast over rows
        Exp,
        SqError,       // scalar sum((a - b)^2)
    };

    ValueId input(Matrix v);
    ValueId constant(Matrix v);
    ValueId matmul(ValueId a, ValueId b);
    ValueId matmul_transb(ValueId a, ValueId b);
    ValueId transpose(ValueId a);
    ValueId add(ValueId a, ValueId b);
    ValueId add_rowvec(ValueId a, ValueId v);
    ValueId add_scaled(ValueId a, ValueId b, double s);
    ValueId relu(ValueId a);
    ValueId scale(ValueId a, double s);
    ValueId row_lse_sub(ValueId a);
    ValueId col_lse_sub(ValueId a);
    ValueId exp(ValueId a);
    ValueId sq_error(ValueId a, ValueId b);

    const Matrix& value(ValueId id) const;

    // Pull `upstream` back from `output` to every Input node.
    void backward(ValueId output, const Matrix& upstream);
    // Scalar output seeded with 1.
    void backward(ValueId output);
    const Matrix& grad(ValueId id) const;

    // Recomputes all node values from the leaves; true iff every recomputed
    // value matches the cached one bitwise.
    bool replay_matches() const;

    std::size_t node_count() const { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Op op;
        ValueId a = -1;
        ValueId b = -1;
        double s = 0.0;
        Matrix val;
        Matrix aux;  // op-specific cache (softmax weights for LSE nodes)
        Matrix grad;
        bool grad_set = false;
    };

    ValueId push(Node n);
    void accumulate(ValueId id, const Matrix& g);
    Matrix compute(const Node& n, Matrix* aux_out) const;

    std::vector<Node> nodes_;
};

// Appends scale(1/tau) -> rounds x (row LSE, col LSE) -> exp to the tape and
// returns the id of S^rounds(logits/tau). rounds == 0 gives plain
// exp(logits/tau).
ValueId sinkhorn_graph(Tape& tape, ValueId logits, double tau, int rounds);

// d<upstream, S^L(X/tau)> / dX through all unrolled normalization rounds.
Matrix sinkhorn_vjp(const Matrix& x, const Matrix& upstream, const SinkhornConfig& cfg);

struct DenseResult {
    Matrix output;      // relu(x W^T + 1 b^T) or the affine output
    Matrix grad_w;
    Matrix grad_b;      // 1 x units
    Matrix grad_input;
};

// Affine layer out = act(x W^T + 1 b^T) with exact reverse-mode gradients.
// relu' (0) := 0.
DenseResult dense_forward_backward(const Matrix& w, const Matrix& b, const Matrix& input,
                                   const Matrix& upstream, bool use_relu);

// Worst relative error between the analytic gradient and central finite
// differences of f around x0; denominator max(|a|,|b|,1e-8).
double finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                         const std::vector<double>& x0, double step,
                         const std::vector<double>& analytic_grad);

}  // namespace permlearn::ad
