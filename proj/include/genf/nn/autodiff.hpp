#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "genf/errors.hpp"

// Reverse-mode automatic differentiation over Eigen matrices.
//
// Every operation eagerly computes its value and records how to route an
// upstream gradient to its inputs. Crucially, the backward routines are
// themselves written in terms of taped operations, so the gradient of a
// gradient is just another graph — which is what the Wasserstein gradient
// penalty needs (its loss contains a gradient norm that must itself be
// differentiated with respect to the critic parameters).

namespace genf::nn {

using Matrix = Eigen::MatrixXd;

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Matrix val;
    std::vector<Var> parents;
    // Maps the gradient at this node to gradient contributions for each
    // parent (entries may be null when an input is non-differentiable).
    // `self` is the node's own Var so activations can reuse their output.
    std::function<std::vector<Var>(const Var& self, const Var& g)> backward;
    const char* tag = "";

    Eigen::Index rows() const { return val.rows(); }
    Eigen::Index cols() const { return val.cols(); }
    bool is_leaf() const { return !backward; }
};

inline Var make_leaf(Matrix m, const char* tag = "leaf") {
    auto n = std::make_shared<Node>();
    n->val = std::move(m);
    n->tag = tag;
    return n;
}

inline Var constant(Matrix m) { return make_leaf(std::move(m), "const"); }

inline Var make_op(Matrix value, std::vector<Var> parents,
                   std::function<std::vector<Var>(const Var&, const Var&)> backward,
                   const char* tag) {
    auto n = std::make_shared<Node>();
    n->val = std::move(value);
    n->parents = std::move(parents);
    n->backward = std::move(backward);
    n->tag = tag;
    return n;
}

namespace detail {
inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ContractError("autodiff: " + msg);
}
inline void same_shape(const Var& a, const Var& b, const char* op) {
    require(a->rows() == b->rows() && a->cols() == b->cols(),
            std::string(op) + ": shape mismatch " + std::to_string(a->rows()) + "x" +
                std::to_string(a->cols()) + " vs " + std::to_string(b->rows()) + "x" +
                std::to_string(b->cols()));
}
}  // namespace detail

// ---- arithmetic -----------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
    detail::same_shape(a, b, "add");
    return make_op(a->val + b->val, {a, b},
                   [](const Var&, const Var& g) { return std::vector<Var>{g, g}; }, "add");
}

inline Var neg(const Var& a) {
    return make_op(-a->val, {a},
                   [](const Var&, const Var& g) { return std::vector<Var>{neg(g)}; }, "neg");
}

inline Var sub(const Var& a, const Var& b) {
    detail::same_shape(a, b, "sub");
    return make_op(a->val - b->val, {a, b},
                   [](const Var&, const Var& g) { return std::vector<Var>{g, neg(g)}; }, "sub");
}

inline Var cmul(const Var& a, const Var& b) {
    detail::same_shape(a, b, "cmul");
    return make_op(a->val.cwiseProduct(b->val), {a, b},
                   [](const Var& self, const Var& g) {
                       return std::vector<Var>{cmul(g, self->parents[1]),
                                               cmul(g, self->parents[0])};
                   },
                   "cmul");
}

inline Var cdiv(const Var& a, const Var& b) {
    detail::same_shape(a, b, "cdiv");
    return make_op(a->val.cwiseQuotient(b->val), {a, b},
                   [](const Var& self, const Var& g) {
                       const Var& bb = self->parents[1];
                       return std::vector<Var>{cdiv(g, bb), neg(cmul(g, cdiv(self, bb)))};
                   },
                   "cdiv");
}

inline Var scalar_mul(const Var& a, double c) {
    return make_op(a->val * c, {a},
                   [c](const Var&, const Var& g) { return std::vector<Var>{scalar_mul(g, c)}; },
                   "scalar_mul");
}

inline Var scalar_add(const Var& a, double c) {
    return make_op((a->val.array() + c).matrix(), {a},
                   [](const Var&, const Var& g) { return std::vector<Var>{g}; }, "scalar_add");
}

inline Var matmul(const Var& a, const Var& b);
inline Var transpose(const Var& a) {
    return make_op(a->val.transpose(), {a},
                   [](const Var&, const Var& g) { return std::vector<Var>{transpose(g)}; },
                   "transpose");
}

inline Var matmul(const Var& a, const Var& b) {
    detail::require(a->cols() == b->rows(), "matmul: inner dimensions differ");
    return make_op(a->val * b->val, {a, b},
                   [](const Var& self, const Var& g) {
                       return std::vector<Var>{matmul(g, transpose(self->parents[1])),
                                               matmul(transpose(self->parents[0]), g)};
                   },
                   "matmul");
}

// ---- elementwise nonlinearities -------------------------------------------

inline Var sigmoid(const Var& a) {
    Matrix v = (1.0 / (1.0 + (-a->val.array()).exp())).matrix();
    return make_op(std::move(v), {a},
                   [](const Var& self, const Var& g) {
                       // s' = s (1 - s)
                       return std::vector<Var>{
                           cmul(g, cmul(self, scalar_add(neg(self), 1.0)))};
                   },
                   "sigmoid");
}

inline Var tanh_v(const Var& a) {
    return make_op(a->val.array().tanh().matrix(), {a},
                   [](const Var& self, const Var& g) {
                       // tanh' = 1 - tanh^2
                       return std::vector<Var>{
                           cmul(g, scalar_add(neg(cmul(self, self)), 1.0))};
                   },
                   "tanh");
}

inline Var relu(const Var& a) {
    Matrix mask = (a->val.array() > 0.0).cast<double>().matrix();
    return make_op(a->val.cwiseProduct(mask), {a},
                   [mask](const Var&, const Var& g) {
                       // subgradient: zero on the inactive side (and at 0)
                       return std::vector<Var>{cmul(g, constant(mask))};
                   },
                   "relu");
}

inline Var exp_v(const Var& a) {
    return make_op(a->val.array().exp().matrix(), {a},
                   [](const Var& self, const Var& g) {
                       return std::vector<Var>{cmul(g, self)};
                   },
                   "exp");
}

inline Var log_v(const Var& a) {
    return make_op(a->val.array().log().matrix(), {a},
                   [](const Var& self, const Var& g) {
                       return std::vector<Var>{cdiv(g, self->parents[0])};
                   },
                   "log");
}

inline Var sqrt_v(const Var& a) {
    return make_op(a->val.cwiseSqrt(), {a},
                   [](const Var& self, const Var& g) {
                       return std::vector<Var>{scalar_mul(cdiv(g, self), 0.5)};
                   },
                   "sqrt");
}

inline Var square(const Var& a) {
    return make_op(a->val.cwiseProduct(a->val), {a},
                   [](const Var& self, const Var& g) {
                       return std::vector<Var>{cmul(g, scalar_mul(self->parents[0], 2.0))};
                   },
                   "square");
}

// ---- reductions and broadcasts --------------------------------------------

inline Var broadcast_all(const Var& a, Eigen::Index r, Eigen::Index c);
inline Var broadcast_col(const Var& a, Eigen::Index cols);
inline Var broadcast_row(const Var& a, Eigen::Index rows);

inline Var sum_all(const Var& a) {
    Matrix v(1, 1);
    v(0, 0) = a->val.sum();
    const Eigen::Index r = a->rows(), c = a->cols();
    return make_op(std::move(v), {a},
                   [r, c](const Var&, const Var& g) {
                       return std::vector<Var>{broadcast_all(g, r, c)};
                   },
                   "sum_all");
}

inline Var mean_all(const Var& a) {
    return scalar_mul(sum_all(a), 1.0 / static_cast<double>(a->rows() * a->cols()));
}

inline Var rowwise_sum(const Var& a) {
    const Eigen::Index c = a->cols();
    return make_op(a->val.rowwise().sum(), {a},
                   [c](const Var&, const Var& g) {
                       return std::vector<Var>{broadcast_col(g, c)};
                   },
                   "rowwise_sum");
}

inline Var colwise_sum(const Var& a) {
    const Eigen::Index r = a->rows();
    return make_op(a->val.colwise().sum(), {a},
                   [r](const Var&, const Var& g) {
                       return std::vector<Var>{broadcast_row(g, r)};
                   },
                   "colwise_sum");
}

inline Var broadcast_col(const Var& a, Eigen::Index cols) {
    detail::require(a->cols() == 1, "broadcast_col needs an r x 1 input");
    return make_op(a->val.replicate(1, cols), {a},
                   [](const Var&, const Var& g) { return std::vector<Var>{rowwise_sum(g)}; },
                   "broadcast_col");
}

inline Var broadcast_row(const Var& a, Eigen::Index rows) {
    detail::require(a->rows() == 1, "broadcast_row needs a 1 x c input");
    return make_op(a->val.replicate(rows, 1), {a},
                   [](const Var&, const Var& g) { return std::vector<Var>{colwise_sum(g)}; },
                   "broadcast_row");
}

inline Var broadcast_all(const Var& a, Eigen::Index r, Eigen::Index c) {
    detail::require(a->rows() == 1 && a->cols() == 1, "broadcast_all needs a 1 x 1 input");
    return make_op(Matrix::Constant(r, c, a->val(0, 0)), {a},
                   [](const Var&, const Var& g) { return std::vector<Var>{sum_all(g)}; },
                   "broadcast_all");
}

// ---- structural ops --------------------------------------------------------

inline Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n);
inline Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n);

inline Var concat_rows(const Var& a, const Var& b) {
    detail::require(a->cols() == b->cols(), "concat_rows: column counts differ");
    Matrix v(a->rows() + b->rows(), a->cols());
    v << a->val, b->val;
    const Eigen::Index ra = a->rows(), rb = b->rows();
    return make_op(std::move(v), {a, b},
                   [ra, rb](const Var&, const Var& g) {
                       return std::vector<Var>{slice_rows(g, 0, ra), slice_rows(g, ra, rb)};
                   },
                   "concat_rows");
}

inline Var concat_cols(const Var& a, const Var& b) {
    detail::require(a->rows() == b->rows(), "concat_cols: row counts differ");
    Matrix v(a->rows(), a->cols() + b->cols());
    v << a->val, b->val;
    const Eigen::Index ca = a->cols(), cb = b->cols();
    return make_op(std::move(v), {a, b},
                   [ca, cb](const Var&, const Var& g) {
                       return std::vector<Var>{slice_cols(g, 0, ca), slice_cols(g, ca, cb)};
                   },
                   "concat_cols");
}

inline Var pad_rows(const Var& a, Eigen::Index start, Eigen::Index total) {
    detail::require(start >= 0 && start + a->rows() <= total, "pad_rows: range out of bounds");
    Matrix v = Matrix::Zero(total, a->cols());
    v.middleRows(start, a->rows()) = a->val;
    const Eigen::Index s = start, n = a->rows();
    return make_op(std::move(v), {a},
                   [s, n](const Var&, const Var& g) {
                       return std::vector<Var>{slice_rows(g, s, n)};
                   },
                   "pad_rows");
}

inline Var pad_cols(const Var& a, Eigen::Index start, Eigen::Index total) {
    detail::require(start >= 0 && start + a->cols() <= total, "pad_cols: range out of bounds");
    Matrix v = Matrix::Zero(a->rows(), total);
    v.middleCols(start, a->cols()) = a->val;
    const Eigen::Index s = start, n = a->cols();
    return make_op(std::move(v), {a},
                   [s, n](const Var&, const Var& g) {
                       return std::vector<Var>{slice_cols(g, s, n)};
                   },
                   "pad_cols");
}

inline Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index n) {
    detail::require(start >= 0 && start + n <= a->rows(), "slice_rows: range out of bounds");
    const Eigen::Index total = a->rows();
    return make_op(a->val.middleRows(start, n), {a},
                   [start, total](const Var&, const Var& g) {
                       return std::vector<Var>{pad_rows(g, start, total)};
                   },
                   "slice_rows");
}

inline Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n) {
    detail::require(start >= 0 && start + n <= a->cols(), "slice_cols: range out of bounds");
    const Eigen::Index total = a->cols();
    return make_op(a->val.middleCols(start, n), {a},
                   [start, total](const Var&, const Var& g) {
                       return std::vector<Var>{pad_cols(g, start, total)};
                   },
                   "slice_cols");
}

// ---- softmax ----------------------------------------------------------------

// Row-wise softmax with max-subtraction for stability. The gradient is
// expressed through the output s:  ds = s ⊙ (g − rowsum(g ⊙ s)).
inline Var softmax_rows(const Var& a) {
    Matrix v = a->val;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        const double mx = v.row(r).maxCoeff();
        v.row(r) = (v.row(r).array() - mx).exp();
        const double denom = v.row(r).sum();
        detail::require(denom > 0.0 && std::isfinite(denom),
                        "softmax_rows: row reduced to zero mass");
        v.row(r) /= denom;
    }
    const Eigen::Index c = a->cols();
    return make_op(std::move(v), {a},
                   [c](const Var& self, const Var& g) {
                       const Var gs = cmul(g, self);
                       const Var row = broadcast_col(rowwise_sum(gs), c);
                       return std::vector<Var>{cmul(self, sub(g, row))};
                   },
                   "softmax_rows");
}

// ---- batched block matmul ---------------------------------------------------
//
// a is a vertical stack of B blocks of block_rows_a rows; b likewise with
// block_rows_b. Per block: C_i = op(A_i) * op(B_i) with optional transposes.
// This keeps per-sample attention (B small matrices) inside one node instead
// of B separate graph nodes.
inline Var bmm(const Var& a, const Var& b, Eigen::Index block_rows_a, Eigen::Index block_rows_b,
               bool ta, bool tb) {
    detail::require(block_rows_a > 0 && a->rows() % block_rows_a == 0,
                    "bmm: a rows not divisible into blocks");
    detail::require(block_rows_b > 0 && b->rows() % block_rows_b == 0,
                    "bmm: b rows not divisible into blocks");
    const Eigen::Index nblocks = a->rows() / block_rows_a;
    detail::require(nblocks == b->rows() / block_rows_b, "bmm: block counts differ");

    const Eigen::Index ra = ta ? a->cols() : block_rows_a;
    const Eigen::Index ca = ta ? block_rows_a : a->cols();
    const Eigen::Index rb = tb ? b->cols() : block_rows_b;
    const Eigen::Index cb = tb ? block_rows_b : b->cols();
    detail::require(ca == rb, "bmm: inner block dimensions differ");

    Matrix v(nblocks * ra, cb);
    for (Eigen::Index i = 0; i < nblocks; ++i) {
        const auto ab = a->val.middleRows(i * block_rows_a, block_rows_a);
        const auto bb = b->val.middleRows(i * block_rows_b, block_rows_b);
        auto out = v.middleRows(i * ra, ra);
        if (!ta && !tb) out.noalias() = ab * bb;
        else if (!ta && tb) out.noalias() = ab * bb.transpose();
        else if (ta && !tb) out.noalias() = ab.transpose() * bb;
        else out.noalias() = ab.transpose() * bb.transpose();
    }
    const Eigen::Index bra = block_rows_a, brb = block_rows_b, ro = ra;
    return make_op(std::move(v), {a, b},
                   [bra, brb, ro, ta, tb](const Var& self, const Var& g) {
                       const Var& av = self->parents[0];
                       const Var& bv = self->parents[1];
                       // dA_i = ta ?  op(B_i) G_i^T  :  G_i op(B_i)^T
                       Var da = ta ? bmm(bv, g, brb, ro, tb, true)
                                   : bmm(g, bv, ro, brb, false, !tb);
                       // dB_i = tb ?  G_i^T op(A_i)  :  op(A_i)^T G_i
                       Var db = tb ? bmm(g, av, ro, bra, true, ta)
                                   : bmm(av, g, bra, ro, !ta, false);
                       return std::vector<Var>{std::move(da), std::move(db)};
                   },
                   "bmm");
}

// ---- backward pass -----------------------------------------------------------

// Gradients of `root` with respect to `targets`, returned in target order.
// `seed` defaults to ones(1,1) (root must then be scalar). The returned
// gradients are graph nodes themselves, so they can be differentiated again.
inline std::vector<Var> grad(const Var& root, const std::vector<Var>& targets, Var seed = {}) {
    if (!seed) {
        detail::require(root->rows() == 1 && root->cols() == 1,
                        "grad: non-scalar root needs an explicit seed gradient");
        seed = constant(Matrix::Ones(1, 1));
    }
    detail::require(seed->rows() == root->rows() && seed->cols() == root->cols(),
                    "grad: seed shape must match root");

    // Which nodes can reach a target by following parent edges?
    std::unordered_map<Node*, bool> needed;
    for (const auto& t : targets) needed[t.get()] = true;
    {
        std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
        std::unordered_map<Node*, char> state;  // 1 = in progress, 2 = done
        state[root.get()] = 1;
        while (!stack.empty()) {
            auto& [n, idx] = stack.back();
            if (idx < n->parents.size()) {
                Node* p = n->parents[idx].get();
                ++idx;
                if (state.find(p) == state.end()) {
                    state[p] = 1;
                    stack.emplace_back(p, 0);
                }
            } else {
                bool reach = needed.count(n) && needed[n];
                for (const auto& p : n->parents) reach = reach || (needed.count(p.get()) && needed[p.get()]);
                needed[n] = reach;
                state[n] = 2;
                stack.pop_back();
            }
        }
    }
    if (!needed[root.get()]) {
        std::vector<Var> zeros;
        for (const auto& t : targets) zeros.push_back(constant(Matrix::Zero(t->rows(), t->cols())));
        return zeros;
    }

    // Post-order over the needed subgraph, then walk it backwards so every
    // node is processed after all of its consumers.
    std::vector<Var> order;
    {
        std::unordered_map<Node*, char> visited;
        std::vector<std::pair<Var, std::size_t>> stack{{root, 0}};
        visited[root.get()] = 1;
        while (!stack.empty()) {
            auto& [n, idx] = stack.back();
            if (idx < n->parents.size()) {
                Var p = n->parents[idx];
                ++idx;
                if (!visited.count(p.get()) && needed[p.get()]) {
                    visited[p.get()] = 1;
                    stack.emplace_back(std::move(p), 0);
                }
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
    }

    std::unordered_map<Node*, Var> grads;
    grads[root.get()] = seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Var& n = *it;
        const auto git = grads.find(n.get());
        if (git == grads.end() || !n->backward) continue;
        const std::vector<Var> contribs = n->backward(n, git->second);
        detail::require(contribs.size() == n->parents.size(),
                        "backward returned wrong contribution count");
        for (std::size_t i = 0; i < contribs.size(); ++i) {
            if (!contribs[i]) continue;
            Node* p = n->parents[i].get();
            if (!needed[p]) continue;
            auto pit = grads.find(p);
            if (pit == grads.end()) grads.emplace(p, contribs[i]);
            else pit->second = add(pit->second, contribs[i]);
        }
    }

    std::vector<Var> out;
    out.reserve(targets.size());
    for (const auto& t : targets) {
        const auto it = grads.find(t.get());
        out.push_back(it != grads.end() ? it->second
                                        : constant(Matrix::Zero(t->rows(), t->cols())));
    }
    return out;
}

}  // namespace genf::nn
