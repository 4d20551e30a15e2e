#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "genf/nn/autodiff.hpp"
#include "genf/rng.hpp"

namespace genf::nn {

// Named parameter leaves. Leaves persist across training steps; each step
// builds a fresh graph on top of them and the optimizer updates their values
// in place.
struct ParamStore {
    std::vector<Var> params;
    std::vector<std::string> names;

    Var add(std::string name, Matrix init) {
        params.push_back(make_leaf(std::move(init), "param"));
        names.push_back(std::move(name));
        return params.back();
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += static_cast<std::size_t>(p->rows() * p->cols());
        return n;
    }
};

inline Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                             Eigen::Index fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
    return m;
}

// Fully connected layer: y = x W + b over row-major batches.
struct Dense {
    Var w;  // in x out
    Var b;  // 1 x out

    Dense() = default;
    // `bias_init` slightly above zero keeps relu units that consume this
    // layer's output alive at initialization.
    Dense(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
          Rng& rng, double bias_init = 0.0) {
        w = store.add(name + ".w", xavier_uniform(in, out, in, out, rng));
        b = store.add(name + ".b", Matrix::Constant(1, out, bias_init));
    }

    Var operator()(const Var& x) const {
        return add(matmul(x, w), broadcast_row(b, x->rows()));
    }
};

// Single-layer LSTM over a step-major sequence of (batch x in) inputs.
// Gate order in the packed weight matrices: input, forget, cell, output.
struct Lstm {
    Var wx;  // in x 4h
    Var wh;  // h x 4h
    Var b;   // 1 x 4h
    Eigen::Index hidden = 0;

    Lstm() = default;
    Lstm(ParamStore& store, const std::string& name, Eigen::Index in, Eigen::Index h, Rng& rng)
        : hidden(h) {
        wx = store.add(name + ".wx", xavier_uniform(in, 4 * h, in + h, h, rng));
        wh = store.add(name + ".wh", xavier_uniform(h, 4 * h, in + h, h, rng));
        Matrix bias = Matrix::Zero(1, 4 * h);
        bias.middleCols(h, h).setOnes();  // forget-gate bias starts open
        b = store.add(name + ".b", std::move(bias));
    }

    // Returns the hidden state after every step (h_1 .. h_T), batch x h each.
    std::vector<Var> forward(const std::vector<Var>& steps) const {
        if (steps.empty()) throw ContractError("lstm: empty input sequence");
        const Eigen::Index batch = steps.front()->rows();
        Var h = constant(Matrix::Zero(batch, hidden));
        Var c = constant(Matrix::Zero(batch, hidden));
        std::vector<Var> hs;
        hs.reserve(steps.size());
        for (const auto& x : steps) {
            const Var z =
                add(add(matmul(x, wx), matmul(h, wh)), broadcast_row(b, batch));
            const Var gi = sigmoid(slice_cols(z, 0, hidden));
            const Var gf = sigmoid(slice_cols(z, hidden, hidden));
            const Var gc = tanh_v(slice_cols(z, 2 * hidden, hidden));
            const Var go = sigmoid(slice_cols(z, 3 * hidden, hidden));
            c = add(cmul(gf, c), cmul(gi, gc));
            h = cmul(go, tanh_v(c));
            hs.push_back(h);
        }
        return hs;
    }
};

// Row-wise layer normalization with learned gain/offset.
struct LayerNorm {
    Var gamma;  // 1 x d
    Var beta;   // 1 x d
    Eigen::Index dim = 0;
    double eps = 1e-5;

    LayerNorm() = default;
    LayerNorm(ParamStore& store, const std::string& name, Eigen::Index d) : dim(d) {
        gamma = store.add(name + ".gamma", Matrix::Ones(1, d));
        beta = store.add(name + ".beta", Matrix::Zero(1, d));
    }

    Var operator()(const Var& x) const {
        const double inv_d = 1.0 / static_cast<double>(dim);
        const Var mu = scalar_mul(rowwise_sum(x), inv_d);                    // n x 1
        const Var xc = sub(x, broadcast_col(mu, dim));
        const Var var = scalar_mul(rowwise_sum(square(xc)), inv_d);         // n x 1
        const Var inv = cdiv(constant(Matrix::Ones(x->rows(), 1)),
                             sqrt_v(scalar_add(var, eps)));
        const Var norm = cmul(xc, broadcast_col(inv, dim));
        return add(cmul(norm, broadcast_row(gamma, x->rows())),
                   broadcast_row(beta, x->rows()));
    }
};

// Inverted dropout; identity when not training or p == 0.
inline Var dropout(const Var& x, double p, bool training, Rng* rng) {
    if (!training || p <= 0.0) return x;
    if (!rng) throw ContractError("dropout in training mode needs an rng");
    const double keep = 1.0 - p;
    Matrix mask(x->rows(), x->cols());
    for (Eigen::Index r = 0; r < mask.rows(); ++r)
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
            mask(r, c) = rng->uniform() < keep ? 1.0 / keep : 0.0;
    return cmul(x, constant(std::move(mask)));
}

// Adam with bias correction; state is lazily shaped on first step.
struct Adam {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<Matrix> m, v;
    long t = 0;

    explicit Adam(double learning_rate) : lr(learning_rate) {}

    void step(const std::vector<Var>& params, const std::vector<Var>& grads) {
        if (params.size() != grads.size())
            throw ContractError("adam: parameter/gradient count mismatch");
        if (m.empty()) {
            for (const auto& p : params) {
                m.emplace_back(Matrix::Zero(p->rows(), p->cols()));
                v.emplace_back(Matrix::Zero(p->rows(), p->cols()));
            }
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix& g = grads[i]->val;
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g.cwiseProduct(g);
            const Matrix mhat = m[i] / c1;
            const Matrix vhat = v[i] / c2;
            params[i]->val -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
        }
    }
};

}  // namespace genf::nn
