#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "genf/errors.hpp"
#include "genf/nn/autodiff.hpp"
#include "genf/nn/layers.hpp"
#include "genf/rng.hpp"

namespace genf::predictor {

using nn::Matrix;
using nn::Var;

// Fixed sinusoidal position signal, one row per position: even columns carry
// sin(pos * w_i), odd columns cos(pos * w_i), with w_i = 10000^(-2i/d).
inline Matrix positional_encoding(Eigen::Index rows, Eigen::Index dim) {
    if (rows < 1 || dim < 1)
        throw ContractError("positional encoding: rows and dim must be >= 1");
    Matrix pe(rows, dim);
    for (Eigen::Index pos = 0; pos < rows; ++pos) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            const double i = static_cast<double>(c / 2);
            const double w =
                std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
            const double angle = static_cast<double>(pos) * w;
            pe(pos, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

// Additive attention masks: 0 keeps a slot, -inf removes it before softmax.
// A multiplicative 0/1 mask inside softmax would still leak probability to
// removed slots, so masking is always additive here.
inline Matrix causal_mask(Eigen::Index n) {
    const double ninf = -std::numeric_limits<double>::infinity();
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = r + 1; c < n; ++c) m(r, c) = ninf;
    return m;
}

inline Matrix zero_mask(Eigen::Index rows, Eigen::Index cols) {
    return Matrix::Zero(rows, cols);
}

// One attention head's projections: queries/keys/values, each d -> d_k.
struct HeadWeights {
    Var wq, wk, wv;  // d x d_k
    Var bq, bk, bv;  // 1 x d_k

    HeadWeights() = default;
    HeadWeights(nn::ParamStore& store, const std::string& name, Eigen::Index d,
                Eigen::Index d_k, Rng& rng) {
        wq = store.add(name + ".wq", nn::xavier_uniform(d, d_k, d, d_k, rng));
        bq = store.add(name + ".bq", Matrix::Zero(1, d_k));
        wk = store.add(name + ".wk", nn::xavier_uniform(d, d_k, d, d_k, rng));
        bk = store.add(name + ".bk", Matrix::Zero(1, d_k));
        wv = store.add(name + ".wv", nn::xavier_uniform(d, d_k, d, d_k, rng));
        bv = store.add(name + ".bv", Matrix::Zero(1, d_k));
    }
};

namespace detail {

inline Var project(const Var& x, const Var& w, const Var& b) {
    return nn::add(nn::matmul(x, w), nn::broadcast_row(b, x->rows()));
}

}  // namespace detail

// Scaled dot-product attention for one head over a batch of equally sized
// blocks. `q_in` stacks B blocks of q_rows rows, `kv_in` B blocks of kv_rows
// rows (both d wide); `mask` is one q_rows x kv_rows additive mask shared by
// every block. Returns B stacked blocks of q_rows x d_k.
inline Var head_attend(const Var& q_in, const Var& kv_in, const HeadWeights& w,
                       const Matrix& mask, Eigen::Index q_rows,
                       Eigen::Index kv_rows) {
    if (q_rows < 1 || kv_rows < 1)
        throw ContractError("attention: block sizes must be >= 1");
    if (q_in->rows() % q_rows != 0 || kv_in->rows() % kv_rows != 0)
        throw ContractError("attention: stacked rows must tile the block size");
    const Eigen::Index blocks = q_in->rows() / q_rows;
    if (kv_in->rows() / kv_rows != blocks)
        throw ContractError("attention: query and key/value block counts differ");
    if (mask.rows() != q_rows || mask.cols() != kv_rows)
        throw ContractError("attention: mask must be q_rows x kv_rows");
    const Eigen::Index d_k = w.wq->cols();

    const Var q = detail::project(q_in, w.wq, w.bq);
    const Var k = detail::project(kv_in, w.wk, w.bk);
    const Var v = detail::project(kv_in, w.wv, w.bv);

    Var scores = nn::scalar_mul(nn::bmm(q, k, q_rows, kv_rows, false, true),
                                1.0 / std::sqrt(static_cast<double>(d_k)));
    scores = nn::add(scores, nn::constant(mask.replicate(blocks, 1)));
    const Var attn = nn::softmax_rows(scores);
    return nn::bmm(attn, v, q_rows, kv_rows, false, false);
}

// Single-block self-attention: softmax(Q K^T / sqrt(d_k) + mask) V for one
// n x d sequence. Rows whose mask removes every slot raise a contract error
// (softmax has no mass to distribute).
inline Var attention_head(const Var& y, const HeadWeights& w, const Matrix& mask) {
    if (mask.rows() != y->rows() || mask.cols() != y->rows())
        throw ContractError("attention_head: mask must be n x n");
    return head_attend(y, y, w, mask, y->rows(), y->rows());
}

// H parallel heads concatenated and mixed by a d -> d output projection.
struct MultiHead {
    std::vector<HeadWeights> heads;
    nn::Dense out;

    MultiHead() = default;
    MultiHead(nn::ParamStore& store, const std::string& name, Eigen::Index d,
              Eigen::Index num_heads, Eigen::Index d_k, Rng& rng) {
        heads.reserve(static_cast<std::size_t>(num_heads));
        for (Eigen::Index h = 0; h < num_heads; ++h)
            heads.emplace_back(store, name + ".h" + std::to_string(h), d, d_k, rng);
        out = nn::Dense(store, name + ".out", num_heads * d_k, d, rng);
    }

    Var operator()(const Var& q_in, const Var& kv_in, const Matrix& mask,
                   Eigen::Index q_rows, Eigen::Index kv_rows) const {
        std::vector<Var> parts;
        parts.reserve(heads.size());
        for (const auto& h : heads)
            parts.push_back(head_attend(q_in, kv_in, h, mask, q_rows, kv_rows));
        Var cat = parts.front();
        for (std::size_t i = 1; i < parts.size(); ++i)
            cat = nn::concat_cols(cat, parts[i]);
        return out(cat);
    }
};

}  // namespace genf::predictor
