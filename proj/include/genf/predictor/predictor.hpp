#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "genf/data/types.hpp"
#include "genf/errors.hpp"
#include "genf/nn/autodiff.hpp"
#include "genf/nn/layers.hpp"
#include "genf/predictor/attention.hpp"
#include "genf/rng.hpp"

namespace genf::predictor {

enum class MaskMode { kCausal, kNone };

// Shape of the shallow transformer: H heads of width d_k over model width d,
// a d -> ffn_dim -> d feed-forward, and small encoder/decoder stacks.
struct AttentionConfig {
    Eigen::Index num_heads = 3;   // H
    Eigen::Index model_dim = 12;  // d
    Eigen::Index head_dim = 4;    // d_k
    Eigen::Index ffn_dim = 24;
    int encoder_layers = 2;
    int decoder_layers = 2;
    MaskMode mask = MaskMode::kCausal;
    double dropout = 0.1;

    void validate() const {
        if (num_heads < 1 || model_dim < 1 || head_dim < 1 || ffn_dim < 1)
            throw ConfigError("attention config: dimensions must be >= 1");
        if (num_heads * head_dim != model_dim)
            throw ConfigError("attention config: num_heads * head_dim must equal model_dim");
        if (encoder_layers < 1 || decoder_layers < 1)
            throw ConfigError("attention config: layer counts must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw ConfigError("attention config: dropout must lie in [0, 1)");
    }
};

// Post-norm encoder block: self-attention and feed-forward sublayers, each
// followed by dropout, a residual add, and layer normalization.
struct EncoderLayer {
    MultiHead attn;
    nn::Dense ffn1, ffn2;
    nn::LayerNorm ln1, ln2;

    EncoderLayer() = default;
    EncoderLayer(nn::ParamStore& store, const std::string& name,
                 const AttentionConfig& cfg, Rng& rng) {
        attn = MultiHead(store, name + ".attn", cfg.model_dim, cfg.num_heads,
                         cfg.head_dim, rng);
        ffn1 = nn::Dense(store, name + ".ffn1", cfg.model_dim, cfg.ffn_dim, rng);
        ffn2 = nn::Dense(store, name + ".ffn2", cfg.ffn_dim, cfg.model_dim, rng);
        ln1 = nn::LayerNorm(store, name + ".ln1", cfg.model_dim);
        ln2 = nn::LayerNorm(store, name + ".ln2", cfg.model_dim);
    }

    Var operator()(Var x, Eigen::Index seq_rows, const Matrix& mask, double p,
                   bool training, Rng* rng) const {
        const Var a = attn(x, x, mask, seq_rows, seq_rows);
        x = ln1(nn::add(x, nn::dropout(a, p, training, rng)));
        const Var f = ffn2(nn::relu(ffn1(x)));
        return ln2(nn::add(x, nn::dropout(f, p, training, rng)));
    }
};

// Post-norm decoder block for a single query token per sample: token
// self-attention, cross-attention over the encoder states, feed-forward.
struct DecoderLayer {
    MultiHead self_attn, cross_attn;
    nn::Dense ffn1, ffn2;
    nn::LayerNorm ln1, ln2, ln3;

    DecoderLayer() = default;
    DecoderLayer(nn::ParamStore& store, const std::string& name,
                 const AttentionConfig& cfg, Rng& rng) {
        self_attn = MultiHead(store, name + ".self", cfg.model_dim, cfg.num_heads,
                              cfg.head_dim, rng);
        cross_attn = MultiHead(store, name + ".cross", cfg.model_dim, cfg.num_heads,
                               cfg.head_dim, rng);
        ffn1 = nn::Dense(store, name + ".ffn1", cfg.model_dim, cfg.ffn_dim, rng);
        ffn2 = nn::Dense(store, name + ".ffn2", cfg.ffn_dim, cfg.model_dim, rng);
        ln1 = nn::LayerNorm(store, name + ".ln1", cfg.model_dim);
        ln2 = nn::LayerNorm(store, name + ".ln2", cfg.model_dim);
        ln3 = nn::LayerNorm(store, name + ".ln3", cfg.model_dim);
    }

    Var operator()(Var t, const Var& enc, Eigen::Index enc_rows, double p,
                   bool training, Rng* rng) const {
        const Var sa = self_attn(t, t, zero_mask(1, 1), 1, 1);
        t = ln1(nn::add(t, nn::dropout(sa, p, training, rng)));
        const Var ca = cross_attn(t, enc, zero_mask(1, enc_rows), 1, enc_rows);
        t = ln2(nn::add(t, nn::dropout(ca, p, training, rng)));
        const Var f = ffn2(nn::relu(ffn1(t)));
        return ln3(nn::add(t, nn::dropout(f, p, training, rng)));
    }
};

// The forecasting transformer: project each window row to model width, add
// the position signal, run the encoder stack, then let a learned query token
// attend to the encoder states through the decoder stack and emit the output
// row. `out_features` is 1 for a single-target head or K for the one-step
// head that closes iterative recursion.
struct PredictorParams {
    AttentionConfig config;
    Eigen::Index features = 0;      // K columns per window row
    Eigen::Index window = 0;        // M rows per window
    Eigen::Index out_features = 0;  // width of the output row
    int target_feature = 0;         // column the scalar head predicts; -1 = all
    int horizon = 0;                // set by training; 0 until trained

    nn::ParamStore store;
    nn::Dense input_proj;
    std::vector<EncoderLayer> encoder;
    std::vector<DecoderLayer> decoder;
    Var query;  // 1 x d learned decoder input
    nn::Dense head;

    static PredictorParams init(Eigen::Index features, Eigen::Index window,
                                const AttentionConfig& config,
                                Eigen::Index out_features, std::uint64_t seed) {
        config.validate();
        if (features < 1 || window < 1 || out_features < 1)
            throw ConfigError("predictor: features, window, out_features must be >= 1");
        PredictorParams p;
        p.config = config;
        p.features = features;
        p.window = window;
        p.out_features = out_features;
        Rng rng(hash_combine(seed, 0xa77eULL));
        p.input_proj = nn::Dense(p.store, "in", features, config.model_dim, rng);
        for (int l = 0; l < config.encoder_layers; ++l)
            p.encoder.emplace_back(p.store, "enc" + std::to_string(l), config, rng);
        for (int l = 0; l < config.decoder_layers; ++l)
            p.decoder.emplace_back(p.store, "dec" + std::to_string(l), config, rng);
        p.query = p.store.add("query", nn::xavier_uniform(1, config.model_dim,
                                                          config.model_dim,
                                                          config.model_dim, rng));
        p.head = nn::Dense(p.store, "head", config.model_dim, out_features, rng);
        return p;
    }

    std::size_t parameter_count() const { return store.count(); }
};

namespace detail {

inline void check_window(const Matrix& w, Eigen::Index rows, Eigen::Index cols,
                         const char* who) {
    if (w.rows() != rows || w.cols() != cols)
        throw ContractError(std::string(who) + ": window must be " +
                            std::to_string(rows) + "x" + std::to_string(cols) +
                            ", got " + std::to_string(w.rows()) + "x" +
                            std::to_string(w.cols()));
}

// Stacks B windows into one (B*M) x K constant and runs the encoder stack.
inline Var encode(const PredictorParams& p,
                  const std::vector<const Matrix*>& windows, bool training,
                  Rng* rng) {
    if (windows.empty()) throw ContractError("predictor: empty batch");
    const auto b = static_cast<Eigen::Index>(windows.size());
    Matrix stacked(b * p.window, p.features);
    for (Eigen::Index i = 0; i < b; ++i) {
        check_window(*windows[static_cast<std::size_t>(i)], p.window, p.features,
                     "predictor");
        stacked.middleRows(i * p.window, p.window) =
            *windows[static_cast<std::size_t>(i)];
    }
    Var x = p.input_proj(nn::constant(std::move(stacked)));
    const Matrix pe = positional_encoding(p.window, p.config.model_dim);
    x = nn::add(x, nn::constant(pe.replicate(b, 1)));
    const Matrix mask = p.config.mask == MaskMode::kCausal
                            ? causal_mask(p.window)
                            : zero_mask(p.window, p.window);
    for (const auto& layer : p.encoder)
        x = layer(x, p.window, mask, p.config.dropout, training, rng);
    return x;
}

}  // namespace detail

// Batched forward: B windows -> B x out_features. Dropout fires only when
// `training` is set (then `rng` must be provided).
inline Var predictor_output(const PredictorParams& p,
                            const std::vector<const Matrix*>& windows,
                            bool training = false, Rng* rng = nullptr) {
    const auto b = static_cast<Eigen::Index>(windows.size());
    const Var enc = detail::encode(p, windows, training, rng);
    Var t = nn::broadcast_row(p.query, b);
    for (const auto& layer : p.decoder)
        t = layer(t, enc, p.window, p.config.dropout, training, rng);
    return p.head(t);
}

// Single-window evaluation forward; returns the 1 x out_features output row.
inline Matrix predictor_forward(const PredictorParams& p, const Matrix& window) {
    detail::check_window(window, p.window, p.features, "predictor");
    return predictor_output(p, {&window})->val;
}

// Encoder representation of one window (evaluation mode), M x d. Exposed so
// causality of the encoder stack is directly observable.
inline Matrix encoder_states(const PredictorParams& p, const Matrix& window) {
    detail::check_window(window, p.window, p.features, "predictor");
    return detail::encode(p, {&window}, false, nullptr)->val;
}

struct PredictorHyper {
    double learning_rate = 0.001;
    int batch_size = 64;
    int epochs = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(learning_rate > 0.0))
            throw ConfigError("predictor: learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("predictor: batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("predictor: epochs must be >= 1");
    }
};

struct PredictorBundle {
    PredictorParams params;
    PredictorHyper hyper;
    std::vector<double> loss_trace;  // per-epoch mean squared error
};

inline constexpr int kAllFeatures = -1;

namespace detail {

inline std::string trace_summary(const std::vector<double>& trace) {
    std::ostringstream os;
    os << "epochs=" << trace.size();
    if (!trace.empty()) os << " mse=" << trace.back();
    return os.str();
}

}  // namespace detail

// Mean-squared-error regression of the window onto the value at `horizon`.
// `target_feature` selects the predicted column; kAllFeatures trains the
// K-wide one-step head. Deterministic for a fixed hyper.seed.
inline PredictorBundle train_predictor(const data::WindowedDataset& windows,
                                       int horizon, int target_feature,
                                       const AttentionConfig& config,
                                       const PredictorHyper& hyper) {
    hyper.validate();
    config.validate();
    if (windows.samples.empty()) throw DataError("predictor: no training windows");
    const Eigen::Index k = windows.samples.front().window.cols();
    if (target_feature != kAllFeatures &&
        (target_feature < 0 || target_feature >= k))
        throw ConfigError("predictor: target_feature out of range");
    const Eigen::Index out = target_feature == kAllFeatures ? k : 1;
    for (const auto& s : windows.samples)
        if (s.targets.find(horizon) == s.targets.end())
            throw DataError("predictor: sample lacks a horizon-" +
                            std::to_string(horizon) + " target");

    PredictorBundle bundle{PredictorParams::init(k, windows.window_length, config,
                                                 out,
                                                 hash_combine(hyper.seed, 0x9ed1ULL)),
                           hyper,
                           {}};
    bundle.params.target_feature = target_feature;
    bundle.params.horizon = horizon;

    nn::Adam opt(hyper.learning_rate);
    Rng order_rng(hash_combine(hyper.seed, 0x07d3ULL));
    Rng dropout_rng(hash_combine(hyper.seed, 0xd307ULL));

    std::vector<std::size_t> idx(windows.samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        order_rng.shuffle(idx);
        double sum = 0.0;
        int n = 0;
        std::size_t pos = 0;
        while (pos < idx.size()) {
            std::vector<const Matrix*> batch;
            std::vector<std::size_t> chosen;
            while (batch.size() < static_cast<std::size_t>(hyper.batch_size) &&
                   pos < idx.size()) {
                chosen.push_back(idx[pos]);
                batch.push_back(&windows.samples[idx[pos]].window);
                ++pos;
            }
            const auto b = static_cast<Eigen::Index>(batch.size());
            Matrix target(b, out);
            for (Eigen::Index i = 0; i < b; ++i) {
                const auto& tv =
                    windows.samples[chosen[static_cast<std::size_t>(i)]].targets.at(
                        horizon);
                if (target_feature == kAllFeatures)
                    target.row(i) = tv.transpose();
                else
                    target(i, 0) = tv(target_feature);
            }
            const Var pred =
                predictor_output(bundle.params, batch, true, &dropout_rng);
            const Var loss =
                nn::mean_all(nn::square(nn::sub(pred, nn::constant(target))));
            const double lv = loss->val(0, 0);
            if (!std::isfinite(lv))
                throw TrainingError("predictor: loss diverged",
                                    detail::trace_summary(bundle.loss_trace));
            opt.step(bundle.params.store.params,
                     nn::grad(loss, bundle.params.store.params));
            sum += lv;
            ++n;
        }
        bundle.loss_trace.push_back(sum / n);
    }
    return bundle;
}

}  // namespace genf::predictor
