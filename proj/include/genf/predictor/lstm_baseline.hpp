#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "genf/data/types.hpp"
#include "genf/errors.hpp"
#include "genf/nn/autodiff.hpp"
#include "genf/nn/layers.hpp"
#include "genf/predictor/predictor.hpp"
#include "genf/rng.hpp"

namespace genf::predictor {

inline constexpr Eigen::Index kLstmBaselineHidden = 10;
inline constexpr Eigen::Index kLstmBaselineDense = 10;

// Recurrent baseline: two stacked LSTM layers (hidden 10 each) over the
// window, then a 10-wide relu dense layer and the output row.
struct LstmBaselineParams {
    Eigen::Index features = 0;
    Eigen::Index window = 0;
    Eigen::Index out_features = 0;
    int target_feature = 0;
    int horizon = 0;

    nn::ParamStore store;
    nn::Lstm l1, l2;
    nn::Dense fc1, fc2;

    static LstmBaselineParams init(Eigen::Index features, Eigen::Index window,
                                   Eigen::Index out_features, std::uint64_t seed) {
        if (features < 1 || window < 1 || out_features < 1)
            throw ConfigError("lstm baseline: features, window, out_features must be >= 1");
        LstmBaselineParams p;
        p.features = features;
        p.window = window;
        p.out_features = out_features;
        Rng rng(hash_combine(seed, 0x15b1ULL));
        p.l1 = nn::Lstm(p.store, "l1", features, kLstmBaselineHidden, rng);
        p.l2 = nn::Lstm(p.store, "l2", kLstmBaselineHidden, kLstmBaselineHidden, rng);
        p.fc1 = nn::Dense(p.store, "fc1", kLstmBaselineHidden, kLstmBaselineDense, rng,
                          0.1);
        p.fc2 = nn::Dense(p.store, "fc2", kLstmBaselineDense, out_features, rng);
        return p;
    }

    std::size_t parameter_count() const { return store.count(); }
};

// Batched forward: B windows -> B x out_features.
inline Var lstm_baseline_output(const LstmBaselineParams& p,
                                const std::vector<const Matrix*>& windows) {
    if (windows.empty()) throw ContractError("lstm baseline: empty batch");
    const auto b = static_cast<Eigen::Index>(windows.size());
    std::vector<Var> steps;
    steps.reserve(static_cast<std::size_t>(p.window));
    for (Eigen::Index t = 0; t < p.window; ++t) {
        Matrix rows(b, p.features);
        for (Eigen::Index i = 0; i < b; ++i) {
            detail::check_window(*windows[static_cast<std::size_t>(i)], p.window,
                                 p.features, "lstm baseline");
            rows.row(i) = windows[static_cast<std::size_t>(i)]->row(t);
        }
        steps.push_back(nn::constant(std::move(rows)));
    }
    const std::vector<Var> h1 = p.l1.forward(steps);
    const std::vector<Var> h2 = p.l2.forward(h1);
    return p.fc2(nn::relu(p.fc1(h2.back())));
}

inline Matrix lstm_baseline_forward(const LstmBaselineParams& p,
                                    const Matrix& window) {
    detail::check_window(window, p.window, p.features, "lstm baseline");
    return lstm_baseline_output(p, {&window})->val;
}

struct LstmBaselineBundle {
    LstmBaselineParams params;
    PredictorHyper hyper;
    std::vector<double> loss_trace;
};

// Mean-squared-error training with the same optimizer settings and target
// conventions as the transformer counterpart.
inline LstmBaselineBundle train_lstm_baseline(const data::WindowedDataset& windows,
                                              int horizon, int target_feature,
                                              const PredictorHyper& hyper) {
    hyper.validate();
    if (windows.samples.empty())
        throw DataError("lstm baseline: no training windows");
    const Eigen::Index k = windows.samples.front().window.cols();
    if (target_feature != kAllFeatures &&
        (target_feature < 0 || target_feature >= k))
        throw ConfigError("lstm baseline: target_feature out of range");
    const Eigen::Index out = target_feature == kAllFeatures ? k : 1;
    for (const auto& s : windows.samples)
        if (s.targets.find(horizon) == s.targets.end())
            throw DataError("lstm baseline: sample lacks a horizon-" +
                            std::to_string(horizon) + " target");

    LstmBaselineBundle bundle{
        LstmBaselineParams::init(k, windows.window_length, out,
                                 hash_combine(hyper.seed, 0x15edULL)),
        hyper,
        {}};
    bundle.params.target_feature = target_feature;
    bundle.params.horizon = horizon;

    nn::Adam opt(hyper.learning_rate);
    Rng order_rng(hash_combine(hyper.seed, 0x07d3ULL));

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
            const Var pred = lstm_baseline_output(bundle.params, batch);
            const Var loss =
                nn::mean_all(nn::square(nn::sub(pred, nn::constant(target))));
            const double lv = loss->val(0, 0);
            if (!std::isfinite(lv))
                throw TrainingError("lstm baseline: loss diverged",
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
