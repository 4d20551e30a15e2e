#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "genf/data/preprocess.hpp"
#include "genf/data/synth.hpp"
#include "genf/errors.hpp"
#include "genf/predictor/predictor.hpp"
#include "genf/rng.hpp"

namespace genf::theory {

// Measures how a trainable forecaster's squared error at a horizon splits
// into squared bias, variance across retrainings, and the process noise
// floor. The instrument needs a data source whose conditional mean and
// conditional variance are computable, which the synthetic autoregressive
// process provides; the forecaster itself is a black box behind TrainerFn.

// Batch predictions for every sample of a windowed dataset, in order.
using PredictFn = std::function<std::vector<double>(const data::WindowedDataset&)>;

// Train on the given windows against the given horizon; the returned
// function scores evaluation windows. Throwing marks this replicate failed.
using TrainerFn = std::function<PredictFn(const data::WindowedDataset& train, int horizon,
                                          std::uint64_t seed)>;

struct BiasVarianceConfig {
    std::vector<int> horizons = {1};
    int replicates = 10;        // independent retrainings (R)
    int train_units = 20;       // fresh series simulated per replicate
    int train_length = 200;
    int eval_windows = 200;     // independent evaluation series, one window each
    int window = 10;            // condition rows per sample (M)
    int target_feature = 0;
    std::uint64_t seed = 1;
    std::size_t max_train_windows = 0;  // 0 = unlimited, else seeded subsample

    void validate() const {
        if (horizons.empty()) throw ConfigError("bias-variance: need at least one horizon");
        for (int n : horizons)
            if (n < 1) throw ConfigError("bias-variance: horizons must be >= 1");
        auto sorted = horizons;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("bias-variance: duplicate horizons");
        if (replicates < 2)
            throw ConfigError("bias-variance: variance needs at least 2 replicates");
        if (train_units < 1 || train_length < 1)
            throw ConfigError("bias-variance: training data dimensions must be >= 1");
        if (eval_windows < 2)
            throw ConfigError("bias-variance: standard errors need at least 2 eval windows");
        if (window < 1) throw ConfigError("bias-variance: window must be >= 1");
        if (target_feature < 0)
            throw ConfigError("bias-variance: target feature must be >= 0");
        const int max_h = *std::max_element(horizons.begin(), horizons.end());
        if (train_length < window + max_h)
            throw ConfigError("bias-variance: train_length " + std::to_string(train_length) +
                              " leaves no room for a window plus horizon " +
                              std::to_string(max_h));
    }
};

// Decomposition at one horizon. Every estimate carries the Monte Carlo
// standard error of its mean over the independent evaluation windows.
// bias_sq subtracts variance/replicates from the squared mean-prediction
// error, making bias_sq + variance unbiased for the true sum (the raw
// squared distance overstates it by exactly that much); the estimate can
// therefore dip below zero when the true bias is near zero.
struct HorizonDecomposition {
    int horizon = 0;
    int replicates_used = 0;
    int replicates_failed = 0;
    std::vector<std::string> replicate_errors;

    double z = 0.0, z_se = 0.0;                // mean squared forecast error
    double bias_sq = 0.0, bias_sq_se = 0.0;    // squared bias estimate
    double variance = 0.0, variance_se = 0.0;  // across-retraining variance
    double noise = 0.0;                        // analytic conditional variance
    double closure_gap = 0.0, closure_se = 0.0;  // z - (bias_sq + variance + noise)
    std::size_t eval_count = 0;
};

struct BiasVarianceReport {
    std::vector<HorizonDecomposition> horizons;
};

namespace detail {

inline constexpr std::uint64_t kTrainDataSalt = 0x7da7aULL;
inline constexpr std::uint64_t kEvalDataSalt = 0xe7a1ULL;
inline constexpr std::uint64_t kTrainSalt = 0x77a1ULL;
inline constexpr std::uint64_t kCapSalt = 0xbca9ULL;

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    if (v.size() < 2) return {mean, 0.0};
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return {mean, std::sqrt(acc / (n - 1.0) / n)};
}

}  // namespace detail

// Run the full measurement: R independently simulated training sets, one
// trained model each, all scored on a shared evaluation set of independent
// windows. Deterministic for fixed spec, config, and trainer behavior.
inline BiasVarianceReport empirical_bias_variance(const data::ArProcessSpec& spec,
                                                  const BiasVarianceConfig& cfg,
                                                  const TrainerFn& trainer) {
    cfg.validate();
    spec.validate();
    if (!trainer) throw ContractError("bias-variance: no trainer supplied");
    if (cfg.target_feature >= spec.k)
        throw ConfigError("bias-variance: target feature " + std::to_string(cfg.target_feature) +
                          " out of range for " + std::to_string(spec.k) + " features");
    if (cfg.window < spec.order())
        throw ConfigError("bias-variance: window " + std::to_string(cfg.window) +
                          " is shorter than the process order " + std::to_string(spec.order()));

    const int max_h = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());

    // Shared evaluation set: one window per independent series, so the
    // standard errors can treat windows as i.i.d. draws.
    const data::TimeSeriesDataset eval_ds = data::synth_ar_process(
        spec, cfg.eval_windows, cfg.window + max_h,
        hash_combine(cfg.seed, detail::kEvalDataSalt));
    const data::WindowedDataset eval_windows =
        data::make_windows(eval_ds, cfg.window, cfg.horizons);
    if (eval_windows.samples.size() != static_cast<std::size_t>(cfg.eval_windows))
        throw ContractError("bias-variance: expected one evaluation window per series");
    const std::size_t e_count = eval_windows.samples.size();

    // One training corpus per replicate, shared across horizons.
    std::vector<data::WindowedDataset> train_sets;
    train_sets.reserve(static_cast<std::size_t>(cfg.replicates));
    for (int r = 0; r < cfg.replicates; ++r) {
        const std::uint64_t r64 = static_cast<std::uint64_t>(r);
        const data::TimeSeriesDataset ds = data::synth_ar_process(
            spec, cfg.train_units, cfg.train_length,
            hash_combine(hash_combine(cfg.seed, detail::kTrainDataSalt), r64));
        data::WindowedDataset w = data::make_windows(ds, cfg.window, cfg.horizons);
        if (w.samples.empty()) throw DataError("bias-variance: no training windows");
        train_sets.push_back(data::subsample_windows(
            std::move(w), cfg.max_train_windows,
            hash_combine(hash_combine(cfg.seed, detail::kCapSalt), r64)));
    }

    BiasVarianceReport report;
    for (const int n : cfg.horizons) {
        HorizonDecomposition out;
        out.horizon = n;
        out.eval_count = e_count;
        out.noise = spec.conditional_variance(n)(cfg.target_feature);

        std::vector<std::vector<double>> preds;  // per surviving replicate
        for (int r = 0; r < cfg.replicates; ++r) {
            try {
                const PredictFn fn = trainer(
                    train_sets[static_cast<std::size_t>(r)], n,
                    hash_combine(hash_combine(hash_combine(cfg.seed, detail::kTrainSalt),
                                              static_cast<std::uint64_t>(r)),
                                 static_cast<std::uint64_t>(n)));
                if (!fn) throw ContractError("bias-variance: trainer returned no scorer");
                std::vector<double> p = fn(eval_windows);
                if (p.size() != e_count)
                    throw ContractError("bias-variance: scorer returned " +
                                        std::to_string(p.size()) + " predictions for " +
                                        std::to_string(e_count) + " windows");
                preds.push_back(std::move(p));
            } catch (const std::exception& e) {
                ++out.replicates_failed;
                out.replicate_errors.push_back("replicate " + std::to_string(r) + ": " +
                                               e.what());
            }
        }
        out.replicates_used = static_cast<int>(preds.size());
        if (out.replicates_used < 2)
            throw TrainingError("bias-variance: only " + std::to_string(out.replicates_used) +
                                " of " + std::to_string(cfg.replicates) +
                                " replicates survived at horizon " + std::to_string(n));
        const double r_used = static_cast<double>(out.replicates_used);

        std::vector<double> z_e(e_count), b_e(e_count), v_e(e_count), g_e(e_count);
        for (std::size_t e = 0; e < e_count; ++e) {
            const auto& sample = eval_windows.samples[e];
            const double y = sample.targets.at(n)(cfg.target_feature);
            const double m = spec.conditional_mean(sample.window, n)(cfg.target_feature);

            double p_mean = 0.0, sq = 0.0;
            for (const auto& p : preds) {
                p_mean += p[e];
                sq += (y - p[e]) * (y - p[e]);
            }
            p_mean /= r_used;
            double s2 = 0.0;
            for (const auto& p : preds) s2 += (p[e] - p_mean) * (p[e] - p_mean);
            s2 /= (r_used - 1.0);

            z_e[e] = sq / r_used;
            v_e[e] = s2;
            b_e[e] = (p_mean - m) * (p_mean - m) - s2 / r_used;
            g_e[e] = z_e[e] - b_e[e] - v_e[e] - out.noise;
        }

        const auto z = detail::mean_se(z_e);
        const auto b = detail::mean_se(b_e);
        const auto v = detail::mean_se(v_e);
        const auto g = detail::mean_se(g_e);
        out.z = z.mean;
        out.z_se = z.se;
        out.bias_sq = b.mean;
        out.bias_sq_se = b.se;
        out.variance = v.mean;
        out.variance_se = v.se;
        out.closure_gap = g.mean;
        out.closure_se = g.se;
        report.horizons.push_back(std::move(out));
    }
    return report;
}

// Ready-made trainer: the attention forecaster with a single-output head.
inline TrainerFn transformer_trainer(const predictor::AttentionConfig& attention,
                                     const predictor::PredictorHyper& hyper,
                                     int target_feature) {
    return [attention, hyper, target_feature](const data::WindowedDataset& train, int horizon,
                                              std::uint64_t seed) -> PredictFn {
        predictor::PredictorHyper h = hyper;
        h.seed = seed;
        auto bundle = std::make_shared<predictor::PredictorBundle>(
            predictor::train_predictor(train, horizon, target_feature, attention, h));
        return [bundle](const data::WindowedDataset& eval) {
            constexpr std::size_t kChunk = 256;
            std::vector<double> out;
            out.reserve(eval.samples.size());
            for (std::size_t at = 0; at < eval.samples.size(); at += kChunk) {
                const std::size_t end = std::min(at + kChunk, eval.samples.size());
                std::vector<const nn::Matrix*> ptrs;
                ptrs.reserve(end - at);
                for (std::size_t i = at; i < end; ++i)
                    ptrs.push_back(&eval.samples[i].window);
                const nn::Matrix rows =
                    predictor::predictor_output(bundle->params, ptrs)->val;
                for (Eigen::Index r = 0; r < rows.rows(); ++r) out.push_back(rows(r, 0));
            }
            return out;
        };
    };
}

}  // namespace genf::theory
