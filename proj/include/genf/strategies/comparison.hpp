#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "genf/cwgan/cwgan.hpp"
#include "genf/data/preprocess.hpp"
#include "genf/itc/itc.hpp"
#include "genf/metrics/metrics.hpp"
#include "genf/predictor/lstm_baseline.hpp"
#include "genf/predictor/predictor.hpp"
#include "genf/rng.hpp"
#include "genf/strategies/strategies.hpp"

namespace genf::strategies {

// Which model produces the rows for the iterative strategy.
enum class OneStepKind { kTransformer, kGenerator };

// How train/test units are formed: a seeded unit-level shuffle, or a
// per-unit chronological cut (early rows train, late rows test).
enum class SplitMode { kUnitRandom, kChronological };

// Full sweep description: every (strategy, horizon, synth-steps, seed) cell
// runs the whole pipeline — unit split, scaling, windowing, conditioning
// split, training, evaluation on the held-out test units.
struct ComparisonConfig {
    int window = 20;                           // condition rows per sample (M)
    std::vector<int> horizons = {8};           // forecast horizons (n)
    std::vector<int> synth_steps = {2, 4, 6};  // synthetic prefixes (l), generative cells
    std::vector<std::uint64_t> seeds = {1};
    int target_feature = 0;

    bool scale = true;        // min-max scale on train-split statistics
    bool use_itc = true;      // score-based generator/predictor unit split
    bool include_direct = true;     // one-shot multi-horizon forecaster
    bool include_iterative = true;  // chained one-step rollout
    bool include_lstm = false;  // add a recurrent direct baseline per horizon
    OneStepKind one_step = OneStepKind::kTransformer;
    SplitMode split_mode = SplitMode::kUnitRandom;

    data::SplitRatios ratios{0.8, 0.2, 0.0};
    itc::ItcConfig itc;
    cwgan::CwganHyper gan;
    predictor::AttentionConfig attention;
    predictor::PredictorHyper predictor_hyper;

    // 0 means unlimited; otherwise a seeded uniform subsample of the windows.
    std::size_t max_train_windows = 0;
    std::size_t max_eval_windows = 0;

    void validate() const {
        if (window < 1) throw ConfigError("comparison: window must be >= 1");
        if (horizons.empty()) throw ConfigError("comparison: need at least one horizon");
        for (int n : horizons)
            if (n < 1) throw ConfigError("comparison: horizons must be >= 1");
        if (seeds.empty()) throw ConfigError("comparison: need at least one seed");
        if (target_feature < 0) throw ConfigError("comparison: target feature must be >= 0");
        const int min_n = *std::min_element(horizons.begin(), horizons.end());
        for (int l : synth_steps) {
            if (l < 0) throw ConfigError("comparison: synthetic step counts must be >= 0");
            if (l >= min_n)
                throw ConfigError("comparison: synthetic step count " + std::to_string(l) +
                                  " must stay below every horizon (smallest is " +
                                  std::to_string(min_n) + ")");
            if (l > window)
                throw ConfigError("comparison: synthetic step count " + std::to_string(l) +
                                  " exceeds the window length " + std::to_string(window));
        }
        auto dup = [](auto v) {
            std::sort(v.begin(), v.end());
            return std::adjacent_find(v.begin(), v.end()) != v.end();
        };
        if (dup(horizons)) throw ConfigError("comparison: duplicate horizons");
        if (dup(synth_steps)) throw ConfigError("comparison: duplicate synthetic step counts");
        if (dup(seeds)) throw ConfigError("comparison: duplicate seeds");
        if (!include_direct && !include_iterative && !include_lstm && synth_steps.empty())
            throw ConfigError("comparison: no strategies enabled");
        if (!(ratios.test > 0.0))
            throw ConfigError("comparison: the unit split needs a positive test share");
        ratios.validate();
        itc.validate();
        gan.validate();
        attention.validate();
        predictor_hyper.validate();
    }
};

// One replicate: a strategy evaluated at one horizon for one seed. Errors are
// captured per cell so one diverging run cannot abort the sweep.
struct CellResult {
    std::string strategy;  // "direct" | "iterative" | "genf" | "lstm"
    int horizon = 0;
    int synth_steps = 0;  // nonzero only for generative cells
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    double mse = std::numeric_limits<double>::quiet_NaN();
    double mae = std::numeric_limits<double>::quiet_NaN();
    double smape = std::numeric_limits<double>::quiet_NaN();
    std::size_t eval_count = 0;
    // Metrics are always reported in the data's original units: any scaling
    // applied for training is inverted on predictions and targets first.
    std::string space = "original";
};

// Across-seed aggregate for one (strategy, horizon, synth-steps) cell.
struct CellSummary {
    std::string strategy;
    int horizon = 0;
    int synth_steps = 0;
    int replicates = 0;  // successful seeds
    int failures = 0;
    double mse_mean = 0.0, mse_std = 0.0;
    double mae_mean = 0.0, mae_std = 0.0;
    double smape_mean = 0.0, smape_std = 0.0;
};

struct ComparisonReport {
    std::vector<CellResult> cells;        // replicate level, deterministic order
    std::vector<CellSummary> summaries;   // aggregated over seeds
    std::vector<std::string> warnings;    // scaling/windowing notes, per seed
};

namespace detail {

// Seed-stream tags, one per independent random decision in the pipeline.
inline constexpr std::uint64_t kSplitSalt = 0x5917ULL;
inline constexpr std::uint64_t kCapSalt = 0xca90ULL;
inline constexpr std::uint64_t kItcSalt = 0x17cbULL;
inline constexpr std::uint64_t kGanSalt = 0x6a40ULL;
inline constexpr std::uint64_t kDirectSalt = 0xd12eULL;
inline constexpr std::uint64_t kOneStepSalt = 0x15e9ULL;
inline constexpr std::uint64_t kGenerativeSalt = 0x6e4fULL;
inline constexpr std::uint64_t kLstmSalt = 0x15d0ULL;
inline constexpr std::uint64_t kRewriteTrainSalt = 0x2e11ULL;
inline constexpr std::uint64_t kRewriteTestSalt = 0x2e7eULL;

inline constexpr std::size_t kEvalChunk = 256;   // windows per forward batch
inline constexpr std::size_t kSynthChunk = 256;  // windows per synthesis batch

inline std::uint64_t cell_seed(std::uint64_t seed, std::uint64_t salt, std::uint64_t a = 0,
                               std::uint64_t b = 0) {
    return hash_combine(hash_combine(hash_combine(seed, salt), a), b);
}

// Batched scalar predictions over every window, chunked to bound memory.
using BatchFn = std::function<Matrix(const std::vector<const Matrix*>&)>;

inline std::vector<double> predict_scalar(const BatchFn& batch,
                                          const data::WindowedDataset& windows) {
    std::vector<double> out;
    out.reserve(windows.samples.size());
    for (std::size_t at = 0; at < windows.samples.size(); at += kEvalChunk) {
        const std::size_t end = std::min(at + kEvalChunk, windows.samples.size());
        std::vector<const Matrix*> ptrs;
        ptrs.reserve(end - at);
        for (std::size_t i = at; i < end; ++i) ptrs.push_back(&windows.samples[i].window);
        const Matrix rows = batch(ptrs);
        for (Eigen::Index r = 0; r < rows.rows(); ++r) out.push_back(rows(r, 0));
    }
    return out;
}

// Observed values for one horizon and feature, aligned with the sample order.
inline std::vector<double> observed(const data::WindowedDataset& windows, int horizon,
                                    int target_feature) {
    std::vector<double> out;
    out.reserve(windows.samples.size());
    for (const auto& s : windows.samples) {
        const auto it = s.targets.find(horizon);
        if (it == s.targets.end())
            throw ContractError("comparison: window sample lacks a horizon-" +
                                std::to_string(horizon) + " target");
        out.push_back(it->second(target_feature));
    }
    return out;
}

// n chained one-step batch predictions; returns the target-feature column of
// the last emitted row for every window. Chunked so each chunk carries its
// own sliding copies.
inline std::vector<double> iterative_rollout(const BatchFn& step,
                                             const data::WindowedDataset& windows, int n,
                                             int target_feature) {
    std::vector<double> out;
    out.reserve(windows.samples.size());
    for (std::size_t at = 0; at < windows.samples.size(); at += kEvalChunk) {
        const std::size_t end = std::min(at + kEvalChunk, windows.samples.size());
        std::vector<Matrix> work;
        work.reserve(end - at);
        for (std::size_t i = at; i < end; ++i) work.push_back(windows.samples[i].window);
        Matrix last;
        for (int s = 0; s < n; ++s) {
            std::vector<const Matrix*> ptrs;
            ptrs.reserve(work.size());
            for (const auto& w : work) ptrs.push_back(&w);
            last = step(ptrs);
            if (last.rows() != static_cast<Eigen::Index>(work.size()) ||
                last.cols() != work.front().cols())
                throw ContractError("comparison: one-step batch emitted " +
                                    std::to_string(last.rows()) + "x" +
                                    std::to_string(last.cols()));
            for (std::size_t i = 0; i < work.size(); ++i) {
                Matrix& w = work[i];
                const Eigen::Index m = w.rows();
                if (m > 1) w.topRows(m - 1) = w.bottomRows(m - 1).eval();
                w.row(m - 1) = last.row(static_cast<Eigen::Index>(i));
            }
        }
        for (Eigen::Index r = 0; r < last.rows(); ++r) out.push_back(last(r, target_feature));
    }
    return out;
}

// Replace each window with its slide past l generated rows; targets (which
// refer to original absolute times) are kept untouched. One independent
// noise stream per sample, derived from the sample index, so the rewrite is
// chunking-invariant and reproducible.
inline data::WindowedDataset rewrite_windows(const cwgan::GeneratorParams& gen,
                                             data::WindowedDataset windows, int l,
                                             std::uint64_t base_seed) {
    if (l == 0) return windows;
    for (std::size_t at = 0; at < windows.samples.size(); at += kSynthChunk) {
        const std::size_t end = std::min(at + kSynthChunk, windows.samples.size());
        std::vector<Matrix> conds;
        std::vector<std::uint64_t> seeds;
        conds.reserve(end - at);
        seeds.reserve(end - at);
        for (std::size_t i = at; i < end; ++i) {
            conds.push_back(windows.samples[i].window);
            seeds.push_back(hash_combine(base_seed, static_cast<std::uint64_t>(i)));
        }
        const std::vector<Matrix> synth =
            cwgan::generate_recursive_batch(gen, std::move(conds), l, seeds);
        for (std::size_t i = at; i < end; ++i)
            windows.samples[i].window =
                extend_window(windows.samples[i].window, synth[i - at]);
    }
    return windows;
}

inline double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

struct CellPlan {
    std::string strategy;
    int horizon = 0;
    int synth_steps = 0;
};

// Canonical cell order for one seed: direct, iterative, optional recurrent
// baseline, then generative cells by (horizon, synth-steps) in config order.
inline std::vector<CellPlan> cell_grid(const ComparisonConfig& cfg) {
    std::vector<CellPlan> grid;
    if (cfg.include_direct)
        for (int n : cfg.horizons) grid.push_back({"direct", n, 0});
    if (cfg.include_iterative)
        for (int n : cfg.horizons) grid.push_back({"iterative", n, 0});
    if (cfg.include_lstm)
        for (int n : cfg.horizons) grid.push_back({"lstm", n, 0});
    for (int n : cfg.horizons)
        for (int l : cfg.synth_steps) grid.push_back({"genf", n, l});
    return grid;
}

}  // namespace detail

inline std::vector<CellSummary> summarize_cells(const std::vector<CellResult>& cells) {
    std::vector<CellSummary> out;
    std::vector<std::array<std::vector<double>, 3>> acc;  // mse, mae, smape per key
    auto slot = [&](const CellResult& c) -> std::size_t {
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i].strategy == c.strategy && out[i].horizon == c.horizon &&
                out[i].synth_steps == c.synth_steps)
                return i;
        CellSummary s;
        s.strategy = c.strategy;
        s.horizon = c.horizon;
        s.synth_steps = c.synth_steps;
        out.push_back(std::move(s));
        acc.emplace_back();
        return out.size() - 1;
    };
    for (const auto& c : cells) {
        const std::size_t i = slot(c);
        if (c.failed) {
            ++out[i].failures;
            continue;
        }
        ++out[i].replicates;
        acc[i][0].push_back(c.mse);
        acc[i][1].push_back(c.mae);
        acc[i][2].push_back(c.smape);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].replicates == 0) continue;
        out[i].mse_mean = detail::mean_of(acc[i][0]);
        out[i].mse_std = detail::sample_std(acc[i][0], out[i].mse_mean);
        out[i].mae_mean = detail::mean_of(acc[i][1]);
        out[i].mae_std = detail::sample_std(acc[i][1], out[i].mae_mean);
        out[i].smape_mean = detail::mean_of(acc[i][2]);
        out[i].smape_std = detail::sample_std(acc[i][2], out[i].smape_mean);
    }
    return out;
}

// Run every cell of the sweep. Deterministic for a fixed dataset and config:
// repeated calls produce identical reports. Individual cell failures (e.g. a
// diverging training run) are recorded on the cell and the sweep continues.
inline ComparisonReport run_comparison(const data::TimeSeriesDataset& dataset,
                                       const ComparisonConfig& cfg) {
    cfg.validate();
    dataset.validate();
    if (static_cast<std::size_t>(cfg.target_feature) >= dataset.feature_count())
        throw ConfigError("comparison: target feature " + std::to_string(cfg.target_feature) +
                          " out of range for " + std::to_string(dataset.feature_count()) +
                          " features");

    ComparisonReport report;
    const std::vector<detail::CellPlan> grid = detail::cell_grid(cfg);
    const bool any_generative = std::any_of(
        grid.begin(), grid.end(), [](const auto& c) { return c.strategy == "genf"; });
    const bool any_synthesis =
        std::any_of(grid.begin(), grid.end(),
                    [](const auto& c) { return c.strategy == "genf" && c.synth_steps > 0; });
    const bool any_iterative = std::any_of(
        grid.begin(), grid.end(), [](const auto& c) { return c.strategy == "iterative"; });
    const bool need_gan =
        any_synthesis || (any_iterative && cfg.one_step == OneStepKind::kGenerator);

    std::vector<int> all_horizons = cfg.horizons;
    all_horizons.push_back(1);  // one-step targets for the generator and rollouts

    for (const std::uint64_t seed : cfg.seeds) {
        const std::string tag = "seed " + std::to_string(seed) + ": ";
        auto fail_cells = [&](const std::string& why, auto&& pred) {
            for (const auto& plan : grid) {
                if (!pred(plan)) continue;
                CellResult c;
                c.strategy = plan.strategy;
                c.horizon = plan.horizon;
                c.synth_steps = plan.synth_steps;
                c.seed = seed;
                c.failed = true;
                c.error = why;
                report.cells.push_back(std::move(c));
            }
        };

        // ---- shared preparation: split, scale, window, cap -----------------
        data::WindowedDataset train_windows, test_windows;
        data::TimeSeriesDataset train_split;   // kept for the conditioning split
        data::ScalingParams scaling;           // identity unless cfg.scale
        bool scaled = false;
        try {
            data::UnitSplit split =
                cfg.split_mode == SplitMode::kChronological
                    ? data::split_chronological(dataset, cfg.ratios)
                    : data::split_units(dataset, cfg.ratios,
                                        detail::cell_seed(seed, detail::kSplitSalt));
            if (split.train.units.empty() || split.test.units.empty())
                throw DataError("comparison: empty train or test split");
            data::TimeSeriesDataset train = std::move(split.train);
            data::TimeSeriesDataset test = std::move(split.test);
            if (cfg.scale) {
                scaling = data::fit_minmax(train);
                scaled = true;
                for (const auto& w : scaling.warnings) report.warnings.push_back(tag + w);
                train = data::apply_minmax(std::move(train), scaling);
                test = data::apply_minmax(std::move(test), scaling);
            }
            train_split = train;
            train_windows = data::make_windows(train, cfg.window, all_horizons);
            test_windows = data::make_windows(test, cfg.window, all_horizons);
            for (const auto& u : train_windows.skipped_units)
                report.warnings.push_back(tag + "train unit " + u + " too short, skipped");
            for (const auto& u : test_windows.skipped_units)
                report.warnings.push_back(tag + "test unit " + u + " too short, skipped");
            if (train_windows.samples.empty()) throw DataError("comparison: no training windows");
            if (test_windows.samples.empty()) throw DataError("comparison: no evaluation windows");
            train_windows = data::subsample_windows(
                std::move(train_windows), cfg.max_train_windows,
                detail::cell_seed(seed, detail::kCapSalt, 0));
            test_windows = data::subsample_windows(
                std::move(test_windows), cfg.max_eval_windows,
                detail::cell_seed(seed, detail::kCapSalt, 3));
        } catch (const std::exception& e) {
            fail_cells(e.what(), [](const auto&) { return true; });
            continue;
        }

        // Metrics are computed in original data units: training happens in
        // scaled space, but predictions and targets are mapped back first.
        auto to_original = [&](std::vector<double> v) {
            if (scaled)
                for (double& x : v) x = data::unscale_value(scaling, cfg.target_feature, x);
            return v;
        };
        auto push_cell = [&](const detail::CellPlan& plan, std::vector<double> preds,
                             std::vector<double> truth) {
            preds = to_original(std::move(preds));
            truth = to_original(std::move(truth));
            CellResult c;
            c.strategy = plan.strategy;
            c.horizon = plan.horizon;
            c.synth_steps = plan.synth_steps;
            c.seed = seed;
            c.mse = metrics::mse(preds, truth);
            c.mae = metrics::mae(preds, truth);
            c.smape = metrics::smape(preds, truth);
            c.eval_count = preds.size();
            report.cells.push_back(std::move(c));
        };
        auto push_failure = [&](const detail::CellPlan& plan, const std::string& why) {
            CellResult c;
            c.strategy = plan.strategy;
            c.horizon = plan.horizon;
            c.synth_steps = plan.synth_steps;
            c.seed = seed;
            c.failed = true;
            c.error = why;
            report.cells.push_back(std::move(c));
        };

        // Train a single-output model on `source` at horizon n and return its
        // test predictions. Shared by the direct cells and the generative
        // cells (whose training windows were rewritten beforehand).
        auto direct_predictions = [&](const data::WindowedDataset& source,
                                      const data::WindowedDataset& eval, int n,
                                      std::uint64_t train_seed) {
            predictor::PredictorHyper hyper = cfg.predictor_hyper;
            hyper.seed = train_seed;
            const predictor::PredictorBundle bundle = predictor::train_predictor(
                source, n, cfg.target_feature, cfg.attention, hyper);
            return detail::predict_scalar(
                [&bundle](const std::vector<const Matrix*>& ptrs) {
                    return predictor::predictor_output(bundle.params, ptrs)->val;
                },
                eval);
        };

        // ---- direct cells ---------------------------------------------------
        for (const auto& plan : grid) {
            if (plan.strategy != "direct") continue;
            try {
                push_cell(plan,
                          direct_predictions(train_windows, test_windows, plan.horizon,
                                             detail::cell_seed(
                                                 seed, detail::kDirectSalt,
                                                 static_cast<std::uint64_t>(plan.horizon))),
                          detail::observed(test_windows, plan.horizon, cfg.target_feature));
            } catch (const std::exception& e) {
                push_failure(plan, e.what());
            }
        }

        // ---- generative preparation: conditioning split plus generator -----
        // The conditioning split routes which train units feed the generator
        // versus the downstream predictor; only generative cells depend on it.
        data::WindowedDataset gen_windows, pred_windows;
        bool cond_ready = false;
        std::string cond_error;
        if (any_generative || need_gan) {
            try {
                if (cfg.use_itc) {
                    itc::ItcConfig icfg = cfg.itc;
                    icfg.seed = detail::cell_seed(seed, detail::kItcSalt);
                    const itc::ItcSplit isplit = itc::itc_split(train_split, icfg);
                    gen_windows = data::make_windows(isplit.generator_set, cfg.window,
                                                     all_horizons);
                    pred_windows = data::make_windows(isplit.predictor_set, cfg.window,
                                                      all_horizons);
                    if (gen_windows.samples.empty())
                        throw DataError("comparison: no generator-training windows");
                    if (pred_windows.samples.empty())
                        throw DataError("comparison: no predictor-training windows");
                    gen_windows = data::subsample_windows(
                        std::move(gen_windows), cfg.max_train_windows,
                        detail::cell_seed(seed, detail::kCapSalt, 1));
                    pred_windows = data::subsample_windows(
                        std::move(pred_windows), cfg.max_train_windows,
                        detail::cell_seed(seed, detail::kCapSalt, 2));
                } else {
                    gen_windows = train_windows;
                    pred_windows = train_windows;
                }
                cond_ready = true;
            } catch (const std::exception& e) {
                cond_error = e.what();
            }
        }

        cwgan::CwganBundle gan_bundle;
        bool gan_ready = false;
        std::string gan_error;
        if (need_gan) {
            if (!cond_ready) {
                gan_error = cond_error;
            } else {
                try {
                    cwgan::CwganHyper gh = cfg.gan;
                    gh.seed = detail::cell_seed(seed, detail::kGanSalt);
                    gan_bundle = cwgan::train_cwgan(gen_windows, gh);
                    gan_ready = true;
                } catch (const std::exception& e) {
                    gan_error = e.what();
                }
            }
        }

        // ---- iterative cells ------------------------------------------------
        if (any_iterative) {
            detail::BatchFn step;
            predictor::PredictorBundle one_step_bundle;
            std::string step_error;
            try {
                if (cfg.one_step == OneStepKind::kTransformer) {
                    predictor::PredictorHyper hyper = cfg.predictor_hyper;
                    hyper.seed = detail::cell_seed(seed, detail::kOneStepSalt);
                    one_step_bundle = predictor::train_predictor(
                        train_windows, 1, predictor::kAllFeatures, cfg.attention, hyper);
                    step = [&one_step_bundle](const std::vector<const Matrix*>& ptrs) {
                        return predictor::predictor_output(one_step_bundle.params, ptrs)->val;
                    };
                } else {
                    if (!gan_ready)
                        throw TrainingError("comparison: generator unavailable for the "
                                            "iterative strategy: " + gan_error);
                    step = [&gan_bundle](const std::vector<const Matrix*>& ptrs) {
                        const Matrix zero = Matrix::Zero(
                            static_cast<Eigen::Index>(ptrs.size()),
                            gan_bundle.generator.features);
                        return cwgan::generator_output(gan_bundle.generator, ptrs,
                                                       nn::constant(zero))->val;
                    };
                }
            } catch (const std::exception& e) {
                step_error = e.what();
            }
            for (const auto& plan : grid) {
                if (plan.strategy != "iterative") continue;
                if (!step) {
                    push_failure(plan, step_error);
                    continue;
                }
                try {
                    push_cell(plan,
                              detail::iterative_rollout(step, test_windows, plan.horizon,
                                                        cfg.target_feature),
                              detail::observed(test_windows, plan.horizon,
                                               cfg.target_feature));
                } catch (const std::exception& e) {
                    push_failure(plan, e.what());
                }
            }
        }

        // ---- recurrent direct baseline --------------------------------------
        for (const auto& plan : grid) {
            if (plan.strategy != "lstm") continue;
            try {
                predictor::PredictorHyper hyper = cfg.predictor_hyper;
                hyper.seed = detail::cell_seed(seed, detail::kLstmSalt,
                                               static_cast<std::uint64_t>(plan.horizon));
                const predictor::LstmBaselineBundle bundle = predictor::train_lstm_baseline(
                    train_windows, plan.horizon, cfg.target_feature, hyper);
                push_cell(plan,
                          detail::predict_scalar(
                              [&bundle](const std::vector<const Matrix*>& ptrs) {
                                  return predictor::lstm_baseline_output(bundle.params,
                                                                          ptrs)->val;
                              },
                              test_windows),
                          detail::observed(test_windows, plan.horizon, cfg.target_feature));
            } catch (const std::exception& e) {
                push_failure(plan, e.what());
            }
        }

        // ---- generative cells -----------------------------------------------
        for (const auto& plan : grid) {
            if (plan.strategy != "genf") continue;
            try {
                if (!cond_ready) throw TrainingError("comparison: " + cond_error);
                if (plan.synth_steps == 0) {
                    // Zero synthetic steps degenerates to the direct strategy on
                    // the generative training set: same salt, same math.
                    push_cell(plan,
                              direct_predictions(
                                  pred_windows, test_windows, plan.horizon,
                                  detail::cell_seed(seed, detail::kDirectSalt,
                                                    static_cast<std::uint64_t>(plan.horizon))),
                              detail::observed(test_windows, plan.horizon,
                                               cfg.target_feature));
                    continue;
                }
                if (!gan_ready)
                    throw TrainingError("comparison: generator unavailable: " + gan_error);
                const std::uint64_t l64 = static_cast<std::uint64_t>(plan.synth_steps);
                const data::WindowedDataset rewritten_train = detail::rewrite_windows(
                    gan_bundle.generator, pred_windows, plan.synth_steps,
                    detail::cell_seed(seed, detail::kRewriteTrainSalt, l64));
                const data::WindowedDataset rewritten_test = detail::rewrite_windows(
                    gan_bundle.generator, test_windows, plan.synth_steps,
                    detail::cell_seed(seed, detail::kRewriteTestSalt, l64));
                push_cell(plan,
                          direct_predictions(
                              rewritten_train, rewritten_test, plan.horizon,
                              detail::cell_seed(seed, detail::kGenerativeSalt,
                                                static_cast<std::uint64_t>(plan.horizon), l64)),
                          detail::observed(test_windows, plan.horizon, cfg.target_feature));
            } catch (const std::exception& e) {
                push_failure(plan, e.what());
            }
        }
    }

    report.summaries = summarize_cells(report.cells);
    return report;
}

}  // namespace genf::strategies
