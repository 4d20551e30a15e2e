#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "genf/data/types.hpp"
#include "genf/rng.hpp"

namespace genf::data {

// Forward-fill each feature within each unit. A missing value at a unit's
// first time step has no "last reading" to fall back on, so it is a hard
// data error rather than a silent back-fill.
inline TimeSeriesDataset impute_last_observation(TimeSeriesDataset dataset) {
    for (auto& unit : dataset.units) {
        for (Eigen::Index f = 0; f < unit.values.cols(); ++f) {
            if (std::isnan(unit.values(0, f)))
                throw DataError("unit " + unit.id + ", feature " +
                                dataset.feature_names[static_cast<std::size_t>(f)] +
                                ": missing value at the first time step");
            for (Eigen::Index t = 1; t < unit.values.rows(); ++t) {
                if (std::isnan(unit.values(t, f))) unit.values(t, f) = unit.values(t - 1, f);
            }
        }
    }
    return dataset;
}

// Fit per-feature min/max over the named units (all units when the selector
// is empty) and map every value through (x - min) / (max - min). Constant
// features map to 0.0 and are reported in ScalingParams::warnings.
struct ScaleResult {
    TimeSeriesDataset dataset;
    ScalingParams params;
};

inline ScalingParams fit_minmax(const TimeSeriesDataset& dataset,
                                const std::vector<std::string>& fit_unit_ids = {}) {
    const auto k = static_cast<Eigen::Index>(dataset.feature_count());
    ScalingParams params;
    params.feature_min = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
    params.feature_max = Eigen::VectorXd::Constant(k, -std::numeric_limits<double>::infinity());
    bool any = false;
    for (const auto& unit : dataset.units) {
        if (!fit_unit_ids.empty() &&
            std::find(fit_unit_ids.begin(), fit_unit_ids.end(), unit.id) == fit_unit_ids.end())
            continue;
        any = true;
        for (Eigen::Index f = 0; f < k; ++f) {
            params.feature_min(f) = std::min(params.feature_min(f), unit.values.col(f).minCoeff());
            params.feature_max(f) = std::max(params.feature_max(f), unit.values.col(f).maxCoeff());
        }
    }
    if (!any) throw DataError("scaling fit selector matches no units");
    for (Eigen::Index f = 0; f < k; ++f) {
        if (params.feature_max(f) <= params.feature_min(f))
            params.warnings.push_back("feature " +
                                      dataset.feature_names[static_cast<std::size_t>(f)] +
                                      " is constant on the fitting split; mapped to 0.0");
    }
    return params;
}

inline double scale_value(const ScalingParams& p, Eigen::Index feature, double x) {
    const double lo = p.feature_min(feature), hi = p.feature_max(feature);
    return hi > lo ? (x - lo) / (hi - lo) : 0.0;
}

inline double unscale_value(const ScalingParams& p, Eigen::Index feature, double y) {
    const double lo = p.feature_min(feature), hi = p.feature_max(feature);
    return hi > lo ? y * (hi - lo) + lo : lo;
}

inline TimeSeriesDataset apply_minmax(TimeSeriesDataset dataset, const ScalingParams& params) {
    if (!params.fitted()) throw ContractError("apply_minmax called before fit");
    for (auto& unit : dataset.units)
        for (Eigen::Index f = 0; f < unit.values.cols(); ++f)
            for (Eigen::Index t = 0; t < unit.values.rows(); ++t)
                unit.values(t, f) = scale_value(params, f, unit.values(t, f));
    return dataset;
}

inline TimeSeriesDataset invert_minmax(TimeSeriesDataset dataset, const ScalingParams& params) {
    if (!params.fitted()) throw ContractError("invert_minmax called before fit");
    for (auto& unit : dataset.units)
        for (Eigen::Index f = 0; f < unit.values.cols(); ++f)
            for (Eigen::Index t = 0; t < unit.values.rows(); ++t)
                unit.values(t, f) = unscale_value(params, f, unit.values(t, f));
    return dataset;
}

inline ScaleResult scale_minmax(const TimeSeriesDataset& dataset,
                                const std::vector<std::string>& fit_unit_ids = {}) {
    ScalingParams params = fit_minmax(dataset, fit_unit_ids);
    return {apply_minmax(dataset, params), std::move(params)};
}

// Slide a length-M window with stride 1 over every unit, materializing the
// target vector at each requested horizon. Units too short for even one
// window are skipped and reported.
inline WindowedDataset make_windows(const TimeSeriesDataset& dataset, int window_length,
                                    const std::vector<int>& horizons) {
    if (window_length < 1) throw ContractError("window length must be >= 1");
    if (horizons.empty()) throw ContractError("at least one horizon required");
    for (int h : horizons)
        if (h < 1) throw ContractError("horizons must be >= 1");
    const int max_h = *std::max_element(horizons.begin(), horizons.end());

    WindowedDataset out;
    out.window_length = window_length;
    out.horizons = horizons;
    std::sort(out.horizons.begin(), out.horizons.end());
    out.horizons.erase(std::unique(out.horizons.begin(), out.horizons.end()), out.horizons.end());

    for (const auto& unit : dataset.units) {
        const Eigen::Index len = unit.values.rows();
        const Eigen::Index last_start = len - window_length - max_h;  // inclusive
        if (last_start < 0) {
            out.skipped_units.push_back(unit.id);
            continue;
        }
        for (Eigen::Index t = 0; t <= last_start; ++t) {
            WindowedDataset::Sample s;
            s.unit_id = unit.id;
            s.window = unit.values.middleRows(t, window_length);
            for (int h : out.horizons)
                s.targets[h] = unit.values.row(t + window_length + h - 1).transpose();
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

// Seeded uniform subsample of at most `cap` windows (0 means no cap),
// preserving the original sample order.
inline WindowedDataset subsample_windows(WindowedDataset w, std::size_t cap,
                                         std::uint64_t seed) {
    if (cap == 0 || w.samples.size() <= cap) return w;
    std::vector<std::size_t> idx(w.samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<WindowedDataset::Sample> kept;
    kept.reserve(cap);
    for (std::size_t i : idx) kept.push_back(std::move(w.samples[i]));
    w.samples = std::move(kept);
    return w;
}

// Ratios are given in (train, test, val) order and must sum to one.
struct SplitRatios {
    double train = 0.6;
    double test = 0.2;
    double val = 0.2;

    void validate() const {
        if (train < 0 || test < 0 || val < 0)
            throw ConfigError("split ratios must be non-negative");
        if (std::abs(train + test + val - 1.0) > 1e-9)
            throw ConfigError("split ratios must sum to 1");
    }
};

struct UnitSplit {
    TimeSeriesDataset train;
    TimeSeriesDataset test;
    TimeSeriesDataset val;
};

namespace detail {
// Largest-remainder apportionment of n into three integer counts.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& r) {
    const double exact[3] = {r.train * n, r.test * n, r.val * n};
    std::array<std::size_t, 3> base{};
    double rem[3];
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
        base[i] = static_cast<std::size_t>(std::floor(exact[i] + 1e-12));
        rem[i] = exact[i] - static_cast<double>(base[i]);
        used += base[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return rem[a] != rem[b] ? rem[a] > rem[b] : a < b;
    });
    for (std::size_t i = 0; used + i < n; ++i) base[order[i % 3]] += 1;
    return base;
}

inline TimeSeriesDataset subset(const TimeSeriesDataset& src, const std::vector<std::size_t>& idx) {
    TimeSeriesDataset out;
    out.feature_names = src.feature_names;
    out.interval_description = src.interval_description;
    out.synth_spec = src.synth_spec;
    for (std::size_t i : idx) out.units.push_back(src.units[i]);
    return out;
}
}  // namespace detail

// Random unit-level split: every unit lands in exactly one subset, sizes are
// the rounded ratio counts, and the assignment is a pure function of the seed.
inline UnitSplit split_units(const TimeSeriesDataset& dataset, const SplitRatios& ratios,
                             std::uint64_t seed) {
    ratios.validate();
    const std::size_t n = dataset.units.size();
    if (n < 3) throw DataError("unit-level split needs at least 3 units");
    const auto counts = detail::apportion(n, ratios);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(hash_combine(seed, 0x5eedULL));
    rng.shuffle(order);

    const std::vector<std::size_t> train_idx(order.begin(), order.begin() + counts[0]);
    const std::vector<std::size_t> test_idx(order.begin() + counts[0],
                                            order.begin() + counts[0] + counts[1]);
    const std::vector<std::size_t> val_idx(order.begin() + counts[0] + counts[1], order.end());
    return {detail::subset(dataset, train_idx), detail::subset(dataset, test_idx),
            detail::subset(dataset, val_idx)};
}

// Chronological split: each unit's time axis is cut so that train rows
// strictly precede val rows, which strictly precede test rows.
inline UnitSplit split_chronological(const TimeSeriesDataset& dataset, const SplitRatios& ratios) {
    ratios.validate();
    UnitSplit out;
    for (auto* d : {&out.train, &out.test, &out.val}) {
        d->feature_names = dataset.feature_names;
        d->interval_description = dataset.interval_description;
        d->synth_spec = dataset.synth_spec;
    }
    for (const auto& unit : dataset.units) {
        const Eigen::Index n = unit.values.rows();
        const auto c1 = static_cast<Eigen::Index>(std::floor(ratios.train * n));
        const auto c2 = static_cast<Eigen::Index>(std::floor((ratios.train + ratios.val) * n));
        if (c1 > 0) out.train.units.push_back({unit.id, unit.values.topRows(c1)});
        if (c2 > c1) out.val.units.push_back({unit.id, unit.values.middleRows(c1, c2 - c1)});
        if (n > c2) out.test.units.push_back({unit.id, unit.values.bottomRows(n - c2)});
    }
    return out;
}

}  // namespace genf::data
