#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "genf/errors.hpp"

namespace genf::metrics {

namespace detail {
inline void check_pair(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size())
        throw ContractError("metric input length mismatch: " + std::to_string(pred.size()) +
                            " predictions vs " + std::to_string(truth.size()) + " truths");
    if (pred.empty()) throw ContractError("metric input is empty");
}
}  // namespace detail

// Mean squared error.
inline double mse(std::span<const double> pred, std::span<const double> truth) {
    detail::check_pair(pred, truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

// Mean absolute error.
inline double mae(std::span<const double> pred, std::span<const double> truth) {
    detail::check_pair(pred, truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

// Symmetric mean absolute percentage error, two-sided definition on the
// 0..200% range:  (100/n) * sum 2|p-t| / (|p|+|t|).  A term with
// p == t == 0 contributes zero rather than 0/0.
inline double smape(std::span<const double> pred, std::span<const double> truth) {
    detail::check_pair(pred, truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double denom = std::abs(pred[i]) + std::abs(truth[i]);
        if (denom > 0.0) acc += 2.0 * std::abs(pred[i] - truth[i]) / denom;
    }
    return 100.0 * acc / static_cast<double>(pred.size());
}

// One evaluated metric, tagged with sample count and the value space the
// inputs lived in ("original" after inverse scaling, "scaled" otherwise).
struct MetricRecord {
    std::string name;
    double value = 0.0;
    std::size_t count = 0;
    std::string space;  // "original" | "scaled"
};

}  // namespace genf::metrics
