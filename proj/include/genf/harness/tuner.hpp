#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "genf/harness/config.hpp"
#include "genf/harness/pipeline.hpp"

namespace genf::harness {

// One point of the tuning grid: the override assignments it was built from,
// and how it scored on the validation units (mean MAE over every successful
// cell of its sweep).
struct TuneCandidate {
    std::vector<std::pair<std::string, std::string>> overrides;
    double score = std::numeric_limits<double>::quiet_NaN();
    bool failed = false;
    std::string error;
};

struct TuneResult {
    std::size_t best_index = 0;
    ExperimentConfig best;  // base config + winning overrides, original splits
    std::vector<TuneCandidate> candidates;
};

namespace detail {

// Re-emit the base config with some keys replaced or added.
inline std::string apply_overrides(
    const std::string& base_text, const std::string& origin,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::istringstream in(base_text);
    const auto entries = read_kv(in, origin);
    std::string out;
    for (const auto& e : entries) {
        bool replaced = false;
        for (const auto& [k, v] : overrides)
            if (k == e.key) {
                replaced = true;
                break;
            }
        if (!replaced) out += e.key + " = " + e.value + "\n";
    }
    for (const auto& [k, v] : overrides) out += k + " = " + v + "\n";
    return out;
}

}  // namespace detail

// Exhaustive grid search over `run_pipeline`. Each range entry pairs a config
// key with the values to try; the cross product is enumerated with the first
// key varying slowest. Every candidate is scored by rerunning the sweep with
// the validation share of the unit split standing in for the test share
// (train and validation shares are renormalized so the test units play no
// part in tuning), and the candidate with the smallest mean MAE wins. Ties
// keep the earliest candidate.
inline TuneResult tune_grid(
    const std::string& base_text, const std::string& origin,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& ranges) {
    if (ranges.empty()) throw ConfigError("tuner: no ranges declared");
    for (const auto& [key, values] : ranges)
        if (values.empty())
            throw ConfigError("tuner: range for '" + key + "' is empty");

    {
        const ExperimentConfig base = parse_config(base_text, origin);
        if (!(base.comparison.ratios.val > 0.0))
            throw ConfigError("tuner: the unit split needs a positive validation share");
    }

    // Cross product, first key slowest.
    std::vector<std::vector<std::pair<std::string, std::string>>> combos = {{}};
    for (const auto& [key, values] : ranges) {
        std::vector<std::vector<std::pair<std::string, std::string>>> next;
        for (const auto& combo : combos)
            for (const auto& v : values) {
                auto extended = combo;
                extended.emplace_back(key, v);
                next.push_back(std::move(extended));
            }
        combos = std::move(next);
    }

    TuneResult result;
    double best_score = std::numeric_limits<double>::infinity();
    bool any_ok = false;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        TuneCandidate cand;
        cand.overrides = combos[i];
        try {
            const std::string text = detail::apply_overrides(base_text, origin, combos[i]);
            ExperimentConfig cfg = parse_config(text, origin);
            auto& r = cfg.comparison.ratios;
            const double kept = r.train + r.val;
            r = {r.train / kept, r.val / kept, 0.0};
            cfg.validate();
            const ExperimentReport report = run_pipeline(cfg);

            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& cell : report.comparison.cells) {
                if (cell.failed || !std::isfinite(cell.mae)) continue;
                sum += cell.mae;
                ++n;
            }
            if (n == 0) throw TrainingError("tuner: every cell of the candidate failed");
            cand.score = sum / static_cast<double>(n);
            if (cand.score < best_score) {
                best_score = cand.score;
                result.best_index = i;
            }
            any_ok = true;
        } catch (const std::exception& e) {
            cand.failed = true;
            cand.error = e.what();
        }
        result.candidates.push_back(std::move(cand));
    }
    if (!any_ok) throw TrainingError("tuner: every candidate failed");

    result.best = parse_config(
        detail::apply_overrides(base_text, origin, combos[result.best_index]), origin);
    return result;
}

}  // namespace genf::harness
