#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "genf/errors.hpp"

namespace genf::data {

struct ArProcessSpec;  // defined in synth.hpp

// One series: rows are consecutive time steps, columns are features.
// Missing values (pre-imputation) are encoded as NaN.
struct Unit {
    std::string id;
    Eigen::MatrixXd values;  // time_length x K
};

// A collection of units sharing one feature schema.
struct TimeSeriesDataset {
    std::vector<Unit> units;
    std::vector<std::string> feature_names;
    std::string interval_description;
    // Set when the data came from the synthetic generator; lets downstream
    // analyses compute exact conditional means.
    std::shared_ptr<const ArProcessSpec> synth_spec;

    std::size_t feature_count() const { return feature_names.size(); }

    const Unit& unit_by_id(const std::string& id) const {
        for (const auto& u : units)
            if (u.id == id) return u;
        throw ContractError("unknown unit id: " + id);
    }

    // Basic structural invariants; throws on violation.
    void validate() const {
        const auto k = static_cast<Eigen::Index>(feature_names.size());
        std::vector<std::string> ids;
        for (const auto& u : units) {
            if (u.values.cols() != k)
                throw DataError("unit " + u.id + " has " + std::to_string(u.values.cols()) +
                                " features, dataset declares " + std::to_string(k));
            if (u.values.rows() < 1) throw DataError("unit " + u.id + " is empty");
            ids.push_back(u.id);
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw DataError("duplicate unit identifiers");
    }
};

// Per-feature min/max captured on the fitting split, plus warnings for
// degenerate (constant) features.
struct ScalingParams {
    Eigen::VectorXd feature_min;
    Eigen::VectorXd feature_max;
    std::vector<std::string> warnings;

    bool fitted() const { return feature_min.size() > 0; }
};

// Sliding-window view of a dataset: fixed-length input windows plus the
// observed values at each requested horizon after the window.
struct WindowedDataset {
    struct Sample {
        std::string unit_id;
        Eigen::MatrixXd window;                  // M x K
        std::map<int, Eigen::VectorXd> targets;  // horizon -> K-vector
    };

    std::vector<Sample> samples;
    int window_length = 0;
    std::vector<int> horizons;
    std::vector<std::string> skipped_units;  // too short for M + max horizon

    std::size_t size() const { return samples.size(); }
};

}  // namespace genf::data
