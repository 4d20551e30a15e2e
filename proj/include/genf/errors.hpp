#pragma once

#include <stdexcept>
#include <string>

namespace genf {

// Error taxonomy shared by all modules. The CLI maps these onto process
// exit codes (config=1, data=2, training=3/4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration: invalid ratios, unknown keys, out-of-range hyperparameters.
struct ConfigError : Error {
    using Error::Error;
};

// Bad input data: missing columns, empty files, leading missing values.
struct DataError : Error {
    using Error::Error;
};

// API misuse: shape mismatches, horizon mismatches, empty batches.
struct ContractError : Error {
    using Error::Error;
};

// Optimization failure (NaN loss, divergence). Carries a short trace summary.
struct TrainingError : Error {
    explicit TrainingError(const std::string& msg, std::string trace = {})
        : Error(msg), trace_summary(std::move(trace)) {}
    std::string trace_summary;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace genf
