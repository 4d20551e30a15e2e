#pragma once

#include <ctime>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "genf/data/csv.hpp"
#include "genf/data/preprocess.hpp"
#include "genf/data/synth.hpp"
#include "genf/harness/config.hpp"
#include "genf/strategies/comparison.hpp"

namespace genf::harness {

// Everything one experiment produced: the full replicate-level sweep plus
// the provenance needed to trace any number in the output back to its
// config. `created_at` is wall-clock and appears only in the JSON output;
// the CSV outputs stay byte-identical across reruns.
struct ExperimentReport {
    strategies::ComparisonReport comparison;
    std::string config_hash;
    std::string canonical_config;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> config_warnings;  // normalization notes
    std::string dataset_summary;
    std::string created_at;
};

namespace detail {

inline std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

// Materialize the experiment's input data: either the configured CSV file
// (with forward-fill imputation of missing cells) or the built-in
// autoregressive synthesizer.
inline data::TimeSeriesDataset load_experiment_dataset(const ExperimentConfig& cfg) {
    if (cfg.source == DataSource::kSynthetic) {
        data::ArProcessSpec spec;
        spec.k = cfg.synth.features;
        const auto k = static_cast<Eigen::Index>(cfg.synth.features);
        Eigen::MatrixXd a1 = Eigen::MatrixXd::Constant(k, k, cfg.synth.coupling);
        a1.diagonal().setConstant(cfg.synth.diag);
        spec.coeffs = {a1};
        if (cfg.synth.order == 2)
            spec.coeffs.push_back(Eigen::MatrixXd::Identity(k, k) * cfg.synth.diag2);
        spec.noise_sigma = cfg.synth.sigma;
        return data::synth_ar_process(spec, cfg.synth.units, cfg.synth.length,
                                      cfg.synth.seed);
    }
    const data::CsvSchema schema = cfg.schema_path.empty()
                                       ? detail::infer_csv_schema(cfg.data_path)
                                       : data::load_csv_schema(cfg.schema_path);
    return data::impute_last_observation(data::load_csv_dataset(cfg.data_path, schema));
}

inline std::string describe_dataset(const ExperimentConfig& cfg,
                                    const data::TimeSeriesDataset& dataset) {
    std::string out = cfg.source == DataSource::kCsv
                          ? "csv:" + cfg.data_path
                          : "synthetic:ar" + std::to_string(cfg.synth.order);
    out += " (" + std::to_string(dataset.units.size()) + " units, " +
           std::to_string(dataset.feature_count()) + " features)";
    return out;
}

// Run the whole experiment: load data, sweep every (strategy, horizon,
// synth-steps, seed) cell, and attach provenance. Cell-level failures are
// recorded inside the comparison report; only data loading or config
// problems throw.
inline ExperimentReport run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    const data::TimeSeriesDataset dataset = load_experiment_dataset(cfg);

    ExperimentReport report;
    report.comparison = strategies::run_comparison(dataset, cfg.comparison);
    report.config_hash = cfg.config_hash;
    report.canonical_config = cfg.canonical;
    report.seeds = cfg.comparison.seeds;
    report.config_warnings = cfg.warnings;
    report.dataset_summary = describe_dataset(cfg, dataset);
    report.created_at = detail::utc_now();
    return report;
}

}  // namespace genf::harness
