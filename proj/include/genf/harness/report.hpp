#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "genf/harness/pipeline.hpp"
#include "genf/version.hpp"

namespace genf::harness {

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

// Write-then-rename so a failure mid-write never leaves a truncated file at
// the destination.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " +
                          ec.message());
}

inline std::string stamp_lines(const ExperimentReport& rep) {
    return "# config_hash=" + rep.config_hash + "\n" +
           "# schema_version=" + std::to_string(kReportSchemaVersion) + "\n" +
           "# library_version=" + std::string(kLibraryVersion) + "\n";
}

// One row per (strategy, horizon, synth-steps, seed) cell, successes and
// failures alike.
inline std::string replicates_csv(const ExperimentReport& rep) {
    std::string out = stamp_lines(rep);
    out += "strategy,horizon,synth_steps,seed,status,mse,mae,smape,eval_count,space,error\n";
    for (const auto& c : rep.comparison.cells) {
        out += c.strategy + "," + std::to_string(c.horizon) + "," +
               std::to_string(c.synth_steps) + "," + std::to_string(c.seed) + ",";
        if (c.failed) {
            out += "failed,,,,0," + c.space + "," + csv_escape(c.error);
        } else {
            out += "ok," + fmt_double(c.mse) + "," + fmt_double(c.mae) + "," +
                   fmt_double(c.smape) + "," + std::to_string(c.eval_count) + "," + c.space +
                   ",";
        }
        out += "\n";
    }
    return out;
}

// Long-format aggregate: one row per (cell, metric), ready for plotting
// tools that expect tidy columns. The std column is filled only when at
// least two replicates succeeded.
inline std::string summary_csv(const ExperimentReport& rep) {
    std::string out = stamp_lines(rep);
    out += "strategy,horizon,synth_steps,metric,mean,std,replicates,failures\n";
    for (const auto& s : rep.comparison.summaries) {
        const std::pair<const char*, std::pair<double, double>> metrics[] = {
            {"mse", {s.mse_mean, s.mse_std}},
            {"mae", {s.mae_mean, s.mae_std}},
            {"smape", {s.smape_mean, s.smape_std}},
        };
        for (const auto& [name, ms] : metrics) {
            out += s.strategy + "," + std::to_string(s.horizon) + "," +
                   std::to_string(s.synth_steps) + "," + name + ",";
            if (s.replicates >= 1) out += fmt_double(ms.first);
            out += ",";
            if (s.replicates >= 2) out += fmt_double(ms.second);
            out += "," + std::to_string(s.replicates) + "," + std::to_string(s.failures) +
                   "\n";
        }
    }
    return out;
}

inline std::string report_json(const ExperimentReport& rep) {
    using Json = nlohmann::ordered_json;
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["library_version"] = kLibraryVersion;
    j["config_hash"] = rep.config_hash;
    j["created_at"] = rep.created_at;
    j["dataset"] = rep.dataset_summary;
    j["seeds"] = rep.seeds;
    Json warnings = Json::array();
    for (const auto& w : rep.config_warnings) warnings.push_back(w);
    for (const auto& w : rep.comparison.warnings) warnings.push_back(w);
    j["warnings"] = std::move(warnings);

    Json cells = Json::array();
    for (const auto& c : rep.comparison.cells) {
        Json jc;
        jc["strategy"] = c.strategy;
        jc["horizon"] = c.horizon;
        jc["synth_steps"] = c.synth_steps;
        jc["seed"] = c.seed;
        jc["status"] = c.failed ? "failed" : "ok";
        if (c.failed) {
            jc["mse"] = nullptr;
            jc["mae"] = nullptr;
            jc["smape"] = nullptr;
            jc["error"] = c.error;
        } else {
            jc["mse"] = c.mse;
            jc["mae"] = c.mae;
            jc["smape"] = c.smape;
        }
        jc["eval_count"] = c.eval_count;
        jc["space"] = c.space;
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);

    Json summaries = Json::array();
    for (const auto& s : rep.comparison.summaries) {
        Json js;
        js["strategy"] = s.strategy;
        js["horizon"] = s.horizon;
        js["synth_steps"] = s.synth_steps;
        js["replicates"] = s.replicates;
        js["failures"] = s.failures;
        auto metric = [&](double mean, double std_dev) {
            Json m;
            m["mean"] = s.replicates >= 1 ? Json(mean) : Json(nullptr);
            m["std"] = s.replicates >= 2 ? Json(std_dev) : Json(nullptr);
            return m;
        };
        js["mse"] = metric(s.mse_mean, s.mse_std);
        js["mae"] = metric(s.mae_mean, s.mae_std);
        js["smape"] = metric(s.smape_mean, s.smape_std);
        summaries.push_back(std::move(js));
    }
    j["summaries"] = std::move(summaries);
    return j.dump(2) + "\n";
}

}  // namespace detail

// Write the report into `dir` (created if needed): replicate-level CSV and
// long-format aggregate CSV for the "csv" format, provenance-stamped JSON
// for the "json" format. Returns the written paths in a deterministic
// order. The CSVs contain no wall-clock data, so rerunning the same config
// reproduces them byte for byte.
inline std::vector<std::string> emit_report(const ExperimentReport& rep,
                                            const std::string& dir,
                                            const std::vector<std::string>& formats = {
                                                "csv", "json"}) {
    namespace fs = std::filesystem;
    for (const auto& f : formats)
        if (f != "csv" && f != "json")
            throw ConfigError("emit_report: unknown format '" + f +
                              "' (expected csv or json)");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());

    std::vector<std::string> written;
    auto has = [&](const char* f) {
        return std::find(formats.begin(), formats.end(), f) != formats.end();
    };
    if (has("csv")) {
        const fs::path replicates = fs::path(dir) / "replicates.csv";
        detail::write_file_atomic(replicates, detail::replicates_csv(rep));
        written.push_back(replicates.string());
        const fs::path summary = fs::path(dir) / "summary_long.csv";
        detail::write_file_atomic(summary, detail::summary_csv(rep));
        written.push_back(summary.string());
    }
    if (has("json")) {
        const fs::path json = fs::path(dir) / "report.json";
        detail::write_file_atomic(json, detail::report_json(rep));
        written.push_back(json.string());
    }
    return written;
}

}  // namespace genf::harness
