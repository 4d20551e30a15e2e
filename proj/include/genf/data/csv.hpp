#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "genf/data/types.hpp"

namespace genf::data {

// Column mapping for CSV ingestion. Loaders for specific public datasets are
// just preset instances of this schema, not separate code paths.
struct CsvSchema {
    std::string unit_column;
    std::vector<std::string> time_columns;  // sorted lexicographically as numbers
    std::vector<std::string> feature_columns;
    std::vector<std::string> missing_tokens = {"", "NA", "NaN", "nan", "NULL"};

    void validate() const {
        if (unit_column.empty()) throw ConfigError("csv schema: unit column is required");
        if (time_columns.empty()) throw ConfigError("csv schema: time column is required");
        if (feature_columns.empty())
            throw ConfigError("csv schema: at least one feature column is required");
    }
};

namespace detail {

// Minimal RFC-style field splitter: handles quoted fields and embedded
// separators; no multi-line fields (none of the supported datasets use them).
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
    if (b == e) return false;
    const auto res = std::from_chars(b, e, out);
    return res.ec == std::errc{} && res.ptr == e;
}

}  // namespace detail

// Load a UTF-8 CSV with a header row into a dataset. Rows are grouped by the
// unit column and ordered by the (numeric) time columns; unparseable feature
// cells become NaN for the downstream imputation pass. Units are emitted in
// lexicographic id order so the result is canonical.
inline TimeSeriesDataset load_csv_dataset(const std::string& path, const CsvSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
    const auto header = detail::split_csv_line(line);

    auto column_index = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw ConfigError("csv schema names column '" + name + "' which is not in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t unit_idx = column_index(schema.unit_column);
    std::vector<std::size_t> time_idx, feat_idx;
    for (const auto& c : schema.time_columns) time_idx.push_back(column_index(c));
    for (const auto& c : schema.feature_columns) feat_idx.push_back(column_index(c));

    auto is_missing = [&](const std::string& s) {
        return std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), s) !=
               schema.missing_tokens.end();
    };

    struct Row {
        std::vector<double> time_key;
        std::vector<double> features;
    };
    std::map<std::string, std::vector<Row>> by_unit;  // ordered -> canonical unit order

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        Row row;
        for (std::size_t ti : time_idx) {
            double v = 0.0;
            if (!detail::parse_double(fields[ti], v))
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": non-numeric time value '" + fields[ti] + "'");
            row.time_key.push_back(v);
        }
        for (std::size_t fi : feat_idx) {
            double v = std::numeric_limits<double>::quiet_NaN();
            if (!is_missing(fields[fi]) && !detail::parse_double(fields[fi], v))
                v = std::numeric_limits<double>::quiet_NaN();
            row.features.push_back(v);
        }
        by_unit[fields[unit_idx]].push_back(std::move(row));
    }
    if (by_unit.empty()) throw DataError("CSV file has no data rows: " + path);

    TimeSeriesDataset out;
    out.feature_names = schema.feature_columns;
    for (auto& [id, rows] : by_unit) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.time_key < b.time_key; });
        Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()),
                               static_cast<Eigen::Index>(feat_idx.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t f = 0; f < feat_idx.size(); ++f)
                values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
                    rows[r].features[f];
        out.units.push_back({id, std::move(values)});
    }
    return out;
}

// Parse a schema preset file: `key = value` lines, '#' comments, commas for
// lists. Recognized keys: unit_column, time_column, feature_columns,
// missing_tokens (optional).
inline CsvSchema load_csv_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema preset: " + path);
    CsvSchema schema;
    bool missing_overridden = false;
    std::string line;
    std::size_t line_no = 0;
    auto split_list = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            if (b == std::string::npos) {
                out.push_back("");
                continue;
            }
            const auto e = item.find_last_not_of(" \t");
            out.push_back(item.substr(b, e - b + 1));
        }
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "unit_column") {
            schema.unit_column = value;
        } else if (key == "time_column" || key == "time_columns") {
            schema.time_columns = split_list(value);
        } else if (key == "feature_columns") {
            schema.feature_columns = split_list(value);
        } else if (key == "missing_tokens") {
            schema.missing_tokens = split_list(value);
            missing_overridden = true;
        } else {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown schema key '" +
                              key + "'");
        }
    }
    if (missing_overridden) schema.missing_tokens.push_back("");  // empty cell is always missing
    schema.validate();
    return schema;
}

}  // namespace genf::data
