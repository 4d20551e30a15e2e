#pragma once

#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"

#include "genf/data/synth.hpp"
#include "genf/data/types.hpp"

namespace genf::data {

inline constexpr int kDatasetSchemaVersion = 1;

// Where a dataset came from: recorded verbatim in the file so downstream
// reports can state their inputs.
struct DatasetProvenance {
    std::string source;      // file path or synthesizer description
    std::uint64_t seed = 0;  // 0 = not applicable
    std::string split_name;  // "", "train", "test", "val"
};

// A dataset plus the scaling that was (optionally) applied to it.
struct DatasetFile {
    TimeSeriesDataset dataset;
    std::optional<ScalingParams> scaling;
    DatasetProvenance provenance;
};

namespace detail {
using Json = nlohmann::ordered_json;

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw DataError("dataset file: ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}
}  // namespace detail

inline void save_dataset(const std::string& path, const DatasetFile& file) {
    using detail::Json;
    Json j;
    j["format"] = "genf.dataset";
    j["schema_version"] = kDatasetSchemaVersion;
    j["interval"] = file.dataset.interval_description;
    j["feature_names"] = file.dataset.feature_names;
    j["provenance"] = {{"source", file.provenance.source},
                       {"seed", file.provenance.seed},
                       {"split", file.provenance.split_name}};
    if (file.scaling && file.scaling->fitted()) {
        Json s;
        s["min"] = std::vector<double>(file.scaling->feature_min.data(),
                                       file.scaling->feature_min.data() +
                                           file.scaling->feature_min.size());
        s["max"] = std::vector<double>(file.scaling->feature_max.data(),
                                       file.scaling->feature_max.data() +
                                           file.scaling->feature_max.size());
        s["warnings"] = file.scaling->warnings;
        j["scaling"] = std::move(s);
    }
    if (file.dataset.synth_spec) {
        const auto& spec = *file.dataset.synth_spec;
        Json sj;
        sj["k"] = spec.k;
        sj["noise_sigma"] = spec.noise_sigma;
        Json coeffs = Json::array();
        for (const auto& a : spec.coeffs) coeffs.push_back(detail::matrix_to_json(a));
        sj["coeffs"] = std::move(coeffs);
        j["synth_process"] = std::move(sj);
    }
    Json units = Json::array();
    for (const auto& u : file.dataset.units)
        units.push_back({{"id", u.id}, {"values", detail::matrix_to_json(u.values)}});
    j["units"] = std::move(units);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    out << j.dump(1) << '\n';
    if (!out) throw IoError("failed writing dataset file: " + path);
}

inline DatasetFile load_dataset(const std::string& path) {
    using detail::Json;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("dataset file " + path + " is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != "genf.dataset")
        throw DataError("dataset file " + path + " has unexpected format tag");
    if (j.value("schema_version", -1) != kDatasetSchemaVersion)
        throw DataError("dataset file " + path + " has unsupported schema version");

    DatasetFile file;
    file.dataset.interval_description = j.value("interval", "");
    file.dataset.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        file.provenance.source = p.value("source", "");
        file.provenance.seed = p.value("seed", std::uint64_t{0});
        file.provenance.split_name = p.value("split", "");
    }
    if (j.contains("scaling")) {
        ScalingParams s;
        const auto mins = j["scaling"].at("min").get<std::vector<double>>();
        const auto maxs = j["scaling"].at("max").get<std::vector<double>>();
        s.feature_min = Eigen::Map<const Eigen::VectorXd>(mins.data(),
                                                          static_cast<Eigen::Index>(mins.size()));
        s.feature_max = Eigen::Map<const Eigen::VectorXd>(maxs.data(),
                                                          static_cast<Eigen::Index>(maxs.size()));
        s.warnings = j["scaling"].value("warnings", std::vector<std::string>{});
        file.scaling = std::move(s);
    }
    if (j.contains("synth_process")) {
        ArProcessSpec spec;
        spec.k = j["synth_process"].at("k").get<int>();
        spec.noise_sigma = j["synth_process"].at("noise_sigma").get<double>();
        for (const auto& a : j["synth_process"].at("coeffs"))
            spec.coeffs.push_back(detail::matrix_from_json(a));
        file.dataset.synth_spec = std::make_shared<ArProcessSpec>(std::move(spec));
    }
    for (const auto& uj : j.at("units")) {
        Unit u;
        u.id = uj.at("id").get<std::string>();
        u.values = detail::matrix_from_json(uj.at("values"));
        file.dataset.units.push_back(std::move(u));
    }
    file.dataset.validate();
    return file;
}

}  // namespace genf::data
