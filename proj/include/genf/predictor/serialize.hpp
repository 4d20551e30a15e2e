#pragma once

#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"

#include "genf/data/types.hpp"
#include "genf/errors.hpp"
#include "genf/nn/serialize.hpp"
#include "genf/predictor/lstm_baseline.hpp"
#include "genf/predictor/predictor.hpp"

namespace genf::predictor {

inline constexpr int kBundleSchemaVersion = 1;

namespace detail {
using Json = nlohmann::ordered_json;

inline Json scaling_to_json(const data::ScalingParams& s) {
    Json j;
    j["min"] = std::vector<double>(s.feature_min.data(),
                                   s.feature_min.data() + s.feature_min.size());
    j["max"] = std::vector<double>(s.feature_max.data(),
                                   s.feature_max.data() + s.feature_max.size());
    j["warnings"] = s.warnings;
    return j;
}

inline data::ScalingParams scaling_from_json(const Json& j) {
    data::ScalingParams s;
    const auto mins = j.at("min").get<std::vector<double>>();
    const auto maxs = j.at("max").get<std::vector<double>>();
    s.feature_min = Eigen::Map<const Eigen::VectorXd>(
        mins.data(), static_cast<Eigen::Index>(mins.size()));
    s.feature_max = Eigen::Map<const Eigen::VectorXd>(
        maxs.data(), static_cast<Eigen::Index>(maxs.size()));
    s.warnings = j.value("warnings", std::vector<std::string>{});
    return s;
}

inline Json hyper_to_json(const PredictorHyper& h) {
    Json j;
    j["learning_rate"] = h.learning_rate;
    j["batch_size"] = h.batch_size;
    j["epochs"] = h.epochs;
    j["seed"] = h.seed;
    return j;
}

inline PredictorHyper hyper_from_json(const Json& j) {
    PredictorHyper h;
    h.learning_rate = j.at("learning_rate").get<double>();
    h.batch_size = j.at("batch_size").get<int>();
    h.epochs = j.at("epochs").get<int>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

}  // namespace detail

// Self-describing trained-predictor file: architecture, training metadata,
// loss trace, optional scaling provenance, and all parameter tensors.
inline void save_bundle(const std::string& path, const PredictorBundle& bundle,
                        const std::optional<data::ScalingParams>& scaling = {}) {
    detail::Json j;
    j["format"] = "genf.predictor";
    j["schema_version"] = kBundleSchemaVersion;
    j["features"] = bundle.params.features;
    j["window"] = bundle.params.window;
    j["out_features"] = bundle.params.out_features;
    j["target_feature"] = bundle.params.target_feature;
    j["horizon"] = bundle.params.horizon;
    detail::Json c;
    c["num_heads"] = bundle.params.config.num_heads;
    c["model_dim"] = bundle.params.config.model_dim;
    c["head_dim"] = bundle.params.config.head_dim;
    c["ffn_dim"] = bundle.params.config.ffn_dim;
    c["encoder_layers"] = bundle.params.config.encoder_layers;
    c["decoder_layers"] = bundle.params.config.decoder_layers;
    c["mask"] = bundle.params.config.mask == MaskMode::kCausal ? "causal" : "none";
    c["dropout"] = bundle.params.config.dropout;
    j["config"] = std::move(c);
    j["hyper"] = detail::hyper_to_json(bundle.hyper);
    j["loss_trace"] = bundle.loss_trace;
    if (scaling && scaling->fitted()) j["scaling"] = detail::scaling_to_json(*scaling);
    j["params"] = nn::params_to_json(bundle.params.store);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(1) << "\n";
    if (!out) throw IoError("failed while writing '" + path + "'");
}

inline PredictorBundle load_bundle(const std::string& path,
                                   std::optional<data::ScalingParams>* scaling_out =
                                       nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    detail::Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.value("format", "") != "genf.predictor")
            throw DataError("'" + path + "' is not a predictor bundle");
        if (j.value("schema_version", 0) != kBundleSchemaVersion)
            throw DataError("'" + path + "' has an unsupported schema version");
        AttentionConfig config;
        const auto& c = j.at("config");
        config.num_heads = c.at("num_heads").get<Eigen::Index>();
        config.model_dim = c.at("model_dim").get<Eigen::Index>();
        config.head_dim = c.at("head_dim").get<Eigen::Index>();
        config.ffn_dim = c.at("ffn_dim").get<Eigen::Index>();
        config.encoder_layers = c.at("encoder_layers").get<int>();
        config.decoder_layers = c.at("decoder_layers").get<int>();
        config.mask = c.at("mask").get<std::string>() == "causal" ? MaskMode::kCausal
                                                                  : MaskMode::kNone;
        config.dropout = c.at("dropout").get<double>();

        PredictorBundle bundle{
            PredictorParams::init(j.at("features").get<Eigen::Index>(),
                                  j.at("window").get<Eigen::Index>(), config,
                                  j.at("out_features").get<Eigen::Index>(), 0),
            detail::hyper_from_json(j.at("hyper")),
            j.value("loss_trace", std::vector<double>{})};
        bundle.params.target_feature = j.at("target_feature").get<int>();
        bundle.params.horizon = j.at("horizon").get<int>();
        nn::params_from_json(bundle.params.store, j.at("params"));
        if (scaling_out)
            *scaling_out = j.contains("scaling")
                               ? std::optional<data::ScalingParams>(
                                     detail::scaling_from_json(j.at("scaling")))
                               : std::nullopt;
        return bundle;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError("'" + path + "' is malformed: " + e.what());
    }
}

// Recurrent-baseline variant of the bundle file.
inline void save_bundle(const std::string& path, const LstmBaselineBundle& bundle) {
    detail::Json j;
    j["format"] = "genf.lstm";
    j["schema_version"] = kBundleSchemaVersion;
    j["features"] = bundle.params.features;
    j["window"] = bundle.params.window;
    j["out_features"] = bundle.params.out_features;
    j["target_feature"] = bundle.params.target_feature;
    j["horizon"] = bundle.params.horizon;
    j["hyper"] = detail::hyper_to_json(bundle.hyper);
    j["loss_trace"] = bundle.loss_trace;
    j["params"] = nn::params_to_json(bundle.params.store);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(1) << "\n";
    if (!out) throw IoError("failed while writing '" + path + "'");
}

inline LstmBaselineBundle load_lstm_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    detail::Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.value("format", "") != "genf.lstm")
            throw DataError("'" + path + "' is not a recurrent-baseline bundle");
        if (j.value("schema_version", 0) != kBundleSchemaVersion)
            throw DataError("'" + path + "' has an unsupported schema version");
        LstmBaselineBundle bundle{
            LstmBaselineParams::init(j.at("features").get<Eigen::Index>(),
                                     j.at("window").get<Eigen::Index>(),
                                     j.at("out_features").get<Eigen::Index>(), 0),
            detail::hyper_from_json(j.at("hyper")),
            j.value("loss_trace", std::vector<double>{})};
        bundle.params.target_feature = j.at("target_feature").get<int>();
        bundle.params.horizon = j.at("horizon").get<int>();
        nn::params_from_json(bundle.params.store, j.at("params"));
        return bundle;
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError("'" + path + "' is malformed: " + e.what());
    }
}

}  // namespace genf::predictor
