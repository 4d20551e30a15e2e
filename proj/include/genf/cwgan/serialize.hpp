#pragma once

#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"

#include "genf/cwgan/cwgan.hpp"
#include "genf/data/types.hpp"
#include "genf/errors.hpp"
#include "genf/nn/serialize.hpp"

namespace genf::cwgan {

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
    s.feature_min = Eigen::Map<const Eigen::VectorXd>(mins.data(),
                                                      static_cast<Eigen::Index>(mins.size()));
    s.feature_max = Eigen::Map<const Eigen::VectorXd>(maxs.data(),
                                                      static_cast<Eigen::Index>(maxs.size()));
    s.warnings = j.value("warnings", std::vector<std::string>{});
    return s;
}
}  // namespace detail

// Self-describing trained-model file: architecture dims, hyperparameters,
// training trace, optional scaling provenance, and all parameter tensors.
inline void save_bundle(const std::string& path, const CwganBundle& bundle,
                        const std::optional<data::ScalingParams>& scaling = {}) {
    detail::Json j;
    j["format"] = "genf.cwgan";
    j["schema_version"] = kBundleSchemaVersion;
    j["features"] = bundle.generator.features;
    j["window"] = bundle.generator.window;
    detail::Json h;
    h["lambda_gp"] = bundle.hyper.lambda_gp;
    h["eta_sup"] = bundle.hyper.eta_sup;
    h["critic_steps"] = bundle.hyper.critic_steps;
    h["learning_rate"] = bundle.hyper.learning_rate;
    h["batch_size"] = bundle.hyper.batch_size;
    h["epochs"] = bundle.hyper.epochs;
    h["seed"] = bundle.hyper.seed;
    j["hyper"] = std::move(h);
    detail::Json t;
    t["critic_loss"] = bundle.trace.critic_loss;
    t["generator_loss"] = bundle.trace.generator_loss;
    t["wasserstein_gap"] = bundle.trace.wasserstein_gap;
    j["trace"] = std::move(t);
    if (scaling && scaling->fitted()) j["scaling"] = detail::scaling_to_json(*scaling);
    j["generator"] = nn::params_to_json(bundle.generator.store);
    j["discriminator"] = nn::params_to_json(bundle.discriminator.store);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(1) << "\n";
    if (!out) throw IoError("failed while writing '" + path + "'");
}

inline CwganBundle load_bundle(const std::string& path,
                               std::optional<data::ScalingParams>* scaling_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    detail::Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.value("format", "") != "genf.cwgan")
            throw DataError("'" + path + "' is not a generator bundle");
        if (j.value("schema_version", 0) != kBundleSchemaVersion)
            throw DataError("'" + path + "' has an unsupported schema version");
        const auto features = j.at("features").get<Eigen::Index>();
        const auto window = j.at("window").get<Eigen::Index>();
        CwganHyper hyper;
        const auto& h = j.at("hyper");
        hyper.lambda_gp = h.at("lambda_gp").get<double>();
        hyper.eta_sup = h.at("eta_sup").get<double>();
        hyper.critic_steps = h.at("critic_steps").get<int>();
        hyper.learning_rate = h.at("learning_rate").get<double>();
        hyper.batch_size = h.at("batch_size").get<int>();
        hyper.epochs = h.at("epochs").get<int>();
        hyper.seed = h.at("seed").get<std::uint64_t>();

        CwganBundle bundle{GeneratorParams::init(features, window, 0),
                           DiscriminatorParams::init(features, window, 0), hyper, {}};
        if (j.contains("trace")) {
            const auto& t = j.at("trace");
            bundle.trace.critic_loss = t.value("critic_loss", std::vector<double>{});
            bundle.trace.generator_loss = t.value("generator_loss", std::vector<double>{});
            bundle.trace.wasserstein_gap = t.value("wasserstein_gap", std::vector<double>{});
        }
        nn::params_from_json(bundle.generator.store, j.at("generator"));
        nn::params_from_json(bundle.discriminator.store, j.at("discriminator"));
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

}  // namespace genf::cwgan
