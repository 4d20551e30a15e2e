// Command-line front end for the forecasting laboratory.
//
// Subcommands cover the whole workflow: ingesting and splitting data,
// scoring units for the conditioning split, training the generator and the
// forecasters, synthesizing continuations, evaluating saved models, running
// full experiment sweeps from a config file, and printing the analytic
// bound calculators and the empirical error decomposition.
//
// Exit codes: 0 success, 1 config error, 2 data or I/O error, 3 training
// failed (or every sweep cell failed), 4 partial failure (some sweep cells
// failed).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "genf/cwgan/cwgan.hpp"
#include "genf/cwgan/serialize.hpp"
#include "genf/data/csv.hpp"
#include "genf/data/preprocess.hpp"
#include "genf/data/serialize.hpp"
#include "genf/errors.hpp"
#include "genf/harness/config.hpp"
#include "genf/harness/pipeline.hpp"
#include "genf/harness/report.hpp"
#include "genf/harness/tuner.hpp"
#include "genf/itc/itc.hpp"
#include "genf/metrics/metrics.hpp"
#include "genf/predictor/predictor.hpp"
#include "genf/predictor/serialize.hpp"
#include "genf/rng.hpp"
#include "genf/theory/bias_variance.hpp"
#include "genf/theory/theory.hpp"
#include "genf/version.hpp"

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;
constexpr int kExitPartial = 4;
constexpr int kExitInternal = 70;

// Emit a JSON document to the named file (atomically) or to stdout.
void write_or_print(const std::string& output, const Json& j) {
    const std::string body = j.dump(2) + "\n";
    if (output.empty()) {
        std::cout << body;
        return;
    }
    const fs::path path(output);
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            throw genf::IoError("cannot create directory " + path.parent_path().string() +
                                ": " + ec.message());
    }
    genf::harness::detail::write_file_atomic(path, body);
    std::cout << "wrote " << output << "\n";
}

Json stamp(const char* kind) {
    Json j;
    j["kind"] = kind;
    j["library_version"] = genf::kLibraryVersion;
    return j;
}

// Finite doubles pass through; infinities become null so the JSON stays
// standard (the accompanying flag tells the reader why).
Json finite_or_null(double v) {
    if (std::isfinite(v)) return Json(v);
    return Json(nullptr);
}

std::vector<double> predict_scalar_chunked(const genf::predictor::PredictorParams& params,
                                           const genf::data::WindowedDataset& windows) {
    constexpr std::size_t kChunk = 256;
    std::vector<double> out;
    out.reserve(windows.samples.size());
    for (std::size_t at = 0; at < windows.samples.size(); at += kChunk) {
        const std::size_t end = std::min(at + kChunk, windows.samples.size());
        std::vector<const genf::nn::Matrix*> ptrs;
        ptrs.reserve(end - at);
        for (std::size_t i = at; i < end; ++i) ptrs.push_back(&windows.samples[i].window);
        const genf::nn::Matrix rows = genf::predictor::predictor_output(params, ptrs)->val;
        for (Eigen::Index r = 0; r < rows.rows(); ++r) out.push_back(rows(r, 0));
    }
    return out;
}

genf::data::SplitRatios parse_ratios(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(std::stod(item));
    if (parts.size() == 2) parts.push_back(0.0);
    if (parts.size() != 3)
        throw genf::ConfigError("--split expects train,test[,val] ratios, got '" + text + "'");
    return {parts[0], parts[1], parts[2]};
}

// ---------------------------------------------------------------------------
// prepare-data: CSV -> imputed (optionally scaled, optionally split) dataset
// files ready for the training subcommands.
struct PrepareArgs {
    std::string input, schema, output;
    bool scale = false;
    std::string split;       // "train,test[,val]" ratios; empty = no split
    std::string split_mode = "unit-random";
    std::uint64_t seed = 1;
};

int run_prepare(const PrepareArgs& a) {
    const genf::data::CsvSchema schema =
        a.schema.empty() ? genf::harness::detail::infer_csv_schema(a.input)
                         : genf::data::load_csv_schema(a.schema);
    genf::data::TimeSeriesDataset dataset =
        genf::data::impute_last_observation(genf::data::load_csv_dataset(a.input, schema));

    if (a.split.empty()) {
        genf::data::DatasetFile file;
        file.provenance = {a.input, 0, ""};
        if (a.scale) {
            auto scaled = genf::data::scale_minmax(dataset);
            file.dataset = std::move(scaled.dataset);
            file.scaling = std::move(scaled.params);
        } else {
            file.dataset = std::move(dataset);
        }
        genf::data::save_dataset(a.output, file);
        std::cout << "wrote " << a.output << " (" << file.dataset.units.size() << " units, "
                  << file.dataset.feature_count() << " features)\n";
        return kExitOk;
    }

    const genf::data::SplitRatios ratios = parse_ratios(a.split);
    ratios.validate();
    genf::data::UnitSplit split;
    if (a.split_mode == "unit-random")
        split = genf::data::split_units(dataset, ratios, a.seed);
    else if (a.split_mode == "chronological")
        split = genf::data::split_chronological(dataset, ratios);
    else
        throw genf::ConfigError("--split-mode must be unit-random or chronological, got '" +
                                a.split_mode + "'");

    std::optional<genf::data::ScalingParams> scaling;
    if (a.scale) {
        scaling = genf::data::fit_minmax(split.train);
        split.train = genf::data::apply_minmax(std::move(split.train), *scaling);
        split.test = genf::data::apply_minmax(std::move(split.test), *scaling);
        if (!split.val.units.empty())
            split.val = genf::data::apply_minmax(std::move(split.val), *scaling);
    }

    std::error_code ec;
    fs::create_directories(a.output, ec);
    if (ec) throw genf::IoError("cannot create directory " + a.output + ": " + ec.message());
    auto save_part = [&](const char* name, genf::data::TimeSeriesDataset part) {
        if (part.units.empty()) {
            std::cout << "split " << name << " is empty, skipped\n";
            return;
        }
        genf::data::DatasetFile file;
        file.dataset = std::move(part);
        file.scaling = scaling;
        file.provenance = {a.input, a.split_mode == "unit-random" ? a.seed : 0, name};
        const std::string path = (fs::path(a.output) / (std::string(name) + ".json")).string();
        genf::data::save_dataset(path, file);
        std::cout << "wrote " << path << " (" << file.dataset.units.size() << " units)\n";
    };
    save_part("train", std::move(split.train));
    save_part("test", std::move(split.test));
    save_part("val", std::move(split.val));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// mi-score: pairwise dependence scores per unit, optionally with the
// derived generator/predictor split.
struct MiArgs {
    std::string input, output;
    genf::itc::ItcConfig cfg;
    bool split = false;
};

int run_mi(const MiArgs& a) {
    const genf::data::DatasetFile file = genf::data::load_dataset(a.input);
    Json j = stamp("mi-score");
    j["input"] = a.input;
    j["k_neighbors"] = a.cfg.k_neighbors;

    if (a.split) {
        const genf::itc::ItcSplit split = genf::itc::itc_split(file.dataset, a.cfg);
        Json scores = Json::array();
        for (const auto& assignment : split.assignments) {
            Json row;
            row["unit"] = assignment.unit_id;
            row["score"] = assignment.score;
            row["role"] = assignment.to_generator ? "generator" : "predictor";
            scores.push_back(std::move(row));
        }
        j["units"] = std::move(scores);
        j["skipped_pairs"] = split.table.skipped_pairs;
        Json gen = Json::array(), pred = Json::array();
        for (const auto& u : split.generator_set.units) gen.push_back(u.id);
        for (const auto& u : split.predictor_set.units) pred.push_back(u.id);
        j["generator_units"] = std::move(gen);
        j["predictor_units"] = std::move(pred);
    } else {
        const genf::itc::UnitScoreTable table = genf::itc::score_table(file.dataset, a.cfg);
        Json scores = Json::array();
        for (const auto& id : table.unit_ids) {
            Json row;
            row["unit"] = id;
            row["score"] = table.score_of(id);
            scores.push_back(std::move(row));
        }
        j["units"] = std::move(scores);
        j["skipped_pairs"] = table.skipped_pairs;
    }
    write_or_print(a.output, j);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train-generator: fit the conditional generator on a dataset file.
struct TrainGenArgs {
    std::string input, output;
    int window = 20;
    genf::cwgan::CwganHyper hyper;
};

int run_train_generator(const TrainGenArgs& a) {
    const genf::data::DatasetFile file = genf::data::load_dataset(a.input);
    const genf::data::WindowedDataset windows =
        genf::data::make_windows(file.dataset, a.window, {1});
    if (windows.samples.empty())
        throw genf::DataError("no training windows: every unit is shorter than window+1");
    const genf::cwgan::CwganBundle bundle = genf::cwgan::train_cwgan(windows, a.hyper);
    genf::cwgan::save_bundle(a.output, bundle, file.scaling);
    std::cout << "wrote " << a.output << " (" << bundle.trace.summary() << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// generate: recursive synthetic continuations from a saved generator.
struct GenerateArgs {
    std::string bundle, input, output;
    int steps = 1;
    std::size_t count = 1;  // 0 = every window
    std::uint64_t seed = 1;
};

int run_generate(const GenerateArgs& a) {
    std::optional<genf::data::ScalingParams> bundle_scaling;
    const genf::cwgan::CwganBundle bundle = genf::cwgan::load_bundle(a.bundle, &bundle_scaling);
    const genf::data::DatasetFile file = genf::data::load_dataset(a.input);
    const genf::data::WindowedDataset windows = genf::data::make_windows(
        file.dataset, static_cast<int>(bundle.generator.window), {1});
    if (windows.samples.empty())
        throw genf::DataError("no conditioning windows in " + a.input);
    const std::size_t n =
        a.count == 0 ? windows.samples.size() : std::min(a.count, windows.samples.size());

    Json j = stamp("generate");
    j["bundle"] = a.bundle;
    j["input"] = a.input;
    j["steps"] = a.steps;
    j["seed"] = a.seed;
    j["space"] = file.scaling ? "scaled" : "original";
    Json items = Json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const genf::nn::Matrix synth = genf::cwgan::generate_recursive(
            bundle.generator, windows.samples[i].window, a.steps,
            genf::hash_combine(a.seed, static_cast<std::uint64_t>(i)));
        Json item;
        item["unit"] = windows.samples[i].unit_id;
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < synth.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < synth.cols(); ++c) row.push_back(synth(r, c));
            rows.push_back(std::move(row));
        }
        item["synthetic"] = std::move(rows);
        items.push_back(std::move(item));
    }
    j["windows"] = std::move(items);
    write_or_print(a.output, j);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train-predictor: fit the attention forecaster at one horizon.
struct TrainPredArgs {
    std::string input, output;
    int window = 20;
    int horizon = 1;
    int target = 0;
    bool all_features = false;
    genf::predictor::AttentionConfig attention;
    genf::predictor::PredictorHyper hyper;
};

int run_train_predictor(const TrainPredArgs& a) {
    const genf::data::DatasetFile file = genf::data::load_dataset(a.input);
    const genf::data::WindowedDataset windows =
        genf::data::make_windows(file.dataset, a.window, {a.horizon});
    if (windows.samples.empty())
        throw genf::DataError("no training windows: every unit is shorter than window+horizon");
    const int target = a.all_features ? genf::predictor::kAllFeatures : a.target;
    const genf::predictor::PredictorBundle bundle =
        genf::predictor::train_predictor(windows, a.horizon, target, a.attention, a.hyper);
    genf::predictor::save_bundle(a.output, bundle, file.scaling);
    std::cout << "wrote " << a.output << " (final loss "
              << (bundle.loss_trace.empty() ? 0.0 : bundle.loss_trace.back()) << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate: score a saved forecaster on a dataset file.
struct EvaluateArgs {
    std::string bundle, input, output;
};

int run_evaluate(const EvaluateArgs& a) {
    std::optional<genf::data::ScalingParams> bundle_scaling;
    const genf::predictor::PredictorBundle bundle =
        genf::predictor::load_bundle(a.bundle, &bundle_scaling);
    if (bundle.params.target_feature == genf::predictor::kAllFeatures)
        throw genf::ConfigError(
            "evaluate needs a single-target forecaster; this bundle predicts all features");
    const genf::data::DatasetFile file = genf::data::load_dataset(a.input);
    const genf::data::WindowedDataset windows = genf::data::make_windows(
        file.dataset, static_cast<int>(bundle.params.window), {bundle.params.horizon});
    if (windows.samples.empty()) throw genf::DataError("no evaluation windows in " + a.input);

    std::vector<double> preds = predict_scalar_chunked(bundle.params, windows);
    std::vector<double> truth;
    truth.reserve(windows.samples.size());
    for (const auto& s : windows.samples)
        truth.push_back(s.targets.at(bundle.params.horizon)(bundle.params.target_feature));

    // Report in original units whenever the dataset file records its scaling.
    std::string space = "original";
    if (file.scaling) {
        for (double& p : preds)
            p = genf::data::unscale_value(*file.scaling, bundle.params.target_feature, p);
        for (double& t : truth)
            t = genf::data::unscale_value(*file.scaling, bundle.params.target_feature, t);
    }

    Json j = stamp("evaluate");
    j["bundle"] = a.bundle;
    j["input"] = a.input;
    j["horizon"] = bundle.params.horizon;
    j["target_feature"] = bundle.params.target_feature;
    j["eval_count"] = preds.size();
    j["space"] = space;
    j["mse"] = genf::metrics::mse(preds, truth);
    j["mae"] = genf::metrics::mae(preds, truth);
    j["smape"] = genf::metrics::smape(preds, truth);
    write_or_print(a.output, j);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// run-experiment: the full sweep from a config file.
struct ExperimentArgs {
    std::string config;
    std::string output_dir;  // overrides the config's choice
    std::string formats = "csv,json";
    std::vector<std::string> tune;  // repeatable "key=v1|v2|v3"
    bool validate_only = false;
};

int run_experiment(const ExperimentArgs& a) {
    genf::harness::ExperimentConfig cfg = genf::harness::validate_config(a.config);

    if (!a.tune.empty()) {
        std::vector<std::pair<std::string, std::vector<std::string>>> ranges;
        for (const auto& spec : a.tune) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos)
                throw genf::ConfigError("--tune expects key=v1|v2, got '" + spec + "'");
            std::vector<std::string> values;
            std::stringstream ss(spec.substr(eq + 1));
            std::string item;
            while (std::getline(ss, item, '|')) values.push_back(item);
            ranges.emplace_back(spec.substr(0, eq), std::move(values));
        }
        std::ifstream in(a.config);
        std::stringstream buf;
        buf << in.rdbuf();
        const genf::harness::TuneResult tuned =
            genf::harness::tune_grid(buf.str(), a.config, ranges);
        for (std::size_t i = 0; i < tuned.candidates.size(); ++i) {
            const auto& c = tuned.candidates[i];
            std::cout << "candidate " << i << ":";
            for (const auto& [k, v] : c.overrides) std::cout << " " << k << "=" << v;
            if (c.failed) std::cout << " failed: " << c.error;
            else std::cout << " val-mae=" << c.score;
            if (i == tuned.best_index) std::cout << " <- selected";
            std::cout << "\n";
        }
        cfg = tuned.best;
    }

    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;

    if (a.validate_only) {
        std::cout << "config " << a.config << " is valid\n"
                  << "config_hash " << cfg.config_hash << "\n"
                  << "output_dir " << cfg.output_dir << "\n";
        for (const auto& w : cfg.warnings) std::cout << "warning: " << w << "\n";
        return kExitOk;
    }

    std::vector<std::string> formats;
    {
        std::stringstream ss(a.formats);
        std::string item;
        while (std::getline(ss, item, ',')) formats.push_back(item);
    }

    const genf::harness::ExperimentReport report = genf::harness::run_pipeline(cfg);
    const auto files = genf::harness::emit_report(report, cfg.output_dir, formats);

    std::cout << "config_hash " << report.config_hash << "\n";
    for (const auto& w : report.config_warnings) std::cout << "warning: " << w << "\n";
    for (const auto& w : report.comparison.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& s : report.comparison.summaries) {
        std::cout << s.strategy << " n=" << s.horizon;
        if (s.synth_steps > 0) std::cout << " l=" << s.synth_steps;
        if (s.replicates > 0) {
            std::cout << " mae=" << s.mae_mean;
            if (s.replicates > 1) std::cout << "+-" << s.mae_std;
        }
        if (s.failures > 0) std::cout << " failures=" << s.failures;
        std::cout << "\n";
    }
    for (const auto& f : files) std::cout << "wrote " << f << "\n";

    std::size_t failed = 0;
    for (const auto& c : report.comparison.cells)
        if (c.failed) ++failed;
    if (failed == report.comparison.cells.size() && failed > 0) return kExitTraining;
    if (failed > 0) return kExitPartial;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// theory-bounds: analytic strategy bounds and the advantage condition.
struct TheoryArgs {
    genf::theory::TheoryParams params;
    bool scan = false;
    std::string output;
};

Json recurrence_json(const genf::theory::RecurrenceResult& r) {
    Json j;
    j["value"] = finite_or_null(r.value);
    j["saturated"] = r.saturated;
    return j;
}

int run_theory(const TheoryArgs& a) {
    const auto& p = a.params;
    Json j = stamp("theory-bounds");
    Json jp;
    jp["l1"] = p.l1;
    jp["l2"] = p.l2;
    jp["alpha"] = p.alpha;
    jp["sigma_i"] = p.sigma_i;
    jp["sigma_d"] = p.sigma_d;
    jp["beta0"] = p.beta0;
    jp["beta1"] = p.beta1;
    jp["beta2"] = p.beta2;
    jp["horizon"] = p.horizon;
    jp["synth_steps"] = p.synth_steps;
    j["params"] = std::move(jp);

    const genf::theory::StrategyBounds b = genf::theory::bounds(p);
    Json jb;
    jb["direct"] = b.direct;
    jb["iterative"] = recurrence_json(b.iterative);
    jb["hybrid"] = recurrence_json(b.hybrid);
    j["bounds"] = std::move(jb);

    if (p.horizon >= 2) {
        const genf::theory::AdvantageReport adv = genf::theory::advantage_check(p);
        Json ja;
        ja["condition_holds"] = adv.condition_holds;
        ja["threshold"] = finite_or_null(adv.threshold);
        ja["best_l"] = adv.best_l ? Json(*adv.best_l) : Json(nullptr);
        ja["any_l_regime"] = adv.any_l_regime;
        if (!adv.reason.empty()) ja["reason"] = adv.reason;
        j["advantage"] = std::move(ja);
    }

    if (a.scan) {
        Json rows = Json::array();
        for (int l = 0; l < p.horizon; ++l) {
            Json row;
            row["synth_steps"] = l;
            row["hybrid"] = recurrence_json(genf::theory::u_hybrid(p, l));
            rows.push_back(std::move(row));
        }
        j["scan"] = std::move(rows);
    }
    write_or_print(a.output, j);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bias-variance: empirical error decomposition on a synthetic process.
struct BiasVarArgs {
    double phi = 0.9;
    double phi2 = 0.0;
    double sigma = 1.0;
    genf::theory::BiasVarianceConfig cfg;
    genf::predictor::AttentionConfig attention;
    genf::predictor::PredictorHyper hyper;
    std::string output;
};

int run_bias_variance(const BiasVarArgs& a) {
    genf::data::ArProcessSpec spec;
    spec.k = 1;
    Eigen::MatrixXd a1(1, 1);
    a1 << a.phi;
    spec.coeffs = {a1};
    if (a.phi2 != 0.0) {
        Eigen::MatrixXd a2(1, 1);
        a2 << a.phi2;
        spec.coeffs.push_back(a2);
    }
    spec.noise_sigma = a.sigma;

    const genf::theory::TrainerFn trainer =
        genf::theory::transformer_trainer(a.attention, a.hyper, 0);
    const genf::theory::BiasVarianceReport report =
        genf::theory::empirical_bias_variance(spec, a.cfg, trainer);

    Json j = stamp("bias-variance");
    Json jp;
    jp["phi"] = a.phi;
    if (a.phi2 != 0.0) jp["phi2"] = a.phi2;
    jp["sigma"] = a.sigma;
    jp["replicates"] = a.cfg.replicates;
    jp["train_units"] = a.cfg.train_units;
    jp["train_length"] = a.cfg.train_length;
    jp["eval_windows"] = a.cfg.eval_windows;
    jp["window"] = a.cfg.window;
    jp["seed"] = a.cfg.seed;
    j["params"] = std::move(jp);

    Json rows = Json::array();
    for (const auto& h : report.horizons) {
        Json row;
        row["horizon"] = h.horizon;
        row["replicates_used"] = h.replicates_used;
        row["replicates_failed"] = h.replicates_failed;
        row["z"] = h.z;
        row["z_se"] = h.z_se;
        row["bias_sq"] = h.bias_sq;
        row["bias_sq_se"] = h.bias_sq_se;
        row["variance"] = h.variance;
        row["variance_se"] = h.variance_se;
        row["noise"] = h.noise;
        row["closure_gap"] = h.closure_gap;
        row["closure_se"] = h.closure_se;
        row["eval_count"] = h.eval_count;
        if (!h.replicate_errors.empty()) {
            Json errs = Json::array();
            for (const auto& e : h.replicate_errors) errs.push_back(e);
            row["replicate_errors"] = std::move(errs);
        }
        rows.push_back(std::move(row));
    }
    j["horizons"] = std::move(rows);
    write_or_print(a.output, j);
    return kExitOk;
}

void add_attention_options(CLI::App* cmd, genf::predictor::AttentionConfig& att) {
    cmd->add_option("--heads", att.num_heads, "Attention heads");
    cmd->add_option("--model-dim", att.model_dim, "Model width");
    cmd->add_option("--head-dim", att.head_dim, "Per-head width");
    cmd->add_option("--ffn-dim", att.ffn_dim, "Feed-forward width");
    cmd->add_option("--encoder-layers", att.encoder_layers, "Encoder depth");
    cmd->add_option("--decoder-layers", att.decoder_layers, "Decoder depth");
    cmd->add_option("--dropout", att.dropout, "Dropout probability");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generative long-range forecasting laboratory"};
    app.set_version_flag("--version", std::string("genf ") + genf::kLibraryVersion);
    app.require_subcommand(1);

    PrepareArgs prep;
    auto* p_prep = app.add_subcommand("prepare-data",
                                      "Load a CSV, impute gaps, optionally scale and split");
    p_prep->add_option("--input", prep.input, "CSV file")->required();
    p_prep->add_option("--schema", prep.schema,
                       "Column preset file (default: infer unit,time,features from header)");
    p_prep->add_option("--output", prep.output, "Dataset file (or directory with --split)")
        ->required();
    p_prep->add_flag("--scale", prep.scale, "Min-max scale (fit on the train split if any)");
    p_prep->add_option("--split", prep.split, "Ratios train,test[,val]");
    p_prep->add_option("--split-mode", prep.split_mode, "unit-random | chronological");
    p_prep->add_option("--seed", prep.seed, "Unit shuffle seed");

    MiArgs mi;
    auto* p_mi = app.add_subcommand("mi-score",
                                    "Score units by total pairwise dependence");
    p_mi->add_option("--input", mi.input, "Dataset file")->required();
    p_mi->add_option("--output", mi.output, "Output JSON (default: stdout)");
    p_mi->add_option("--neighbors", mi.cfg.k_neighbors, "kNN order for the MI estimator");
    p_mi->add_option("--gamma", mi.cfg.gamma_groups, "Score groups for the split");
    p_mi->add_option("--fraction", mi.cfg.generator_fraction,
                     "Generator share of each group");
    p_mi->add_option("--cap", mi.cfg.subsample_cap, "Aligned steps per pair");
    p_mi->add_option("--seed", mi.cfg.seed, "Subsample seed");
    p_mi->add_flag("--split", mi.split, "Also emit the generator/predictor unit split");

    TrainGenArgs tg;
    auto* p_tg = app.add_subcommand("train-generator",
                                    "Train the conditional generator on a dataset file");
    p_tg->add_option("--input", tg.input, "Dataset file (training split)")->required();
    p_tg->add_option("--output", tg.output, "Bundle file")->required();
    p_tg->add_option("--window", tg.window, "Condition rows per sample");
    p_tg->add_option("--epochs", tg.hyper.epochs, "Training epochs");
    p_tg->add_option("--batch-size", tg.hyper.batch_size, "Minibatch size");
    p_tg->add_option("--lr", tg.hyper.learning_rate, "Learning rate");
    p_tg->add_option("--lambda-gp", tg.hyper.lambda_gp, "Gradient-penalty weight");
    p_tg->add_option("--eta-sup", tg.hyper.eta_sup, "Supervised loss weight");
    p_tg->add_option("--critic-steps", tg.hyper.critic_steps,
                     "Critic updates per generator update");
    p_tg->add_option("--seed", tg.hyper.seed, "Training seed");

    GenerateArgs gen;
    auto* p_gen = app.add_subcommand("generate",
                                     "Synthesize recursive continuations of windows");
    p_gen->add_option("--bundle", gen.bundle, "Generator bundle")->required();
    p_gen->add_option("--input", gen.input, "Dataset file to condition on")->required();
    p_gen->add_option("--steps", gen.steps, "Synthetic steps per window")->required();
    p_gen->add_option("--count", gen.count, "Windows to extend (0 = all)");
    p_gen->add_option("--seed", gen.seed, "Noise seed");
    p_gen->add_option("--output", gen.output, "Output JSON (default: stdout)");

    TrainPredArgs tp;
    auto* p_tp = app.add_subcommand("train-predictor",
                                    "Train the attention forecaster at one horizon");
    p_tp->add_option("--input", tp.input, "Dataset file (training split)")->required();
    p_tp->add_option("--output", tp.output, "Bundle file")->required();
    p_tp->add_option("--horizon", tp.horizon, "Forecast horizon")->required();
    p_tp->add_option("--window", tp.window, "Condition rows per sample");
    p_tp->add_option("--target", tp.target, "Target feature column");
    p_tp->add_flag("--all-features", tp.all_features,
                   "Predict every feature (one-step rollout head)");
    add_attention_options(p_tp, tp.attention);
    p_tp->add_option("--epochs", tp.hyper.epochs, "Training epochs");
    p_tp->add_option("--batch-size", tp.hyper.batch_size, "Minibatch size");
    p_tp->add_option("--lr", tp.hyper.learning_rate, "Learning rate");
    p_tp->add_option("--seed", tp.hyper.seed, "Training seed");

    EvaluateArgs ev;
    auto* p_ev = app.add_subcommand("evaluate", "Score a saved forecaster on a dataset file");
    p_ev->add_option("--bundle", ev.bundle, "Forecaster bundle")->required();
    p_ev->add_option("--input", ev.input, "Dataset file (evaluation split)")->required();
    p_ev->add_option("--output", ev.output, "Output JSON (default: stdout)");

    ExperimentArgs ex;
    auto* p_ex = app.add_subcommand("run-experiment",
                                    "Run the full strategy sweep from a config file");
    p_ex->add_option("config", ex.config, "Experiment config file")->required();
    p_ex->add_option("--output-dir", ex.output_dir, "Override the config's output directory");
    p_ex->add_option("--formats", ex.formats, "Comma list of csv,json");
    p_ex->add_option("--tune", ex.tune,
                     "Grid-search a key over values: key=v1|v2 (repeatable)");
    p_ex->add_flag("--validate-only", ex.validate_only,
                   "Parse, normalize, and print the config hash without running");

    TheoryArgs th;
    auto* p_th = app.add_subcommand("theory-bounds",
                                    "Analytic error bounds for the three strategies");
    p_th->add_option("--l1", th.params.l1, "First slope constant")->required();
    p_th->add_option("--l2", th.params.l2, "Second slope constant")->required();
    p_th->add_option("--alpha", th.params.alpha, "One-step deviation factor")->required();
    p_th->add_option("--sigma-i", th.params.sigma_i, "One-step noise scale")->required();
    p_th->add_option("--sigma-d", th.params.sigma_d, "Direct noise scale")->required();
    p_th->add_option("--beta0", th.params.beta0, "Deviation sensitivity")->required();
    p_th->add_option("--beta1", th.params.beta1, "Horizon sensitivity")->required();
    p_th->add_option("--beta2", th.params.beta2, "Noise sensitivity")->required();
    p_th->add_option("--horizon", th.params.horizon, "Forecast horizon")->required();
    p_th->add_option("--synth-steps", th.params.synth_steps, "Hybrid synthetic steps");
    p_th->add_flag("--scan", th.scan, "Tabulate the hybrid bound for every L below N");
    p_th->add_option("--output", th.output, "Output JSON (default: stdout)");

    BiasVarArgs bv;
    auto* p_bv = app.add_subcommand(
        "bias-variance", "Empirical bias/variance/noise decomposition on a synthetic process");
    p_bv->add_option("--phi", bv.phi, "Lag-1 coefficient");
    p_bv->add_option("--phi2", bv.phi2, "Lag-2 coefficient (0 = first-order process)");
    p_bv->add_option("--sigma", bv.sigma, "Innovation standard deviation");
    p_bv->add_option("--horizons", bv.cfg.horizons, "Forecast horizons")->delimiter(',');
    p_bv->add_option("--replicates", bv.cfg.replicates, "Independent retrainings");
    p_bv->add_option("--train-units", bv.cfg.train_units, "Series per training corpus");
    p_bv->add_option("--train-length", bv.cfg.train_length, "Steps per training series");
    p_bv->add_option("--eval-windows", bv.cfg.eval_windows, "Independent evaluation windows");
    p_bv->add_option("--window", bv.cfg.window, "Condition rows per sample");
    p_bv->add_option("--seed", bv.cfg.seed, "Base seed");
    p_bv->add_option("--max-train-windows", bv.cfg.max_train_windows,
                     "Cap on training windows (0 = unlimited)");
    add_attention_options(p_bv, bv.attention);
    p_bv->add_option("--epochs", bv.hyper.epochs, "Training epochs");
    p_bv->add_option("--batch-size", bv.hyper.batch_size, "Minibatch size");
    p_bv->add_option("--lr", bv.hyper.learning_rate, "Learning rate");
    p_bv->add_option("--output", bv.output, "Output JSON (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help/version or the error
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (p_prep->parsed()) return run_prepare(prep);
        if (p_mi->parsed()) return run_mi(mi);
        if (p_tg->parsed()) return run_train_generator(tg);
        if (p_gen->parsed()) return run_generate(gen);
        if (p_tp->parsed()) return run_train_predictor(tp);
        if (p_ev->parsed()) return run_evaluate(ev);
        if (p_ex->parsed()) return run_experiment(ex);
        if (p_th->parsed()) return run_theory(th);
        if (p_bv->parsed()) return run_bias_variance(bv);
    } catch (const genf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const genf::ContractError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const genf::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const genf::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitData;
    } catch (const genf::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;  // unreachable: a subcommand is required
}
