#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genf/data/csv.hpp"
#include "genf/strategies/comparison.hpp"

namespace genf::harness {

// Version of the experiment config / report file layout.
inline constexpr int kReportSchemaVersion = 1;

// Environment variable naming the directory under which experiment output
// directories are created when the config does not name one explicitly.
inline constexpr const char* kOutputRootEnv = "GENF_OUTPUT_ROOT";

enum class DataSource { kCsv, kSynthetic };

// Parameters of the built-in autoregressive synthesizer, for experiments that
// run on generated data instead of a CSV file. The lag-1 coefficient matrix
// has `diag` on the diagonal and `coupling` everywhere else; the optional
// lag-2 matrix is diagonal with `diag2`.
struct SynthSpec {
    int features = 1;
    int order = 1;
    double diag = 0.8;
    double diag2 = 0.0;
    double coupling = 0.0;
    double sigma = 1.0;
    int units = 50;
    int length = 400;
    std::uint64_t seed = 1;

    void validate() const {
        if (features < 1) throw ConfigError("synth.features must be >= 1");
        if (order != 1 && order != 2) throw ConfigError("synth.order must be 1 or 2");
        if (!(sigma > 0.0)) throw ConfigError("synth.sigma must be > 0");
        if (units < 1) throw ConfigError("synth.units must be >= 1");
        if (length < 1) throw ConfigError("synth.length must be >= 1");
    }
};

// A fully normalized experiment description: data source, sweep shape, model
// hyper-parameters, and output location. Produced by validate_config /
// parse_config, which fill every default, resolve the output directory, and
// compute the canonical form the config hash is taken over.
struct ExperimentConfig {
    DataSource source = DataSource::kCsv;
    std::string data_path;    // csv source: file to load
    std::string schema_path;  // csv source: column preset ("" = infer from header)
    SynthSpec synth;          // synthetic source

    strategies::ComparisonConfig comparison;

    std::string output_dir;  // resolved; never empty after normalization

    std::vector<std::string> warnings;  // normalization notes (e.g. seed dedup)
    std::string canonical;              // normalized key=value text, sorted
    std::string config_hash;            // 16 hex digits over `canonical`

    void validate() const {
        if (source == DataSource::kCsv) {
            if (data_path.empty()) throw ConfigError("config: data.path is required");
        } else {
            synth.validate();
            if (comparison.target_feature >= synth.features)
                throw ConfigError("config: target_feature out of range for synth.features");
        }
        comparison.validate();
        if (output_dir.empty()) throw ConfigError("config: output_dir not resolved");
    }
};

namespace detail {

inline std::string fmt_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string fnv1a_hex(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

struct KvEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// `key = value` lines; '#' starts a comment; blank lines ignored. Duplicate
// keys are rejected so a config cannot silently contradict itself.
inline std::vector<KvEntry> read_kv(std::istream& in, const std::string& origin) {
    std::vector<KvEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        KvEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
        if (e.key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        for (const auto& prev : entries)
            if (prev.key == e.key)
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": duplicate key '" + e.key + "' (first on line " +
                                  std::to_string(prev.line) + ")");
        entries.push_back(std::move(e));
    }
    return entries;
}

inline std::string where(const std::string& origin, const KvEntry& e) {
    return origin + ":" + std::to_string(e.line) + ": " + e.key;
}

inline long long to_ll(const std::string& origin, const KvEntry& e) {
    long long v = 0;
    const std::string& s = e.value;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError(where(origin, e) + ": expected an integer, got '" + s + "'");
    return v;
}

inline int to_int(const std::string& origin, const KvEntry& e) {
    return static_cast<int>(to_ll(origin, e));
}

inline std::uint64_t to_u64(const std::string& origin, const KvEntry& e) {
    const long long v = to_ll(origin, e);
    if (v < 0) throw ConfigError(where(origin, e) + ": expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

inline double to_f64(const std::string& origin, const KvEntry& e) {
    double v = 0.0;
    const std::string& s = e.value;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError(where(origin, e) + ": expected a number, got '" + s + "'");
    return v;
}

inline bool to_bool(const std::string& origin, const KvEntry& e) {
    const std::string& s = e.value;
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ConfigError(where(origin, e) + ": expected true or false, got '" + s + "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

inline std::vector<int> to_int_list(const std::string& origin, const KvEntry& e) {
    std::vector<int> out;
    for (const auto& item : split_list(e.value)) {
        KvEntry sub{e.key, item, e.line};
        out.push_back(to_int(origin, sub));
    }
    return out;
}

inline std::vector<std::uint64_t> to_u64_list(const std::string& origin, const KvEntry& e) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(e.value)) {
        KvEntry sub{e.key, item, e.line};
        out.push_back(to_u64(origin, sub));
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, std::string>)
            out += v[i];
        else
            out += std::to_string(v[i]);
    }
    return out;
}

// When no column preset is given, adopt the generic layout: first header
// column is the unit id, second is the time index, the rest are features.
inline data::CsvSchema infer_csv_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
    const auto header = data::detail::split_csv_line(line);
    if (header.size() < 3)
        throw ConfigError("config: schema inference needs at least 3 columns "
                          "(unit, time, features...) in " + path +
                          "; set data.schema to a column preset instead");
    data::CsvSchema schema;
    schema.unit_column = header[0];
    schema.time_columns = {header[1]};
    schema.feature_columns.assign(header.begin() + 2, header.end());
    return schema;
}

// The canonical form: every effective setting as a sorted `key = value`
// list. The output directory is deliberately excluded — moving results does
// not change what experiment they describe.
inline std::string canonical_text(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::string>> kv;
    auto put = [&](std::string key, std::string value) {
        kv.emplace_back(std::move(key), std::move(value));
    };
    put("data.source", c.source == DataSource::kCsv ? "csv" : "synthetic");
    put("data.path", c.data_path);
    put("data.schema", c.schema_path);
    put("synth.features", std::to_string(c.synth.features));
    put("synth.order", std::to_string(c.synth.order));
    put("synth.diag", fmt_double(c.synth.diag));
    put("synth.diag2", fmt_double(c.synth.diag2));
    put("synth.coupling", fmt_double(c.synth.coupling));
    put("synth.sigma", fmt_double(c.synth.sigma));
    put("synth.units", std::to_string(c.synth.units));
    put("synth.length", std::to_string(c.synth.length));
    put("synth.seed", std::to_string(c.synth.seed));

    const auto& m = c.comparison;
    put("window", std::to_string(m.window));
    put("horizons", join(m.horizons));
    put("synth_steps", join(m.synth_steps));
    put("seeds", join(m.seeds));
    put("target_feature", std::to_string(m.target_feature));
    put("scale", m.scale ? "true" : "false");
    std::vector<std::string> strategies;
    if (m.include_direct) strategies.push_back("direct");
    if (m.include_iterative) strategies.push_back("iterative");
    if (m.include_lstm) strategies.push_back("lstm");
    if (!m.synth_steps.empty()) strategies.push_back("genf");
    put("strategies", join(strategies));
    put("one_step", m.one_step == strategies::OneStepKind::kTransformer ? "transformer"
                                                                        : "generator");
    put("split.mode", m.split_mode == strategies::SplitMode::kUnitRandom ? "unit-random"
                                                                         : "chronological");
    put("split.train", fmt_double(m.ratios.train));
    put("split.test", fmt_double(m.ratios.test));
    put("split.val", fmt_double(m.ratios.val));
    put("itc.enabled", m.use_itc ? "true" : "false");
    put("itc.k_neighbors", std::to_string(m.itc.k_neighbors));
    put("itc.gamma_groups", std::to_string(m.itc.gamma_groups));
    put("itc.generator_fraction", fmt_double(m.itc.generator_fraction));
    put("itc.subsample_cap", std::to_string(m.itc.subsample_cap));
    put("gan.lambda_gp", fmt_double(m.gan.lambda_gp));
    put("gan.eta_sup", fmt_double(m.gan.eta_sup));
    put("gan.critic_steps", std::to_string(m.gan.critic_steps));
    put("gan.learning_rate", fmt_double(m.gan.learning_rate));
    put("gan.batch_size", std::to_string(m.gan.batch_size));
    put("gan.epochs", std::to_string(m.gan.epochs));
    put("predictor.learning_rate", fmt_double(m.predictor_hyper.learning_rate));
    put("predictor.batch_size", std::to_string(m.predictor_hyper.batch_size));
    put("predictor.epochs", std::to_string(m.predictor_hyper.epochs));
    put("attention.num_heads", std::to_string(m.attention.num_heads));
    put("attention.model_dim", std::to_string(m.attention.model_dim));
    put("attention.head_dim", std::to_string(m.attention.head_dim));
    put("attention.ffn_dim", std::to_string(m.attention.ffn_dim));
    put("attention.encoder_layers", std::to_string(m.attention.encoder_layers));
    put("attention.decoder_layers", std::to_string(m.attention.decoder_layers));
    put("attention.dropout", fmt_double(m.attention.dropout));
    put("max_train_windows", std::to_string(m.max_train_windows));
    put("max_eval_windows", std::to_string(m.max_eval_windows));

    std::sort(kv.begin(), kv.end());
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

}  // namespace detail

// Parse and normalize an experiment description. `origin` labels error
// messages and names the default output directory; `config_dir` anchors
// relative data paths (empty = current directory). Every default is filled,
// duplicate seeds are dropped with a warning, unknown keys are rejected as a
// batch, referenced files are checked for existence, and the canonical form
// plus its hash are computed.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin,
                                     const std::string& config_dir = {}) {
    std::istringstream in(text);
    const auto entries = detail::read_kv(in, origin);

    ExperimentConfig cfg;
    bool source_set = false;
    bool strategies_set = false;
    std::vector<std::string> strategy_names;
    std::vector<std::string> unknown;
    std::vector<std::uint64_t> raw_seeds;
    bool seeds_set = false;

    for (const auto& e : entries) {
        auto& m = cfg.comparison;
        if (e.key == "data.source") {
            if (e.value == "csv") cfg.source = DataSource::kCsv;
            else if (e.value == "synthetic") cfg.source = DataSource::kSynthetic;
            else
                throw ConfigError(detail::where(origin, e) +
                                  ": expected csv or synthetic, got '" + e.value + "'");
            source_set = true;
        } else if (e.key == "data.path") {
            cfg.data_path = e.value;
        } else if (e.key == "data.schema") {
            cfg.schema_path = e.value;
        } else if (e.key == "synth.features") {
            cfg.synth.features = detail::to_int(origin, e);
        } else if (e.key == "synth.order") {
            cfg.synth.order = detail::to_int(origin, e);
        } else if (e.key == "synth.diag") {
            cfg.synth.diag = detail::to_f64(origin, e);
        } else if (e.key == "synth.diag2") {
            cfg.synth.diag2 = detail::to_f64(origin, e);
        } else if (e.key == "synth.coupling") {
            cfg.synth.coupling = detail::to_f64(origin, e);
        } else if (e.key == "synth.sigma") {
            cfg.synth.sigma = detail::to_f64(origin, e);
        } else if (e.key == "synth.units") {
            cfg.synth.units = detail::to_int(origin, e);
        } else if (e.key == "synth.length") {
            cfg.synth.length = detail::to_int(origin, e);
        } else if (e.key == "synth.seed") {
            cfg.synth.seed = detail::to_u64(origin, e);
        } else if (e.key == "window") {
            m.window = detail::to_int(origin, e);
        } else if (e.key == "horizons") {
            m.horizons = detail::to_int_list(origin, e);
        } else if (e.key == "synth_steps") {
            m.synth_steps = detail::to_int_list(origin, e);
        } else if (e.key == "seeds") {
            raw_seeds = detail::to_u64_list(origin, e);
            seeds_set = true;
        } else if (e.key == "target_feature") {
            m.target_feature = detail::to_int(origin, e);
        } else if (e.key == "scale") {
            m.scale = detail::to_bool(origin, e);
        } else if (e.key == "strategies") {
            strategy_names = detail::split_list(e.value);
            strategies_set = true;
        } else if (e.key == "one_step") {
            if (e.value == "transformer") m.one_step = strategies::OneStepKind::kTransformer;
            else if (e.value == "generator") m.one_step = strategies::OneStepKind::kGenerator;
            else
                throw ConfigError(detail::where(origin, e) +
                                  ": expected transformer or generator, got '" + e.value + "'");
        } else if (e.key == "split.mode") {
            if (e.value == "unit-random") m.split_mode = strategies::SplitMode::kUnitRandom;
            else if (e.value == "chronological")
                m.split_mode = strategies::SplitMode::kChronological;
            else
                throw ConfigError(detail::where(origin, e) +
                                  ": expected unit-random or chronological, got '" + e.value +
                                  "'");
        } else if (e.key == "split.train") {
            m.ratios.train = detail::to_f64(origin, e);
        } else if (e.key == "split.test") {
            m.ratios.test = detail::to_f64(origin, e);
        } else if (e.key == "split.val") {
            m.ratios.val = detail::to_f64(origin, e);
        } else if (e.key == "itc.enabled") {
            m.use_itc = detail::to_bool(origin, e);
        } else if (e.key == "itc.k_neighbors") {
            m.itc.k_neighbors = detail::to_int(origin, e);
        } else if (e.key == "itc.gamma_groups") {
            m.itc.gamma_groups = detail::to_int(origin, e);
        } else if (e.key == "itc.generator_fraction") {
            m.itc.generator_fraction = detail::to_f64(origin, e);
        } else if (e.key == "itc.subsample_cap") {
            m.itc.subsample_cap = detail::to_int(origin, e);
        } else if (e.key == "gan.lambda_gp") {
            m.gan.lambda_gp = detail::to_f64(origin, e);
        } else if (e.key == "gan.eta_sup") {
            m.gan.eta_sup = detail::to_f64(origin, e);
        } else if (e.key == "gan.critic_steps") {
            m.gan.critic_steps = detail::to_int(origin, e);
        } else if (e.key == "gan.learning_rate") {
            m.gan.learning_rate = detail::to_f64(origin, e);
        } else if (e.key == "gan.batch_size") {
            m.gan.batch_size = detail::to_int(origin, e);
        } else if (e.key == "gan.epochs") {
            m.gan.epochs = detail::to_int(origin, e);
        } else if (e.key == "predictor.learning_rate") {
            m.predictor_hyper.learning_rate = detail::to_f64(origin, e);
        } else if (e.key == "predictor.batch_size") {
            m.predictor_hyper.batch_size = detail::to_int(origin, e);
        } else if (e.key == "predictor.epochs") {
            m.predictor_hyper.epochs = detail::to_int(origin, e);
        } else if (e.key == "attention.num_heads") {
            m.attention.num_heads = detail::to_int(origin, e);
        } else if (e.key == "attention.model_dim") {
            m.attention.model_dim = detail::to_int(origin, e);
        } else if (e.key == "attention.head_dim") {
            m.attention.head_dim = detail::to_int(origin, e);
        } else if (e.key == "attention.ffn_dim") {
            m.attention.ffn_dim = detail::to_int(origin, e);
        } else if (e.key == "attention.encoder_layers") {
            m.attention.encoder_layers = detail::to_int(origin, e);
        } else if (e.key == "attention.decoder_layers") {
            m.attention.decoder_layers = detail::to_int(origin, e);
        } else if (e.key == "attention.dropout") {
            m.attention.dropout = detail::to_f64(origin, e);
        } else if (e.key == "max_train_windows") {
            m.max_train_windows = static_cast<std::size_t>(detail::to_u64(origin, e));
        } else if (e.key == "max_eval_windows") {
            m.max_eval_windows = static_cast<std::size_t>(detail::to_u64(origin, e));
        } else if (e.key == "output_dir") {
            cfg.output_dir = e.value;
        } else {
            unknown.push_back(e.key);
        }
    }

    if (!unknown.empty())
        throw ConfigError(origin + ": unknown keys: " + detail::join(unknown));

    // A data path without an explicit source means CSV.
    if (!source_set && !cfg.data_path.empty()) cfg.source = DataSource::kCsv;
    if (cfg.source == DataSource::kCsv && cfg.data_path.empty())
        throw ConfigError(origin + ": data.path is required for the csv source "
                          "(or set data.source = synthetic)");

    // Anchor relative file references at the config's own directory, then
    // require them to exist now rather than failing mid-run.
    if (cfg.source == DataSource::kCsv) {
        namespace fs = std::filesystem;
        auto anchor = [&](const std::string& p) {
            if (p.empty() || config_dir.empty() || fs::path(p).is_absolute()) return p;
            return (fs::path(config_dir) / p).string();
        };
        cfg.data_path = anchor(cfg.data_path);
        cfg.schema_path = anchor(cfg.schema_path);
        if (!fs::exists(cfg.data_path))
            throw ConfigError(origin + ": data.path does not exist: " + cfg.data_path);
        if (!cfg.schema_path.empty() && !fs::exists(cfg.schema_path))
            throw ConfigError(origin + ": data.schema does not exist: " + cfg.schema_path);
    }

    // Seeds: duplicates are dropped (first occurrence wins) with a warning.
    if (seeds_set) {
        std::vector<std::uint64_t> unique;
        for (const std::uint64_t s : raw_seeds) {
            if (std::find(unique.begin(), unique.end(), s) != unique.end())
                cfg.warnings.push_back("duplicate seed " + std::to_string(s) + " dropped");
            else
                unique.push_back(s);
        }
        if (unique.empty()) throw ConfigError(origin + ": seeds must not be empty");
        cfg.comparison.seeds = std::move(unique);
    }

    // Strategy list: which cells the grid contains. The generative strategy
    // additionally needs its synthetic step counts.
    if (strategies_set) {
        auto& m = cfg.comparison;
        m.include_direct = false;
        m.include_iterative = false;
        m.include_lstm = false;
        bool genf = false;
        for (const auto& name : strategy_names) {
            if (name == "direct") m.include_direct = true;
            else if (name == "iterative") m.include_iterative = true;
            else if (name == "lstm") m.include_lstm = true;
            else if (name == "genf") genf = true;
            else
                throw ConfigError(origin + ": unknown strategy '" + name +
                                  "' (expected direct, iterative, lstm, genf)");
        }
        if (genf && cfg.comparison.synth_steps.empty())
            throw ConfigError(origin +
                              ": strategy genf needs a non-empty synth_steps list");
        if (!genf) cfg.comparison.synth_steps.clear();
    }

    // Resolve the output directory: explicit value, else <root>/<origin stem>
    // where the root comes from the environment or a local default.
    if (cfg.output_dir.empty()) {
        std::string root = "genf-runs";
        if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0')
            root = env;
        const std::string stem = std::filesystem::path(origin).stem().string();
        cfg.output_dir = root + "/" + (stem.empty() ? "experiment" : stem);
    }

    cfg.canonical = detail::canonical_text(cfg);
    cfg.config_hash = detail::fnv1a_hex(cfg.canonical);
    cfg.validate();
    return cfg;
}

// Load, parse, normalize, and validate a config file.
inline ExperimentConfig validate_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path, std::filesystem::path(path).parent_path().string());
}

}  // namespace genf::harness
