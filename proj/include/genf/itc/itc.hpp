#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "genf/data/types.hpp"
#include "genf/itc/ksg.hpp"
#include "genf/rng.hpp"

namespace genf::itc {

// Unit-scoring and split parameters. generator_fraction is the share of each
// score group routed to generator training.
struct ItcConfig {
    int k_neighbors = 3;
    int gamma_groups = 4;
    double generator_fraction = 0.5;
    std::uint64_t seed = 0;
    int subsample_cap = 2000;  // aligned time steps per pair

    void validate() const {
        if (k_neighbors < 1) throw ConfigError("itc: k_neighbors must be >= 1");
        if (gamma_groups < 1) throw ConfigError("itc: gamma_groups must be >= 1");
        if (generator_fraction <= 0.0 || generator_fraction >= 1.0)
            throw ConfigError("itc: generator_fraction must lie in (0,1)");
        if (subsample_cap < 2) throw ConfigError("itc: subsample_cap must be >= 2");
    }
};

// Pairwise MI matrix plus the per-unit scores derived from it.
struct UnitScoreTable {
    std::vector<std::string> unit_ids;     // dataset order
    Eigen::MatrixXd mi;                    // symmetric, zero diagonal
    std::map<std::string, double> scores;  // row sums excluding the diagonal
    int skipped_pairs = 0;                 // common prefix too short for k

    double score_of(const std::string& id) const {
        const auto it = scores.find(id);
        if (it == scores.end()) throw ContractError("no score for unit " + id);
        return it->second;
    }
};

namespace detail {

// Aligned pair samples: both units truncated to their common prefix, each
// time step treated as one joint draw of the two K-vectors. Long pairs are
// subsampled (uniform, seeded symmetrically in the pair indices) to keep the
// quadratic neighbor search affordable.
inline bool aligned_pair(const data::Unit& a, const data::Unit& b, const ItcConfig& cfg,
                         std::uint64_t pair_salt, Eigen::MatrixXd& xa, Eigen::MatrixXd& xb) {
    const Eigen::Index common = std::min(a.values.rows(), b.values.rows());
    if (common <= cfg.k_neighbors) return false;
    if (common <= cfg.subsample_cap) {
        xa = a.values.topRows(common);
        xb = b.values.topRows(common);
        return true;
    }
    Rng rng(hash_combine(cfg.seed, pair_salt));
    auto idx = rng.sample_without_replacement(static_cast<std::size_t>(common),
                                              static_cast<std::size_t>(cfg.subsample_cap));
    std::sort(idx.begin(), idx.end());
    xa.resize(static_cast<Eigen::Index>(idx.size()), a.values.cols());
    xb.resize(static_cast<Eigen::Index>(idx.size()), b.values.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        xa.row(static_cast<Eigen::Index>(r)) = a.values.row(static_cast<Eigen::Index>(idx[r]));
        xb.row(static_cast<Eigen::Index>(r)) = b.values.row(static_cast<Eigen::Index>(idx[r]));
    }
    return true;
}

inline std::uint64_t pair_salt(std::size_t i, std::size_t j) {
    const auto lo = static_cast<std::uint64_t>(std::min(i, j));
    const auto hi = static_cast<std::uint64_t>(std::max(i, j));
    return (hi << 32) ^ lo;
}

}  // namespace detail

// Fill the full pairwise MI table. Each unordered pair is estimated once and
// mirrored, so the matrix is exactly symmetric.
inline UnitScoreTable score_table(const data::TimeSeriesDataset& dataset, const ItcConfig& cfg) {
    cfg.validate();
    const std::size_t n = dataset.units.size();
    if (n < 2) throw DataError("itc scoring needs at least 2 units");

    UnitScoreTable table;
    table.mi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& u : dataset.units) table.unit_ids.push_back(u.id);

    Eigen::MatrixXd xa, xb;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!detail::aligned_pair(dataset.units[i], dataset.units[j], cfg,
                                      detail::pair_salt(i, j), xa, xb)) {
                ++table.skipped_pairs;
                continue;
            }
            const double mi = ksg_mi(xa, xb, cfg.k_neighbors);
            table.mi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mi;
            table.mi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = mi;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        table.scores[table.unit_ids[i]] = table.mi.row(static_cast<Eigen::Index>(i)).sum();
    return table;
}

// Score of one unit against every other unit: sum of pairwise MI values.
inline double unit_score(const data::TimeSeriesDataset& dataset, const std::string& unit_id,
                         const ItcConfig& cfg) {
    cfg.validate();
    const std::size_t n = dataset.units.size();
    if (n < 2) throw DataError("unit_score needs at least 2 units");
    std::size_t self = n;
    for (std::size_t i = 0; i < n; ++i)
        if (dataset.units[i].id == unit_id) self = i;
    if (self == n) throw ContractError("unknown unit id: " + unit_id);

    double acc = 0.0;
    Eigen::MatrixXd xa, xb;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == self) continue;
        if (!detail::aligned_pair(dataset.units[self], dataset.units[j], cfg,
                                  detail::pair_salt(self, j), xa, xb))
            continue;
        acc += ksg_mi(xa, xb, cfg.k_neighbors);
    }
    return acc;
}

// One row of the split report: where each unit landed and why.
struct UnitAssignment {
    std::string unit_id;
    double score = 0.0;
    int group = 0;          // 0 = highest-score group
    bool to_generator = false;
};

struct ItcSplit {
    data::TimeSeriesDataset generator_set;
    data::TimeSeriesDataset predictor_set;
    UnitScoreTable table;
    std::vector<UnitAssignment> assignments;  // descending score order
};

// Sort units by descending score, cut into gamma contiguous groups, and from
// each group sample generator_fraction of its units (floor per group, with
// the remainder going to the highest-score groups) into the generator set.
inline ItcSplit itc_split(const data::TimeSeriesDataset& dataset, const ItcConfig& cfg) {
    cfg.validate();
    const std::size_t n = dataset.units.size();
    if (static_cast<std::size_t>(cfg.gamma_groups) > n)
        throw ConfigError("itc: gamma_groups (" + std::to_string(cfg.gamma_groups) +
                          ") exceeds unit count (" + std::to_string(n) + ")");

    ItcSplit out;
    out.table = score_table(dataset, cfg);

    // Descending score, ties broken by id so the ordering is total.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = out.table.scores.at(dataset.units[a].id);
        const double sb = out.table.scores.at(dataset.units[b].id);
        if (sa != sb) return sa > sb;
        return dataset.units[a].id < dataset.units[b].id;
    });

    // Contiguous groups, sizes as equal as possible (leading groups absorb
    // the remainder).
    const auto g = static_cast<std::size_t>(cfg.gamma_groups);
    std::vector<std::size_t> group_size(g, n / g);
    for (std::size_t i = 0; i < n % g; ++i) ++group_size[i];

    // Per-group take: floor(fraction * size), then hand the shortfall against
    // round(fraction * n) to the highest-score groups that still have room.
    std::vector<std::size_t> take(g);
    std::size_t taken = 0;
    for (std::size_t gi = 0; gi < g; ++gi) {
        take[gi] = static_cast<std::size_t>(
            std::floor(cfg.generator_fraction * static_cast<double>(group_size[gi]) + 1e-12));
        taken += take[gi];
    }
    auto target = static_cast<std::size_t>(
        std::floor(cfg.generator_fraction * static_cast<double>(n) + 0.5));
    for (std::size_t gi = 0; taken < target && gi < g; ++gi) {
        if (take[gi] < group_size[gi]) {
            ++take[gi];
            ++taken;
        }
    }

    std::vector<bool> to_generator(n, false);
    std::size_t offset = 0;
    for (std::size_t gi = 0; gi < g; ++gi) {
        Rng rng(hash_combine(cfg.seed, 0xD17ULL + gi));
        const auto pick = rng.sample_without_replacement(group_size[gi], take[gi]);
        for (std::size_t p : pick) to_generator[order[offset + p]] = true;
        for (std::size_t r = 0; r < group_size[gi]; ++r) {
            const std::size_t idx = order[offset + r];
            out.assignments.push_back({dataset.units[idx].id,
                                       out.table.scores.at(dataset.units[idx].id),
                                       static_cast<int>(gi), to_generator[idx]});
        }
        offset += group_size[gi];
    }

    for (auto* part : {&out.generator_set, &out.predictor_set}) {
        part->feature_names = dataset.feature_names;
        part->interval_description = dataset.interval_description;
        part->synth_spec = dataset.synth_spec;
    }
    for (std::size_t i = 0; i < n; ++i)
        (to_generator[i] ? out.generator_set : out.predictor_set).units.push_back(dataset.units[i]);
    return out;
}

}  // namespace genf::itc
