#include "catch_amalgamated.hpp"

#include <cmath>
#include <set>

#include "genf/data/csv.hpp"
#include "genf/data/preprocess.hpp"
#include "genf/data/serialize.hpp"
#include "genf/data/synth.hpp"
#include "../support/tmpdir.hpp"

using namespace genf::data;

namespace {

TimeSeriesDataset tiny_dataset(int units, int length, int k, std::uint64_t seed = 3) {
    genf::Rng rng(seed);
    TimeSeriesDataset ds;
    for (int f = 0; f < k; ++f) ds.feature_names.push_back("f" + std::to_string(f));
    for (int u = 0; u < units; ++u) {
        Eigen::MatrixXd v(length, k);
        for (int t = 0; t < length; ++t)
            for (int f = 0; f < k; ++f) v(t, f) = rng.normal();
        ds.units.push_back({"unit" + std::to_string(u), std::move(v)});
    }
    return ds;
}

}  // namespace

TEST_CASE("csv loading basics", "[data]") {
    testsupport::TmpDir tmp("genf-csv");
    const std::string path = tmp.write("two_units.csv",
                                       "site,t,a,b,c\n"
                                       "s2,1,1.0,2.0,3.0\n"
                                       "s1,2,10.5,oops,30.5\n"
                                       "s1,1,7.0,8.0,9.0\n"
                                       "s2,2,4.0,,6.0\n");
    CsvSchema schema;
    schema.unit_column = "site";
    schema.time_columns = {"t"};
    schema.feature_columns = {"a", "b", "c"};

    const auto ds = load_csv_dataset(path, schema);
    REQUIRE(ds.units.size() == 2);
    CHECK(ds.feature_count() == 3);
    // Units come back in id order, rows in time order.
    CHECK(ds.units[0].id == "s1");
    CHECK(ds.units[0].values(0, 0) == 7.0);
    CHECK(ds.units[0].values(1, 0) == 10.5);
    // Non-numeric and empty feature cells become missing markers.
    CHECK(std::isnan(ds.units[0].values(1, 1)));
    CHECK(std::isnan(ds.units[1].values(1, 1)));

    CsvSchema bad = schema;
    bad.unit_column = "absent";
    CHECK_THROWS_AS(load_csv_dataset(path, bad), genf::ConfigError);

    const std::string empty = tmp.write("empty.csv", "");
    CHECK_THROWS_AS(load_csv_dataset(empty, schema), genf::DataError);
    const std::string headers_only = tmp.write("headers.csv", "site,t,a,b,c\n");
    CHECK_THROWS_AS(load_csv_dataset(headers_only, schema), genf::DataError);
}

TEST_CASE("schema preset files", "[data]") {
    testsupport::TmpDir tmp("genf-schema");
    const std::string path = tmp.write("preset.cfg",
                                       "# hourly records\n"
                                       "unit_column = station\n"
                                       "time_column = year, month, day, hour\n"
                                       "feature_columns = PM10, SO2, NO2\n");
    const auto schema = load_csv_schema(path);
    CHECK(schema.unit_column == "station");
    CHECK(schema.time_columns.size() == 4);
    CHECK(schema.feature_columns == std::vector<std::string>{"PM10", "SO2", "NO2"});

    const std::string bad = tmp.write("bad.cfg", "unit_column = s\nmystery = 1\n");
    CHECK_THROWS_AS(load_csv_schema(bad), genf::ConfigError);
}

TEST_CASE("forward-fill imputation", "[data]") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    TimeSeriesDataset ds;
    ds.feature_names = {"x"};
    Eigen::MatrixXd v(4, 1);
    v << 1.0, nan, nan, 4.0;
    ds.units.push_back({"u0", v});

    const auto imputed = impute_last_observation(ds);
    Eigen::VectorXd expect(4);
    expect << 1.0, 1.0, 1.0, 4.0;
    CHECK(imputed.units[0].values.col(0) == expect);

    // No missing values: identity.
    const auto again = impute_last_observation(imputed);
    CHECK(again.units[0].values == imputed.units[0].values);

    // Leading missing value is refused, naming unit and feature.
    TimeSeriesDataset bad = ds;
    bad.units[0].values(0, 0) = nan;
    try {
        impute_last_observation(bad);
        FAIL("expected DataError");
    } catch (const genf::DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("u0") != std::string::npos);
        CHECK(msg.find("x") != std::string::npos);
    }
}

TEST_CASE("min-max scaling", "[data]") {
    TimeSeriesDataset ds;
    ds.feature_names = {"a", "const"};
    Eigen::MatrixXd v(3, 2);
    v << 2.0, 5.0, 4.0, 5.0, 6.0, 5.0;
    ds.units.push_back({"u0", v});

    const auto [scaled, params] = scale_minmax(ds);
    Eigen::VectorXd expect(3);
    expect << 0.0, 0.5, 1.0;
    CHECK(scaled.units[0].values.col(0).isApprox(expect, 1e-15));
    CHECK(scaled.units[0].values.col(1).isZero());
    REQUIRE(params.warnings.size() == 1);
    CHECK(params.warnings[0].find("const") != std::string::npos);

    // Round trip within 1e-9 on the non-constant feature; constant features
    // invert to their fitted min.
    const auto back = invert_minmax(scaled, params);
    CHECK(back.units[0].values.col(0).isApprox(ds.units[0].values.col(0), 1e-12));
    CHECK(back.units[0].values.col(1).isApprox(ds.units[0].values.col(1), 1e-12));
}

TEST_CASE("scaling fits on the selected units only", "[data]") {
    auto ds = tiny_dataset(3, 50, 2, 11);
    const auto params = fit_minmax(ds, {"unit0", "unit1"});
    // Values from the fitting units land in [0,1]; the held-out unit may not.
    const auto scaled = apply_minmax(ds, params);
    for (int u = 0; u < 2; ++u) {
        CHECK(scaled.units[static_cast<std::size_t>(u)].values.minCoeff() >= 0.0);
        CHECK(scaled.units[static_cast<std::size_t>(u)].values.maxCoeff() <= 1.0);
    }
    // Monotone: ordering of any two in-range values is preserved.
    CHECK(scale_value(params, 0, 0.2) < scale_value(params, 0, 0.3));
    CHECK_THROWS_AS(fit_minmax(ds, {"nope"}), genf::DataError);
}

TEST_CASE("window construction and counting", "[data]") {
    auto ds = tiny_dataset(1, 10, 2, 21);
    const auto w = make_windows(ds, 4, {1});
    CHECK(w.size() == 6);  // 10 - 4 - 1 + 1

    // Targets equal direct indexing into the unit, exhaustively.
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto& s = w.samples[i];
        const auto t0 = static_cast<Eigen::Index>(i);
        CHECK(s.window == ds.units[0].values.middleRows(t0, 4));
        CHECK(s.targets.at(1) == ds.units[0].values.row(t0 + 4).transpose());
    }

    // Multi-horizon counting oracle: length 144, M=20, max horizon 60.
    auto long_ds = tiny_dataset(2, 144, 1, 22);
    const auto w2 = make_windows(long_ds, 20, {8, 12, 30, 60});
    CHECK(w2.size() == 2 * 65);  // 144 - 20 - 60 + 1 per unit
    for (const auto& s : w2.samples) CHECK(s.targets.size() == 4);

    // Units too short for one window are skipped and reported.
    auto mixed = tiny_dataset(1, 30, 1, 23);
    auto shorty = tiny_dataset(1, 10, 1, 24);
    mixed.units.push_back({"short", shorty.units[0].values});
    const auto w3 = make_windows(mixed, 20, {8});
    CHECK(w3.size() == 3);  // 30 - 20 - 8 + 1
    REQUIRE(w3.skipped_units.size() == 1);
    CHECK(w3.skipped_units[0] == "short");
}

TEST_CASE("unit-level random split", "[data]") {
    auto ds = tiny_dataset(10, 8, 1, 31);
    const SplitRatios ratios{0.6, 0.2, 0.2};
    const auto split = split_units(ds, ratios, 7);
    CHECK(split.train.units.size() == 6);
    CHECK(split.test.units.size() == 2);
    CHECK(split.val.units.size() == 2);

    std::set<std::string> seen;
    for (const auto* part : {&split.train, &split.test, &split.val})
        for (const auto& u : part->units) CHECK(seen.insert(u.id).second);  // disjoint
    CHECK(seen.size() == 10);  // union = everything

    // Determinism.
    const auto split2 = split_units(ds, ratios, 7);
    for (std::size_t i = 0; i < 6; ++i) CHECK(split.train.units[i].id == split2.train.units[i].id);
    const auto split3 = split_units(ds, ratios, 8);
    bool same = true;
    for (std::size_t i = 0; i < 6; ++i) same &= split.train.units[i].id == split3.train.units[i].id;
    CHECK_FALSE(same);

    CHECK_THROWS_AS(split_units(ds, SplitRatios{0.5, 0.5, 0.1}, 1), genf::ConfigError);
    CHECK_THROWS_AS(split_units(tiny_dataset(2, 8, 1), ratios, 1), genf::DataError);
}

TEST_CASE("chronological split", "[data]") {
    auto ds = tiny_dataset(2, 100, 1, 41);
    const auto split = split_chronological(ds, {0.6, 0.2, 0.2});
    REQUIRE(split.train.units.size() == 2);
    CHECK(split.train.units[0].values.rows() == 60);
    CHECK(split.val.units[0].values.rows() == 20);
    CHECK(split.test.units[0].values.rows() == 20);
    // Segment boundaries: train rows are exactly the first 60 observations,
    // then val, then test — no leakage by construction.
    Eigen::MatrixXd glued(100, 1);
    glued << split.train.units[0].values, split.val.units[0].values, split.test.units[0].values;
    CHECK(glued == ds.units[0].values);
}

TEST_CASE("synthetic AR process", "[data]") {
    // Coefficient 0 -> white noise: lag-1 autocorrelation near zero.
    ArProcessSpec white;
    white.k = 1;
    white.coeffs = {Eigen::MatrixXd::Zero(1, 1)};
    white.noise_sigma = 1.0;
    const auto wn = synth_ar_process(white, 1, 20000, 5);
    const auto& x = wn.units[0].values.col(0);
    const double mean = x.mean();
    double num = 0, den = 0;
    for (Eigen::Index t = 1; t < x.size(); ++t) {
        num += (x(t) - mean) * (x(t - 1) - mean);
        den += (x(t) - mean) * (x(t) - mean);
    }
    CHECK(std::abs(num / den) < 0.03);

    // AR(1) phi=0.9, sigma=1: stationary variance 1/(1-0.81) ~ 5.263.
    ArProcessSpec ar1;
    ar1.k = 1;
    ar1.coeffs = {Eigen::MatrixXd::Constant(1, 1, 0.9)};
    ar1.noise_sigma = 1.0;
    const auto ds = synth_ar_process(ar1, 1, 10000, 6);
    const auto& y = ds.units[0].values.col(0);
    const double var = (y.array() - y.mean()).square().sum() / static_cast<double>(y.size());
    CHECK_THAT(var, Catch::Matchers::WithinRel(1.0 / (1.0 - 0.81), 0.10));

    // Determinism.
    const auto ds2 = synth_ar_process(ar1, 1, 100, 6);
    const auto ds3 = synth_ar_process(ar1, 1, 100, 6);
    CHECK(ds2.units[0].values == ds3.units[0].values);

    // Exact conditional mean for AR(1): phi^N * (last value).
    Eigen::MatrixXd hist(3, 1);
    hist << 0.1, -0.4, 2.0;
    const auto cm = ar1.coeffs[0](0, 0);
    CHECK_THAT(ds.synth_spec->conditional_mean(hist, 3)(0),
               Catch::Matchers::WithinRel(cm * cm * cm * 2.0, 1e-12));

    // Unstable coefficients are refused.
    ArProcessSpec unstable;
    unstable.k = 1;
    unstable.coeffs = {Eigen::MatrixXd::Constant(1, 1, 1.01)};
    CHECK_THROWS_AS(synth_ar_process(unstable, 1, 10, 1), genf::ConfigError);
}

TEST_CASE("AR(2) conditional mean matches companion-matrix power", "[data]") {
    ArProcessSpec spec;
    spec.k = 2;
    Eigen::MatrixXd a1(2, 2), a2(2, 2);
    a1 << 0.5, 0.2, 0.1, 0.4;
    a2 << -0.3, 0.0, 0.05, -0.2;
    spec.coeffs = {a1, a2};
    spec.noise_sigma = 0.5;
    spec.validate();

    Eigen::MatrixXd hist(4, 2);
    hist << 0.3, -0.1, 0.7, 0.2, -0.5, 0.9, 1.1, -0.2;

    // Independent oracle: companion-matrix power applied to the stacked state.
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(4, 4);
    comp.block(0, 0, 2, 2) = a1;
    comp.block(0, 2, 2, 2) = a2;
    comp.block(2, 0, 2, 2).setIdentity();
    Eigen::VectorXd state(4);
    state << hist.row(3).transpose(), hist.row(2).transpose();
    for (int n = 1; n <= 6; ++n) {
        state = comp * state;
        CHECK(spec.conditional_mean(hist, n).isApprox(state.head(2), 1e-12));
    }
}

TEST_CASE("dataset serialization round trip", "[data]") {
    testsupport::TmpDir tmp("genf-ser");
    ArProcessSpec ar1;
    ar1.k = 2;
    Eigen::MatrixXd a(2, 2);
    a << 0.5, 0.1, 0.0, 0.3;
    ar1.coeffs = {a};
    ar1.noise_sigma = 0.7;
    auto ds = synth_ar_process(ar1, 3, 40, 9);

    DatasetFile file;
    file.dataset = ds;
    file.scaling = fit_minmax(ds);
    file.provenance = {"synth:ar1", 9, "train"};
    const std::string path = tmp.file("ds.json");
    save_dataset(path, file);

    const auto loaded = load_dataset(path);
    REQUIRE(loaded.dataset.units.size() == 3);
    CHECK(loaded.dataset.feature_names == ds.feature_names);
    CHECK(loaded.dataset.units[1].values.isApprox(ds.units[1].values, 1e-15));
    REQUIRE(loaded.scaling.has_value());
    CHECK(loaded.scaling->feature_min.isApprox(file.scaling->feature_min, 1e-15));
    CHECK(loaded.provenance.source == "synth:ar1");
    CHECK(loaded.provenance.seed == 9);
    REQUIRE(loaded.dataset.synth_spec != nullptr);
    CHECK(loaded.dataset.synth_spec->coeffs[0].isApprox(a, 1e-15));

    const std::string junk = tmp.write("junk.json", "{\"format\": \"other\"}");
    CHECK_THROWS_AS(load_dataset(junk), genf::DataError);
    CHECK_THROWS_AS(load_dataset(tmp.file("missing.json")), genf::DataError);
}

TEST_CASE("AR(1) conditional variance matches the geometric closed form", "[data]") {
    ArProcessSpec ar1;
    ar1.k = 1;
    ar1.coeffs = {Eigen::MatrixXd::Constant(1, 1, 0.9)};
    ar1.noise_sigma = 0.7;

    const double phi2 = 0.81, s2 = 0.49;
    for (int n : {1, 3, 8}) {
        const double closed = s2 * (1.0 - std::pow(phi2, n)) / (1.0 - phi2);
        CHECK_THAT(ar1.conditional_variance(n)(0), Catch::Matchers::WithinRel(closed, 1e-12));
    }
    CHECK(ar1.conditional_variance(1)(0) == 0.7 * 0.7);
    CHECK_THROWS_AS(ar1.conditional_variance(0), genf::ContractError);
}

TEST_CASE("VAR(2) conditional variance matches direct simulation", "[data]") {
    ArProcessSpec spec;
    spec.k = 2;
    Eigen::MatrixXd a1(2, 2), a2(2, 2);
    a1 << 0.5, 0.1, 0.2, 0.4;
    a2 << 0.2, 0.0, 0.05, 0.15;
    spec.coeffs = {a1, a2};
    spec.noise_sigma = 0.5;

    // From a zero history the conditional mean stays zero, so the sampled
    // second moment of x_{t+n} is exactly the conditional variance.
    const int n = 4, draws = 200000;
    genf::Rng rng(41);
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (int d = 0; d < draws; ++d) {
        Eigen::Vector2d prev1 = Eigen::Vector2d::Zero(), prev2 = Eigen::Vector2d::Zero();
        Eigen::Vector2d x;
        for (int s = 0; s < n; ++s) {
            x = a1 * prev1 + a2 * prev2;
            x(0) += spec.noise_sigma * rng.normal();
            x(1) += spec.noise_sigma * rng.normal();
            prev2 = prev1;
            prev1 = x;
        }
        acc += x.cwiseProduct(x);
    }
    acc /= static_cast<double>(draws);

    const Eigen::VectorXd analytic = spec.conditional_variance(n);
    CHECK_THAT(acc(0), Catch::Matchers::WithinRel(analytic(0), 0.02));
    CHECK_THAT(acc(1), Catch::Matchers::WithinRel(analytic(1), 0.02));
}
