#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "genf/predictor/attention.hpp"
#include "genf/predictor/lstm_baseline.hpp"
#include "genf/predictor/predictor.hpp"
#include "genf/predictor/serialize.hpp"
#include "genf/rng.hpp"
#include "../support/gradcheck.hpp"
#include "../support/tmpdir.hpp"

using namespace genf::predictor;
using genf::Rng;
using genf::hash_combine;
using Matrix = genf::nn::Matrix;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * (2.0 * rng.uniform() - 1.0);
    return m;
}

AttentionConfig tiny_config() {
    AttentionConfig cfg;
    cfg.num_heads = 2;
    cfg.model_dim = 4;
    cfg.head_dim = 2;
    cfg.ffn_dim = 6;
    cfg.encoder_layers = 1;
    cfg.decoder_layers = 1;
    cfg.dropout = 0.0;
    return cfg;
}

// Hand-built regression task: the target is a fixed linear functional of the
// window, so a capable model can drive training MSE to zero.
genf::data::WindowedDataset toy_windows(std::size_t n, Eigen::Index m, Eigen::Index k,
                                        int horizon, std::uint64_t seed) {
    genf::data::WindowedDataset out;
    out.window_length = m;
    out.horizons = {horizon};
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        genf::data::WindowedDataset::Sample s;
        s.unit_id = "toy";
        s.window = (random_matrix(m, k, rng).array() * 0.5 + 0.5).matrix();
        Eigen::VectorXd t(k);
        for (Eigen::Index f = 0; f < k; ++f)
            t(f) = 0.3 * s.window.col(0).mean() + 0.2 * s.window(m - 1, (f + 1) % k);
        s.targets[horizon] = t;
        out.samples.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("positional encoding follows the sinusoid formula", "[predictor]") {
    const Matrix pe = positional_encoding(3, 4);
    CHECK(pe(0, 0) == 0.0);
    CHECK(pe(0, 1) == 1.0);
    CHECK(pe(0, 2) == 0.0);
    CHECK(pe(0, 3) == 1.0);
    CHECK_THAT(pe(1, 0), Catch::Matchers::WithinAbs(std::sin(1.0), 1e-15));
    CHECK_THAT(pe(1, 1), Catch::Matchers::WithinAbs(std::cos(1.0), 1e-15));
    CHECK_THAT(pe(2, 2), Catch::Matchers::WithinAbs(std::sin(2.0 / 100.0), 1e-15));
    CHECK_THAT(pe(2, 3), Catch::Matchers::WithinAbs(std::cos(2.0 / 100.0), 1e-15));
    CHECK_THROWS_AS(positional_encoding(0, 4), genf::ContractError);
}

TEST_CASE("causal mask removes strictly later slots", "[predictor]") {
    const Matrix m = causal_mask(3);
    const double ninf = -std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < 3; ++c)
            CHECK(m(r, c) == (c > r ? ninf : 0.0));
}

TEST_CASE("single-position attention returns that value vector", "[predictor]") {
    Rng rng(7ULL);
    genf::nn::ParamStore store;
    HeadWeights w(store, "h", 5, 3, rng);
    const Matrix y = random_matrix(1, 5, rng);
    const auto out = attention_head(genf::nn::constant(y), w, zero_mask(1, 1));
    const Matrix expect = y * w.wv->val + w.bv->val;
    CHECK((out->val - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero queries give prefix means under the causal mask", "[predictor]") {
    Rng rng(8ULL);
    genf::nn::ParamStore store;
    HeadWeights w(store, "h", 4, 2, rng);
    w.wq->val.setZero();
    const Eigen::Index n = 5;
    const Matrix y = random_matrix(n, 4, rng);
    const auto out = attention_head(genf::nn::constant(y), w, causal_mask(n));

    const Matrix v = (y * w.wv->val).rowwise() + w.bv->val.row(0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Matrix prefix_mean =
            v.topRows(i + 1).colwise().sum() / static_cast<double>(i + 1);
        CHECK((out->val.row(i) - prefix_mean).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("attention rows distribute exactly unit mass", "[predictor]") {
    Rng rng(9ULL);
    genf::nn::ParamStore store;
    HeadWeights w(store, "h", 4, 2, rng);
    // All-ones values turn each output entry into the attention row sum.
    w.wv->val.setZero();
    w.bv->val.setOnes();
    const Eigen::Index n = 6;
    const Matrix y = random_matrix(n, 4, rng);

    Matrix mask = zero_mask(n, n);
    mask(2, 4) = -std::numeric_limits<double>::infinity();
    mask(5, 0) = -std::numeric_limits<double>::infinity();
    for (const Matrix& m : {causal_mask(n), zero_mask(n, n), mask}) {
        const auto out = attention_head(genf::nn::constant(y), w, m);
        CHECK((out->val.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("a fully masked row is a contract violation", "[predictor]") {
    Rng rng(10ULL);
    genf::nn::ParamStore store;
    HeadWeights w(store, "h", 4, 2, rng);
    const Matrix y = random_matrix(3, 4, rng);
    Matrix mask = zero_mask(3, 3);
    mask.row(1).setConstant(-std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(attention_head(genf::nn::constant(y), w, mask),
                    genf::ContractError);
    CHECK_THROWS_AS(attention_head(genf::nn::constant(y), w, zero_mask(2, 2)),
                    genf::ContractError);
}

TEST_CASE("one identity-projected head reduces to plain attention", "[predictor]") {
    Rng rng(11ULL);
    genf::nn::ParamStore store;
    const Eigen::Index d = 4;
    MultiHead mh(store, "mh", d, 1, d, rng);
    mh.out.w->val = Matrix::Identity(d, d);
    mh.out.b->val.setZero();
    const Matrix y = random_matrix(5, d, rng);
    const auto whole =
        mh(genf::nn::constant(y), genf::nn::constant(y), causal_mask(5), 5, 5);
    const auto single =
        attention_head(genf::nn::constant(y), mh.heads[0], causal_mask(5));
    CHECK((whole->val - single->val).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoder states ignore strictly later rows", "[predictor]") {
    AttentionConfig cfg;  // default: causal, 2+2 layers
    auto p = PredictorParams::init(3, 6, cfg, 1, 5ULL);
    Rng rng(12ULL);
    const Matrix w1 = (random_matrix(6, 3, rng).array() * 0.5 + 0.5).matrix();
    for (Eigen::Index i = 0; i < 5; ++i) {
        Matrix w2 = w1;
        for (Eigen::Index r = i + 1; r < 6; ++r)
            w2.row(r) = random_matrix(1, 3, rng).row(0);
        const Matrix s1 = encoder_states(p, w1);
        const Matrix s2 = encoder_states(p, w2);
        CHECK((s1.topRows(i + 1) - s2.topRows(i + 1)).cwiseAbs().maxCoeff() == 0.0);
        // The final prediction still sees the whole window via cross-attention.
        CHECK(std::abs(predictor_forward(p, w1)(0, 0) -
                       predictor_forward(p, w2)(0, 0)) > 1e-12);
    }
}

TEST_CASE("position signal makes predictions order sensitive", "[predictor]") {
    auto p = PredictorParams::init(2, 5, AttentionConfig{}, 1, 21ULL);
    Rng rng(22ULL);
    const Matrix w = (random_matrix(5, 2, rng).array() * 0.5 + 0.5).matrix();
    const Matrix rev = w.colwise().reverse();
    CHECK(std::abs(predictor_forward(p, w)(0, 0) -
                   predictor_forward(p, rev)(0, 0)) > 1e-9);
}

TEST_CASE("zeroed output head emits its bias", "[predictor]") {
    auto p = PredictorParams::init(2, 4, tiny_config(), 1, 3ULL);
    p.head.w->val.setZero();
    p.head.b->val.setConstant(0.37);
    Rng rng(23ULL);
    const Matrix w = random_matrix(4, 2, rng);
    CHECK(predictor_forward(p, w)(0, 0) == 0.37);
}

TEST_CASE("forward passes are finite and deterministic", "[predictor]") {
    auto p = PredictorParams::init(3, 8, AttentionConfig{}, 1, 31ULL);
    Rng rng(32ULL);
    const Matrix w = (random_matrix(8, 3, rng).array() * 0.5 + 0.5).matrix();
    const double a = predictor_forward(p, w)(0, 0);
    const double b = predictor_forward(p, w)(0, 0);
    CHECK(std::isfinite(a));
    CHECK(a == b);
    CHECK_THROWS_AS(predictor_forward(p, random_matrix(7, 3, rng)),
                    genf::ContractError);
    CHECK_THROWS_AS(predictor_forward(p, random_matrix(8, 2, rng)),
                    genf::ContractError);
}

TEST_CASE("batched forwards match single-window forwards", "[predictor]") {
    auto p = PredictorParams::init(2, 5, AttentionConfig{}, 2, 41ULL);
    Rng rng(42ULL);
    std::vector<Matrix> windows;
    std::vector<const Matrix*> ptrs;
    for (int i = 0; i < 3; ++i) windows.push_back(random_matrix(5, 2, rng));
    for (const auto& w : windows) ptrs.push_back(&w);
    const Matrix batched = predictor_output(p, ptrs)->val;
    for (int i = 0; i < 3; ++i) {
        const Matrix single = predictor_forward(p, windows[static_cast<std::size_t>(i)]);
        CHECK((batched.row(i) - single.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("configuration contradictions are rejected", "[predictor]") {
    AttentionConfig bad;
    bad.head_dim = 5;  // 3 * 5 != 12
    CHECK_THROWS_AS(bad.validate(), genf::ConfigError);
    AttentionConfig layers;
    layers.encoder_layers = 0;
    CHECK_THROWS_AS(layers.validate(), genf::ConfigError);
    AttentionConfig drop;
    drop.dropout = 1.0;
    CHECK_THROWS_AS(drop.validate(), genf::ConfigError);
    CHECK_THROWS_AS(PredictorParams::init(0, 4, AttentionConfig{}, 1, 1ULL),
                    genf::ConfigError);
}

TEST_CASE("parameter budget matches the hand-computed formula", "[predictor]") {
    // Width-12 stack over K=6 inputs: projection 84, encoder layers 1284
    // apiece, decoder layers 1932 apiece, query 12, head 13.
    auto p = PredictorParams::init(6, 24, AttentionConfig{}, 1, 1ULL);
    const std::size_t attn = 3 * (3 * (12 * 4 + 4)) + (12 * 12 + 12);
    const std::size_t ffn = (12 * 24 + 24) + (24 * 12 + 12);
    const std::size_t enc = attn + ffn + 2 * 24;
    const std::size_t dec = 2 * attn + ffn + 3 * 24;
    const std::size_t expect = (6 * 12 + 12) + 2 * enc + 2 * dec + 12 + (12 + 1);
    CHECK(p.parameter_count() == expect);
    CHECK(expect == 6541);

    auto lstm = LstmBaselineParams::init(6, 24, 1, 1ULL);
    const std::size_t l1 = 6 * 40 + 10 * 40 + 40;
    const std::size_t l2 = 10 * 40 + 10 * 40 + 40;
    CHECK(lstm.parameter_count() == l1 + l2 + (10 * 10 + 10) + (10 * 1 + 1));
}

TEST_CASE("analytic gradients of the regression loss match finite differences",
          "[predictor]") {
    auto p = PredictorParams::init(2, 3, tiny_config(), 1, 51ULL);
    Rng rng(52ULL);
    std::vector<Matrix> windows;
    for (int i = 0; i < 2; ++i) windows.push_back(random_matrix(3, 2, rng));
    Matrix target = random_matrix(2, 1, rng);

    const auto build = [&]() {
        std::vector<const Matrix*> ptrs;
        for (const auto& w : windows) ptrs.push_back(&w);
        const auto pred = predictor_output(p, ptrs);
        return genf::nn::mean_all(genf::nn::square(
            genf::nn::sub(pred, genf::nn::constant(target))));
    };
    const auto report = genf::test::fd_gradcheck(build, p.store.params, rng, 3);
    INFO("worst " << report.worst_leaf << "(" << report.worst_row << ","
                  << report.worst_col << "): " << report.worst_analytic << " vs "
                  << report.worst_numeric);
    CHECK(report.max_err < 1e-4);
}

TEST_CASE("lstm baseline gradients match finite differences", "[predictor]") {
    auto p = LstmBaselineParams::init(2, 3, 1, 61ULL);
    Rng rng(62ULL);
    std::vector<Matrix> windows;
    for (int i = 0; i < 2; ++i) windows.push_back(random_matrix(3, 2, rng));
    Matrix target = random_matrix(2, 1, rng);

    const auto build = [&]() {
        std::vector<const Matrix*> ptrs;
        for (const auto& w : windows) ptrs.push_back(&w);
        const auto pred = lstm_baseline_output(p, ptrs);
        return genf::nn::mean_all(genf::nn::square(
            genf::nn::sub(pred, genf::nn::constant(target))));
    };
    const auto report = genf::test::fd_gradcheck(build, p.store.params, rng, 4);
    CHECK(report.max_err < 1e-4);
}

TEST_CASE("lstm baseline zero weights emit the output bias", "[predictor]") {
    auto p = LstmBaselineParams::init(2, 4, 1, 71ULL);
    for (auto& t : p.store.params) t->val.setZero();
    p.fc2.b->val.setConstant(-1.25);
    Rng rng(72ULL);
    CHECK(lstm_baseline_forward(p, random_matrix(4, 2, rng))(0, 0) == -1.25);
}

TEST_CASE("transformer overfits a small deterministic task", "[predictor][train][slow]") {
    const auto windows = toy_windows(32, 4, 2, 2, 81ULL);
    AttentionConfig cfg;
    cfg.num_heads = 2;
    cfg.model_dim = 8;
    cfg.head_dim = 4;
    cfg.ffn_dim = 16;
    cfg.encoder_layers = 1;
    cfg.decoder_layers = 1;
    cfg.dropout = 0.0;
    PredictorHyper hyper;
    hyper.epochs = 900;  // batch 64 >= 32 samples, so one step per epoch
    hyper.seed = 82;
    const auto bundle = train_predictor(windows, 2, 0, cfg, hyper);
    INFO("final training mse " << bundle.loss_trace.back());
    CHECK(bundle.loss_trace.size() == 900);
    CHECK(bundle.loss_trace.back() < 1e-3);
    CHECK(bundle.params.horizon == 2);
    CHECK(bundle.params.target_feature == 0);
}

TEST_CASE("lstm baseline overfits the same task", "[predictor][train][slow]") {
    const auto windows = toy_windows(32, 4, 2, 2, 91ULL);
    PredictorHyper hyper;
    hyper.epochs = 600;
    hyper.seed = 92;
    const auto bundle = train_lstm_baseline(windows, 2, 0, hyper);
    INFO("final training mse " << bundle.loss_trace.back());
    CHECK(bundle.loss_trace.back() < 1e-3);
}

TEST_CASE("the K-wide one-step head trains on full target rows", "[predictor][train]") {
    const auto windows = toy_windows(12, 3, 2, 1, 101ULL);
    PredictorHyper hyper;
    hyper.epochs = 3;
    hyper.seed = 102;
    const auto bundle = train_predictor(windows, 1, kAllFeatures, tiny_config(), hyper);
    CHECK(bundle.params.out_features == 2);
    const Matrix out = predictor_forward(bundle.params, windows.samples[0].window);
    CHECK(out.rows() == 1);
    CHECK(out.cols() == 2);
}

TEST_CASE("training is reproducible and rejects unusable input", "[predictor][train]") {
    const auto windows = toy_windows(10, 3, 2, 2, 111ULL);
    PredictorHyper hyper;
    hyper.epochs = 3;
    hyper.batch_size = 4;
    hyper.seed = 112;
    const auto b1 = train_predictor(windows, 2, 1, tiny_config(), hyper);
    const auto b2 = train_predictor(windows, 2, 1, tiny_config(), hyper);
    REQUIRE(b1.params.store.params.size() == b2.params.store.params.size());
    for (std::size_t i = 0; i < b1.params.store.params.size(); ++i)
        CHECK((b1.params.store.params[i]->val - b2.params.store.params[i]->val)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    CHECK(b1.loss_trace == b2.loss_trace);

    genf::data::WindowedDataset empty;
    empty.window_length = 3;
    CHECK_THROWS_AS(train_predictor(empty, 2, 0, tiny_config(), hyper),
                    genf::DataError);
    CHECK_THROWS_AS(train_predictor(windows, 5, 0, tiny_config(), hyper),
                    genf::DataError);  // no horizon-5 targets
    CHECK_THROWS_AS(train_predictor(windows, 2, 7, tiny_config(), hyper),
                    genf::ConfigError);
    PredictorHyper bad = hyper;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train_predictor(windows, 2, 0, tiny_config(), bad),
                    genf::ConfigError);

    auto poisoned = windows;
    for (auto& s : poisoned.samples) s.targets.at(2).setConstant(1e200);
    CHECK_THROWS_AS(train_predictor(poisoned, 2, 0, tiny_config(), hyper),
                    genf::TrainingError);
    CHECK_THROWS_AS(train_lstm_baseline(poisoned, 2, 0, hyper),
                    genf::TrainingError);
}

TEST_CASE("predictor bundles roundtrip through disk", "[predictor]") {
    testsupport::TmpDir tmp("predictor");
    const auto windows = toy_windows(8, 3, 2, 1, 121ULL);
    PredictorHyper hyper;
    hyper.epochs = 2;
    hyper.batch_size = 4;
    hyper.seed = 122;

    const auto bundle = train_predictor(windows, 1, 0, tiny_config(), hyper);
    const auto path = tmp.file("pred.bundle");
    save_bundle(path, bundle);
    const auto loaded = load_bundle(path);
    CHECK(loaded.params.horizon == 1);
    CHECK(loaded.params.target_feature == 0);
    CHECK(loaded.hyper.seed == 122);
    CHECK(loaded.loss_trace == bundle.loss_trace);
    const Matrix& w = windows.samples[0].window;
    CHECK(predictor_forward(loaded.params, w)(0, 0) ==
          predictor_forward(bundle.params, w)(0, 0));

    const auto lstm = train_lstm_baseline(windows, 1, 1, hyper);
    const auto lpath = tmp.file("lstm.bundle");
    save_bundle(lpath, lstm);
    const auto lloaded = load_lstm_bundle(lpath);
    CHECK(lloaded.params.target_feature == 1);
    CHECK(lstm_baseline_forward(lloaded.params, w)(0, 0) ==
          lstm_baseline_forward(lstm.params, w)(0, 0));

    CHECK_THROWS_AS(load_bundle(lpath), genf::DataError);      // wrong format
    CHECK_THROWS_AS(load_lstm_bundle(path), genf::DataError);  // wrong format
    CHECK_THROWS_AS(load_bundle(tmp.file("absent.bundle")), genf::IoError);
    const auto junk = tmp.write("junk.bundle", "not json at all");
    CHECK_THROWS_AS(load_bundle(junk), genf::DataError);
}
