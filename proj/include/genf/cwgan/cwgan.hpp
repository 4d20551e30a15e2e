#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "genf/data/preprocess.hpp"
#include "genf/errors.hpp"
#include "genf/nn/autodiff.hpp"
#include "genf/nn/layers.hpp"
#include "genf/rng.hpp"

// Conditional Wasserstein generator for one-step-ahead synthesis.
//
// The generator reads the M-row condition window plus one appended noise row
// through a small recurrent encoder and emits the next observation; the
// critic scores a (condition, candidate-step) pair. Training alternates
// gradient-penalty critic updates with generator updates whose loss adds an
// l2 supervision term to the adversarial score. Multi-step synthesis slides
// the window over its own outputs.

namespace genf::cwgan {

using nn::Matrix;
using nn::Var;

struct CwganHyper {
    double lambda_gp = 5.0;     // gradient-penalty weight
    double eta_sup = 1.0;       // supervised l2 weight (0 switches supervision off)
    int critic_steps = 5;       // critic updates per generator update
    double learning_rate = 0.001;
    int batch_size = 64;
    int epochs = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(lambda_gp >= 0.0)) throw ConfigError("cwgan: lambda_gp must be >= 0");
        if (!(eta_sup >= 0.0)) throw ConfigError("cwgan: eta_sup must be >= 0");
        if (critic_steps < 1) throw ConfigError("cwgan: critic_steps must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("cwgan: learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("cwgan: batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("cwgan: epochs must be >= 1");
    }
};

inline constexpr Eigen::Index kEncoderHidden = 5;
inline constexpr Eigen::Index kGeneratorDense = 12;
inline constexpr Eigen::Index kCriticDense1 = 12;
inline constexpr Eigen::Index kCriticDense2 = 4;

struct GeneratorParams {
    Eigen::Index features = 0;  // K
    Eigen::Index window = 0;    // M condition rows
    nn::ParamStore store;
    nn::Lstm encoder;
    nn::Dense hidden_fc;
    nn::Dense out_fc;

    static GeneratorParams init(Eigen::Index features, Eigen::Index window,
                                std::uint64_t seed) {
        if (features < 1 || window < 1)
            throw ConfigError("generator: features and window must be >= 1");
        GeneratorParams p;
        p.features = features;
        p.window = window;
        Rng rng(hash_combine(seed, 0x6e9ULL));
        p.encoder = nn::Lstm(p.store, "encoder", features, kEncoderHidden, rng);
        p.hidden_fc =
            nn::Dense(p.store, "hidden", kEncoderHidden, kGeneratorDense, rng, 0.1);
        p.out_fc = nn::Dense(p.store, "out", kGeneratorDense, features, rng);
        return p;
    }

    std::size_t parameter_count() const { return store.count(); }
};

struct DiscriminatorParams {
    Eigen::Index features = 0;
    Eigen::Index window = 0;
    nn::ParamStore store;
    nn::Lstm encoder;
    nn::Dense fc1;
    nn::Dense fc2;
    nn::Dense score_fc;  // single unbounded real, no squashing

    static DiscriminatorParams init(Eigen::Index features, Eigen::Index window,
                                    std::uint64_t seed) {
        if (features < 1 || window < 1)
            throw ConfigError("critic: features and window must be >= 1");
        DiscriminatorParams p;
        p.features = features;
        p.window = window;
        Rng rng(hash_combine(seed, 0xc217ULL));
        p.encoder = nn::Lstm(p.store, "encoder", features, kEncoderHidden, rng);
        p.fc1 = nn::Dense(p.store, "fc1", kEncoderHidden, kCriticDense1, rng, 0.1);
        p.fc2 = nn::Dense(p.store, "fc2", kCriticDense1, kCriticDense2, rng, 0.1);
        p.score_fc = nn::Dense(p.store, "score", kCriticDense2, 1, rng);
        return p;
    }

    std::size_t parameter_count() const { return store.count(); }
};

namespace detail {

inline void check_condition(const Matrix& c, Eigen::Index window, Eigen::Index features,
                            const char* who) {
    if (c.rows() != window || c.cols() != features)
        throw ContractError(std::string(who) + ": condition must be " +
                            std::to_string(window) + "x" + std::to_string(features) +
                            ", got " + std::to_string(c.rows()) + "x" +
                            std::to_string(c.cols()));
}

// Stacks row t of every condition into one batch x features constant per step.
inline std::vector<Var> condition_steps(const std::vector<const Matrix*>& conds,
                                        Eigen::Index window, Eigen::Index features) {
    const auto b = static_cast<Eigen::Index>(conds.size());
    std::vector<Var> steps;
    steps.reserve(static_cast<std::size_t>(window));
    for (Eigen::Index t = 0; t < window; ++t) {
        Matrix s(b, features);
        for (Eigen::Index i = 0; i < b; ++i) s.row(i) = conds[static_cast<std::size_t>(i)]->row(t);
        steps.push_back(nn::constant(std::move(s)));
    }
    return steps;
}

}  // namespace detail

// Batched generator graph: one synthetic next row per condition.
inline Var generator_output(const GeneratorParams& p,
                            const std::vector<const Matrix*>& conditions,
                            const Var& noise_rows) {
    if (conditions.empty()) throw ContractError("generator: empty batch");
    for (const Matrix* c : conditions)
        detail::check_condition(*c, p.window, p.features, "generator");
    if (noise_rows->rows() != static_cast<Eigen::Index>(conditions.size()) ||
        noise_rows->cols() != p.features)
        throw ContractError("generator: noise block must be batch x features");
    auto steps = detail::condition_steps(conditions, p.window, p.features);
    steps.push_back(noise_rows);  // noise rides along as the final pseudo-step
    const Var h = p.encoder.forward(steps).back();
    return p.out_fc(nn::relu(p.hidden_fc(h)));
}

// Batched critic graph: one score per (condition, candidate-row) pair.
inline Var critic_output(const DiscriminatorParams& p,
                         const std::vector<const Matrix*>& conditions,
                         const Var& candidate_rows) {
    if (conditions.empty()) throw ContractError("critic: empty batch");
    for (const Matrix* c : conditions)
        detail::check_condition(*c, p.window, p.features, "critic");
    if (candidate_rows->rows() != static_cast<Eigen::Index>(conditions.size()) ||
        candidate_rows->cols() != p.features)
        throw ContractError("critic: candidate block must be batch x features");
    auto steps = detail::condition_steps(conditions, p.window, p.features);
    steps.push_back(candidate_rows);
    const Var h = p.encoder.forward(steps).back();
    return p.score_fc(nn::relu(p.fc2(nn::relu(p.fc1(h)))));
}

// Single-sample entry points.

inline Matrix generator_forward(const GeneratorParams& p, const Matrix& condition,
                                const Eigen::VectorXd& noise) {
    if (noise.size() != p.features)
        throw ContractError("generator: noise vector must have one entry per feature");
    const Var z = nn::constant(Matrix(noise.transpose()));
    return generator_output(p, {&condition}, z)->val;  // 1 x K
}

inline double critic_forward(const DiscriminatorParams& p, const Matrix& condition,
                             const Matrix& candidate) {
    if (candidate.rows() != 1 || candidate.cols() != p.features)
        throw ContractError("critic: candidate must be 1 x features");
    return critic_output(p, {&condition}, nn::constant(candidate))->val(0, 0);
}

// Keeps sqrt away from exactly zero: d/dx sqrt(x) is unbounded at 0, and a
// sample whose critic gradient is exactly zero (every relu path dead) would
// otherwise inject inf/NaN into the parameter gradients.
inline constexpr double kNormEpsilon = 1e-12;

// Mean of (||d scores / d interp||_2 - 1)^2 over the batch; `interp` must be
// a leaf so the inner gradient can target it. The result stays differentiable
// in everything upstream of `scores` (the inner gradient is itself a taped
// graph), which is how the penalty trains the critic.
inline Var penalty_from_scores(const Var& scores, const Var& interp) {
    const Var g = nn::grad(nn::sum_all(scores), {interp})[0];  // batch x K
    const Var norms =
        nn::sqrt_v(nn::scalar_add(nn::rowwise_sum(nn::square(g)), kNormEpsilon));
    return nn::mean_all(nn::square(nn::scalar_add(norms, -1.0)));
}

inline Var penalty_term(const DiscriminatorParams& d,
                        const std::vector<const Matrix*>& conditions, const Var& interp) {
    return penalty_from_scores(critic_output(d, conditions, interp), interp);
}

inline double gradient_penalty(const DiscriminatorParams& p, const Matrix& condition,
                               const Matrix& real_step, const Matrix& fake_step,
                               double epsilon) {
    if (real_step.rows() != 1 || real_step.cols() != p.features ||
        fake_step.rows() != real_step.rows() || fake_step.cols() != real_step.cols())
        throw ContractError("gradient_penalty: steps must be 1 x features");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw ContractError("gradient_penalty: epsilon must lie in [0, 1]");
    Matrix xhat = epsilon * fake_step + (1.0 - epsilon) * real_step;
    const Var leaf = nn::make_leaf(std::move(xhat), "interp");
    return penalty_term(p, {&condition}, leaf)->val(0, 0);
}

// One (condition window, observed next row) training pair, in scaled space.
struct StepSample {
    Matrix condition;  // M x K
    Matrix next;       // 1 x K
};
using StepBatch = std::vector<StepSample>;

namespace detail {

struct AssembledBatch {
    std::vector<const Matrix*> conds;
    Matrix real;  // batch x K
    Eigen::Index b = 0;
};

inline AssembledBatch assemble(const std::vector<const StepSample*>& batch,
                               Eigen::Index features) {
    if (batch.empty()) throw ContractError("cwgan: empty batch");
    AssembledBatch a;
    a.b = static_cast<Eigen::Index>(batch.size());
    a.conds.reserve(batch.size());
    a.real.resize(a.b, features);
    for (Eigen::Index i = 0; i < a.b; ++i) {
        const StepSample* s = batch[static_cast<std::size_t>(i)];
        if (s->next.rows() != 1 || s->next.cols() != features)
            throw ContractError("cwgan: target row must be 1 x features");
        a.conds.push_back(&s->condition);
        a.real.row(i) = s->next;
    }
    return a;
}

inline Matrix draw_noise(Rng& rng, Eigen::Index b, Eigen::Index k) {
    Matrix z(b, k);
    for (Eigen::Index i = 0; i < b; ++i)
        for (Eigen::Index j = 0; j < k; ++j) z(i, j) = rng.normal();
    return z;
}

inline Eigen::VectorXd draw_eps(Rng& rng, Eigen::Index b) {
    Eigen::VectorXd e(b);
    for (Eigen::Index i = 0; i < b; ++i) e(i) = rng.uniform();
    return e;
}

// Mean l2 distance between real and generated rows (norm, not squared norm).
inline Var supervision_term(const Var& real_rows, const Var& fake_rows) {
    const Var diff = nn::sub(real_rows, fake_rows);
    return nn::mean_all(nn::sqrt_v(nn::rowwise_sum(nn::square(diff))));
}

}  // namespace detail

// Critic objective: mean D(fake) - mean D(real) + lambda * mean penalty.
// One critic pass covers fake, real and interpolated candidates.
struct CriticLossGraph {
    Var loss;
    double wasserstein_gap = 0.0;  // mean D(real) - mean D(fake), value only
};

inline CriticLossGraph critic_loss_graph(const GeneratorParams& g,
                                         const DiscriminatorParams& d,
                                         const std::vector<const StepSample*>& batch,
                                         const CwganHyper& hyper, const Matrix& noise,
                                         const Eigen::VectorXd& eps) {
    auto a = detail::assemble(batch, g.features);
    if (noise.rows() != a.b || noise.cols() != g.features)
        throw ContractError("cwgan: noise block must be batch x features");
    if (eps.size() != a.b) throw ContractError("cwgan: one epsilon per sample");

    const Var fake = generator_output(g, a.conds, nn::constant(noise));
    const Var real = nn::constant(a.real);
    Matrix xhat(a.b, g.features);
    for (Eigen::Index i = 0; i < a.b; ++i)
        xhat.row(i) = eps(i) * fake->val.row(i) + (1.0 - eps(i)) * a.real.row(i);
    const Var interp = nn::make_leaf(std::move(xhat), "interp");

    std::vector<const Matrix*> conds3;
    conds3.reserve(a.conds.size() * 3);
    for (int rep = 0; rep < 3; ++rep)
        conds3.insert(conds3.end(), a.conds.begin(), a.conds.end());
    const Var cand = nn::concat_rows(nn::concat_rows(fake, real), interp);
    const Var scores = critic_output(d, conds3, cand);

    const Var d_fake = nn::mean_all(nn::slice_rows(scores, 0, a.b));
    const Var d_real = nn::mean_all(nn::slice_rows(scores, a.b, a.b));
    const Var pen = penalty_from_scores(nn::slice_rows(scores, 2 * a.b, a.b), interp);

    CriticLossGraph out;
    out.loss = nn::add(nn::sub(d_fake, d_real), nn::scalar_mul(pen, hyper.lambda_gp));
    out.wasserstein_gap = d_real->val(0, 0) - d_fake->val(0, 0);
    return out;
}

// Generator objective: -mean D(fake) + eta * mean ||real - fake||_2, with a
// single noise draw shared by both terms.
inline Var generator_loss_graph(const GeneratorParams& g, const DiscriminatorParams& d,
                                const std::vector<const StepSample*>& batch,
                                const CwganHyper& hyper, const Matrix& noise) {
    auto a = detail::assemble(batch, g.features);
    if (noise.rows() != a.b || noise.cols() != g.features)
        throw ContractError("cwgan: noise block must be batch x features");
    const Var fake = generator_output(g, a.conds, nn::constant(noise));
    const Var d_fake = nn::mean_all(critic_output(d, a.conds, fake));
    const Var sup = detail::supervision_term(nn::constant(a.real), fake);
    return nn::add(nn::neg(d_fake), nn::scalar_mul(sup, hyper.eta_sup));
}

struct LossPair {
    double critic = 0.0;
    double generator = 0.0;
};

// Both objectives evaluated on one batch with one shared noise draw.
inline LossPair cwgan_losses(const StepBatch& batch, const GeneratorParams& g,
                             const DiscriminatorParams& d, const CwganHyper& hyper,
                             const Matrix& noise, const Eigen::VectorXd& eps) {
    std::vector<const StepSample*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& s : batch) ptrs.push_back(&s);
    const auto critic = critic_loss_graph(g, d, ptrs, hyper, noise, eps);
    const Var gen = generator_loss_graph(g, d, ptrs, hyper, noise);
    return {critic.loss->val(0, 0), gen->val(0, 0)};
}

// Convenience draw: noise rows first (sample-major), then the epsilons.
inline LossPair cwgan_losses(const StepBatch& batch, const GeneratorParams& g,
                             const DiscriminatorParams& d, const CwganHyper& hyper,
                             Rng& rng) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) throw ContractError("cwgan: empty batch");
    const Matrix noise = detail::draw_noise(rng, b, g.features);
    const Eigen::VectorXd eps = detail::draw_eps(rng, b);
    return cwgan_losses(batch, g, d, hyper, noise, eps);
}

struct TrainingTrace {
    std::vector<double> critic_loss;      // per-epoch mean
    std::vector<double> generator_loss;   // per-epoch mean
    std::vector<double> wasserstein_gap;  // per-epoch mean of D(real) - D(fake)

    std::string summary() const {
        std::ostringstream os;
        os << "epochs=" << critic_loss.size();
        if (!critic_loss.empty()) {
            os << " critic=" << critic_loss.back() << " generator="
               << (generator_loss.empty() ? 0.0 : generator_loss.back())
               << " gap=" << (wasserstein_gap.empty() ? 0.0 : wasserstein_gap.back());
        }
        return os.str();
    }
};

struct CwganBundle {
    GeneratorParams generator;
    DiscriminatorParams discriminator;
    CwganHyper hyper;
    TrainingTrace trace;
};

// Alternating training: critic_steps critic updates per generator update,
// sweeping shuffled minibatches each epoch. Deterministic for a fixed seed.
inline CwganBundle train_cwgan(const data::WindowedDataset& windows,
                               const CwganHyper& hyper) {
    hyper.validate();
    if (windows.samples.empty()) throw DataError("cwgan: no training windows");
    if (std::find(windows.horizons.begin(), windows.horizons.end(), 1) ==
        windows.horizons.end())
        throw DataError("cwgan: training windows need horizon-1 targets");

    const Eigen::Index k = windows.samples.front().window.cols();
    const Eigen::Index m = windows.window_length;

    CwganBundle bundle{GeneratorParams::init(k, m, hash_combine(hyper.seed, 0x9e11ULL)),
                       DiscriminatorParams::init(k, m, hash_combine(hyper.seed, 0xd15cULL)),
                       hyper,
                       {}};

    StepBatch all;
    all.reserve(windows.samples.size());
    for (const auto& s : windows.samples)
        all.push_back({s.window, s.targets.at(1).transpose()});

    nn::Adam opt_g(hyper.learning_rate), opt_d(hyper.learning_rate);
    Rng order_rng(hash_combine(hyper.seed, 0x0bd3ULL));
    Rng noise_rng(hash_combine(hyper.seed, 0x401eULL));

    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        order_rng.shuffle(idx);
        double c_sum = 0.0, g_sum = 0.0, gap_sum = 0.0;
        int c_n = 0, g_n = 0, in_round = 0;
        std::size_t pos = 0;
        std::vector<const StepSample*> batch;
        while (pos < idx.size()) {
            batch.clear();
            while (batch.size() < static_cast<std::size_t>(hyper.batch_size) &&
                   pos < idx.size())
                batch.push_back(&all[idx[pos++]]);
            const auto b = static_cast<Eigen::Index>(batch.size());

            const Matrix noise = detail::draw_noise(noise_rng, b, k);
            const Eigen::VectorXd eps = detail::draw_eps(noise_rng, b);
            const auto critic = critic_loss_graph(bundle.generator, bundle.discriminator,
                                                  batch, hyper, noise, eps);
            const double cv = critic.loss->val(0, 0);
            if (!std::isfinite(cv))
                throw TrainingError("cwgan: critic loss diverged", bundle.trace.summary());
            opt_d.step(bundle.discriminator.store.params,
                       nn::grad(critic.loss, bundle.discriminator.store.params));
            c_sum += cv;
            gap_sum += critic.wasserstein_gap;
            ++c_n;

            if (++in_round == hyper.critic_steps || pos >= idx.size()) {
                const Matrix noise2 = detail::draw_noise(noise_rng, b, k);
                const Var gen = generator_loss_graph(bundle.generator, bundle.discriminator,
                                                     batch, hyper, noise2);
                const double gv = gen->val(0, 0);
                if (!std::isfinite(gv))
                    throw TrainingError("cwgan: generator loss diverged",
                                        bundle.trace.summary());
                opt_g.step(bundle.generator.store.params,
                           nn::grad(gen, bundle.generator.store.params));
                g_sum += gv;
                ++g_n;
                in_round = 0;
            }
        }
        bundle.trace.critic_loss.push_back(c_sum / c_n);
        bundle.trace.generator_loss.push_back(g_n > 0 ? g_sum / g_n : 0.0);
        bundle.trace.wasserstein_gap.push_back(gap_sum / c_n);
    }
    return bundle;
}

inline constexpr std::uint64_t kSynthesisNoiseSalt = 0x6e015eULL;

// Window bookkeeping shared by the real generator and test doubles: per step,
// draw exactly one noise vector, ask `step` for the next row, then slide the
// window (drop oldest, append the produced row).
template <typename StepFn>
inline Matrix recursive_synthesis(StepFn&& step, Matrix window, int steps, Rng& rng,
                                  Eigen::Index features) {
    if (steps < 1) throw ContractError("recursive synthesis: need at least one step");
    if (window.rows() < 1 || window.cols() != features)
        throw ContractError("recursive synthesis: window must be rows x features");
    const Eigen::Index m = window.rows();
    Matrix out(steps, features);
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd z(features);
        for (Eigen::Index j = 0; j < features; ++j) z(j) = rng.normal();
        const Matrix next = step(std::as_const(window), z);
        if (next.rows() != 1 || next.cols() != features)
            throw ContractError("recursive synthesis: step must return 1 x features");
        out.row(s) = next.row(0);
        if (m > 1) window.topRows(m - 1) = window.bottomRows(m - 1).eval();
        window.row(m - 1) = next.row(0);
    }
    return out;
}

// L synthetic rows from the trained generator.
inline Matrix generate_recursive(const GeneratorParams& p, Matrix window, int steps,
                                 std::uint64_t seed) {
    detail::check_condition(window, p.window, p.features, "generate_recursive");
    Rng rng(hash_combine(seed, kSynthesisNoiseSalt));
    return recursive_synthesis(
        [&p](const Matrix& w, const Eigen::VectorXd& z) { return generator_forward(p, w, z); },
        std::move(window), steps, rng, p.features);
}

// Batched synthesis with one independent noise stream per window, so results
// match per-window generate_recursive calls with the same seeds.
inline std::vector<Matrix> generate_recursive_batch(const GeneratorParams& p,
                                                    std::vector<Matrix> windows, int steps,
                                                    const std::vector<std::uint64_t>& seeds) {
    if (steps < 1) throw ContractError("generate_recursive: need at least one step");
    if (windows.empty()) throw ContractError("generate_recursive: empty batch");
    if (seeds.size() != windows.size())
        throw ContractError("generate_recursive: one seed per window");
    for (const auto& w : windows)
        detail::check_condition(w, p.window, p.features, "generate_recursive");

    std::vector<Rng> rngs;
    rngs.reserve(seeds.size());
    for (const auto s : seeds) rngs.emplace_back(hash_combine(s, kSynthesisNoiseSalt));

    const auto b = static_cast<Eigen::Index>(windows.size());
    std::vector<Matrix> outs(windows.size(), Matrix(steps, p.features));
    std::vector<const Matrix*> conds(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) conds[i] = &windows[i];

    for (int s = 0; s < steps; ++s) {
        Matrix noise(b, p.features);
        for (Eigen::Index i = 0; i < b; ++i)
            for (Eigen::Index j = 0; j < p.features; ++j)
                noise(i, j) = rngs[static_cast<std::size_t>(i)].normal();
        const Var next = generator_output(p, conds, nn::constant(std::move(noise)));
        for (Eigen::Index i = 0; i < b; ++i) {
            auto& w = windows[static_cast<std::size_t>(i)];
            outs[static_cast<std::size_t>(i)].row(s) = next->val.row(i);
            if (p.window > 1) w.topRows(p.window - 1) = w.bottomRows(p.window - 1).eval();
            w.row(p.window - 1) = next->val.row(i);
        }
    }
    return outs;
}

}  // namespace genf::cwgan
