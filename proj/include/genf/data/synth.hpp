#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <memory>
#include <string>
#include <vector>

#include "genf/data/types.hpp"
#include "genf/rng.hpp"

namespace genf::data {

// Vector autoregressive process of order p:
//   x_t = sum_{j=1..p} coeffs[j-1] * x_{t-j} + eps_t,  eps_t ~ N(0, sigma^2 I_K)
// Used as a desk-scale data source whose exact conditional mean is available
// in closed form, so forecast bias/variance can be measured against truth.
struct ArProcessSpec {
    std::vector<Eigen::MatrixXd> coeffs;  // p matrices, each K x K
    double noise_sigma = 1.0;
    int k = 1;

    int order() const { return static_cast<int>(coeffs.size()); }

    void validate() const {
        if (coeffs.empty()) throw ConfigError("AR process needs at least one lag matrix");
        if (k < 1) throw ConfigError("AR process needs K >= 1");
        for (const auto& a : coeffs)
            if (a.rows() != k || a.cols() != k)
                throw ConfigError("AR lag matrices must be K x K");
        if (noise_sigma < 0) throw ConfigError("AR noise level must be >= 0");
        if (spectral_radius() >= 1.0 - 1e-9)
            throw ConfigError("AR coefficients are not stationary (companion spectral radius " +
                              std::to_string(spectral_radius()) + " >= 1)");
    }

    // Spectral radius of the companion matrix; < 1 iff the process is stable.
    double spectral_radius() const {
        const int p = order();
        const int kp = k * p;
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(kp, kp);
        for (int j = 0; j < p; ++j) comp.block(0, j * k, k, k) = coeffs[j];
        if (p > 1) comp.block(k, 0, k * (p - 1), k * (p - 1)).setIdentity();
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }

    // Var(x_{t+steps} | history), per feature. Writing the process in
    // companion form, x_{t+s} accumulates the innovations of the s most
    // recent steps through the top-left K x K block A_j of the companion
    // matrix's j-th power, so the conditional covariance is
    // sigma^2 * sum_{j<s} A_j A_j^T; history only shifts the mean.
    Eigen::VectorXd conditional_variance(int steps) const {
        if (steps < 1) throw ContractError("conditional_variance needs steps >= 1");
        const int p = order();
        const int kp = k * p;
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(kp, kp);
        for (int j = 0; j < p; ++j) comp.block(0, j * k, k, k) = coeffs[static_cast<std::size_t>(j)];
        if (p > 1) comp.block(k, 0, k * (p - 1), k * (p - 1)).setIdentity();
        Eigen::MatrixXd power = Eigen::MatrixXd::Identity(kp, kp);
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
        for (int j = 0; j < steps; ++j) {
            const Eigen::MatrixXd a = power.topLeftCorner(k, k);
            acc += a * a.transpose();
            power = comp * power;
        }
        return noise_sigma * noise_sigma * acc.diagonal();
    }

    // E[x_{t+steps} | history]: iterate the noise-free recursion forward from
    // the last p rows of history (rows are time steps, newest last).
    Eigen::VectorXd conditional_mean(const Eigen::MatrixXd& history, int steps) const {
        const int p = order();
        if (history.rows() < p)
            throw ContractError("conditional_mean needs at least p history rows");
        if (steps < 1) throw ContractError("conditional_mean needs steps >= 1");
        std::vector<Eigen::VectorXd> tail;  // newest first
        for (int j = 0; j < p; ++j)
            tail.push_back(history.row(history.rows() - 1 - j).transpose());
        Eigen::VectorXd next(k);
        for (int s = 0; s < steps; ++s) {
            next.setZero();
            for (int j = 0; j < p; ++j) next += coeffs[j] * tail[static_cast<std::size_t>(j)];
            for (int j = p - 1; j > 0; --j) tail[static_cast<std::size_t>(j)] = tail[static_cast<std::size_t>(j - 1)];
            tail[0] = next;
        }
        return next;
    }
};

// Simulate `units` independent draws of length `length` from the process.
// Each unit gets its own deterministic substream of `seed`, and a burn-in
// long enough to forget the zero initial state.
inline TimeSeriesDataset synth_ar_process(const ArProcessSpec& spec, int units, int length,
                                          std::uint64_t seed) {
    spec.validate();
    if (units < 1 || length < 1) throw ConfigError("synth_ar_process needs units, length >= 1");
    const int p = spec.order();
    const int burn_in = 200 + 20 * p;

    TimeSeriesDataset out;
    out.interval_description = "synthetic";
    for (int f = 0; f < spec.k; ++f) out.feature_names.push_back("f" + std::to_string(f));
    out.synth_spec = std::make_shared<ArProcessSpec>(spec);

    int width = 1;
    for (int u = units - 1; u >= 10; u /= 10) ++width;

    for (int u = 0; u < units; ++u) {
        Rng rng(hash_combine(seed, static_cast<std::uint64_t>(u) + 1));
        std::vector<Eigen::VectorXd> tail(static_cast<std::size_t>(p),
                                          Eigen::VectorXd::Zero(spec.k));
        Eigen::MatrixXd values(length, spec.k);
        for (int t = -burn_in; t < length; ++t) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.k);
            for (int j = 0; j < p; ++j) x += spec.coeffs[static_cast<std::size_t>(j)] * tail[static_cast<std::size_t>(j)];
            for (int f = 0; f < spec.k; ++f) x(f) += spec.noise_sigma * rng.normal();
            for (int j = p - 1; j > 0; --j) tail[static_cast<std::size_t>(j)] = tail[static_cast<std::size_t>(j - 1)];
            tail[0] = x;
            if (t >= 0) values.row(t) = x.transpose();
        }
        std::string id = std::to_string(u);
        id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
        out.units.push_back({"u" + id, std::move(values)});
    }
    return out;
}

}  // namespace genf::data
