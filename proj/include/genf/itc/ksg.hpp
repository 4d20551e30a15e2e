#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "genf/errors.hpp"

namespace genf::itc {

// Digamma at positive integers via the harmonic-series identity
// psi(n) = -gamma + sum_{j<n} 1/j, tabulated up to n.
inline std::vector<double> digamma_table(std::size_t n) {
    constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
    std::vector<double> psi(n + 1, 0.0);
    if (n >= 1) psi[1] = -kEulerGamma;
    for (std::size_t m = 2; m <= n; ++m)
        psi[m] = psi[m - 1] + 1.0 / static_cast<double>(m - 1);
    return psi;
}

// Kraskov-Stoegbauer-Grassberger mutual information, estimator #1:
//   MI = psi(k) + psi(n) - mean_i [ psi(n_x(i)+1) + psi(n_y(i)+1) ]
// where eps_i is the max-norm distance to the k-th nearest neighbor in the
// joint (x,y) space and n_x(i) counts points with ||x_j - x_i|| strictly
// inside eps_i (likewise n_y). No jitter is added: the k-th order statistic
// takes duplicates as they come and marginal counts use strict inequality,
// so results are bit-reproducible. Clamped below at zero.
inline double ksg_mi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k) {
    const Eigen::Index n = x.rows();
    if (y.rows() != n) throw ContractError("ksg_mi: x and y must have the same sample count");
    if (k < 1) throw ConfigError("ksg_mi: k must be >= 1");
    if (n <= k) throw ConfigError("ksg_mi: needs more than k samples, got n=" +
                                  std::to_string(n) + ", k=" + std::to_string(k));
    if (!x.allFinite() || !y.allFinite()) throw DataError("ksg_mi: inputs contain NaN/Inf");

    const auto nu = static_cast<std::size_t>(n);
    const auto psi = digamma_table(nu);

    std::vector<double> dx(nu), dy(nu), dj(nu), scratch;
    scratch.reserve(nu);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double ddx = (x.row(j) - x.row(i)).cwiseAbs().maxCoeff();
            const double ddy = (y.row(j) - y.row(i)).cwiseAbs().maxCoeff();
            dx[static_cast<std::size_t>(j)] = ddx;
            dy[static_cast<std::size_t>(j)] = ddy;
            dj[static_cast<std::size_t>(j)] = std::max(ddx, ddy);
        }
        scratch.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) scratch.push_back(dj[static_cast<std::size_t>(j)]);
        std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
        const double eps = scratch[static_cast<std::size_t>(k - 1)];

        std::size_t n_x = 0, n_y = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (dx[static_cast<std::size_t>(j)] < eps) ++n_x;
            if (dy[static_cast<std::size_t>(j)] < eps) ++n_y;
        }
        acc += psi[n_x + 1] + psi[n_y + 1];
    }
    const double mi = psi[static_cast<std::size_t>(k)] + psi[nu] - acc / static_cast<double>(n);
    return std::max(0.0, mi);
}

}  // namespace genf::itc
