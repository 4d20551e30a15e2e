#include "catch_amalgamated.hpp"

#include <cmath>
#include <vector>

#include "genf/nn/autodiff.hpp"
#include "genf/nn/layers.hpp"
#include "genf/rng.hpp"
#include "../support/gradcheck.hpp"

using namespace genf::nn;
using genf::Rng;
using genf::test::fd_gradcheck;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = 2.0 * rng.uniform() - 1.0;
    return m;
}

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("dense layer computes x W + b", "[nn]") {
    Rng rng(201ULL);
    ParamStore store;
    Dense fc(store, "fc", 4, 7, rng);
    REQUIRE(store.count() == 4 * 7 + 7);

    auto x = make_leaf(random_matrix(5, 4, rng));
    const Var y = fc(x);
    const Matrix expect =
        x->val * fc.w->val + fc.b->val.replicate(5, 1);
    CHECK((y->val - expect).cwiseAbs().maxCoeff() == 0.0);

    auto build = [&] { return mean_all(square(fc(x))); };
    const auto rep = fd_gradcheck(build, {fc.w, fc.b, x}, rng);
    CHECK(rep.max_err < 1e-6);
}

TEST_CASE("xavier initialization stays within its bound", "[nn]") {
    Rng rng(202ULL);
    const Matrix m = xavier_uniform(20, 30, 20, 30, rng);
    const double limit = std::sqrt(6.0 / 50.0);
    CHECK(m.cwiseAbs().maxCoeff() <= limit);
    CHECK(m.cwiseAbs().maxCoeff() > 0.1 * limit);  // not degenerate
}

TEST_CASE("lstm single-unit steps match scalar formulas", "[nn]") {
    Rng rng(203ULL);
    ParamStore store;
    Lstm cell(store, "lstm", 1, 1, rng);
    REQUIRE(store.count() == 4 + 4 + 4);

    cell.wx->val << 0.2, 0.4, 0.6, 0.8;
    cell.wh->val << 0.1, 0.3, 0.5, 0.7;
    cell.b->val << 0.05, 1.0, -0.1, 0.15;

    const double x1 = 0.5, x2 = -0.3;
    auto s1 = make_leaf(Matrix::Constant(1, 1, x1));
    auto s2 = make_leaf(Matrix::Constant(1, 1, x2));
    const auto hs = cell.forward({s1, s2});
    REQUIRE(hs.size() == 2);

    // step 1 from (h, c) = (0, 0)
    const double i1 = sig(x1 * 0.2 + 0.05);
    const double f1 = sig(x1 * 0.4 + 1.0);
    const double g1 = std::tanh(x1 * 0.6 - 0.1);
    const double o1 = sig(x1 * 0.8 + 0.15);
    const double c1 = i1 * g1;
    const double h1 = o1 * std::tanh(c1);
    CHECK_THAT(hs[0]->val(0, 0), Catch::Matchers::WithinAbs(h1, 1e-15));
    (void)f1;

    // step 2 carries (h1, c1)
    const double i2 = sig(x2 * 0.2 + h1 * 0.1 + 0.05);
    const double f2 = sig(x2 * 0.4 + h1 * 0.3 + 1.0);
    const double g2 = std::tanh(x2 * 0.6 + h1 * 0.5 - 0.1);
    const double o2 = sig(x2 * 0.8 + h1 * 0.7 + 0.15);
    const double c2 = f2 * c1 + i2 * g2;
    const double h2 = o2 * std::tanh(c2);
    CHECK_THAT(hs[1]->val(0, 0), Catch::Matchers::WithinAbs(h2, 1e-15));
}

TEST_CASE("lstm batch equals per-sample runs", "[nn]") {
    Rng rng(204ULL);
    ParamStore store;
    Lstm cell(store, "lstm", 3, 4, rng);

    const int steps = 5;
    std::vector<Matrix> xa, xb;
    for (int t = 0; t < steps; ++t) {
        xa.push_back(random_matrix(1, 3, rng));
        xb.push_back(random_matrix(1, 3, rng));
    }
    std::vector<Var> batch_steps, a_steps, b_steps;
    for (int t = 0; t < steps; ++t) {
        Matrix stacked(2, 3);
        stacked << xa[t], xb[t];
        batch_steps.push_back(constant(stacked));
        a_steps.push_back(constant(xa[t]));
        b_steps.push_back(constant(xb[t]));
    }
    const Var hb = cell.forward(batch_steps).back();
    const Var ha = cell.forward(a_steps).back();
    const Var hbb = cell.forward(b_steps).back();
    CHECK((hb->val.row(0) - ha->val.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((hb->val.row(1) - hbb->val.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lstm gradients match finite differences", "[nn]") {
    Rng rng(205ULL);
    ParamStore store;
    Lstm cell(store, "lstm", 2, 3, rng);
    auto x1 = make_leaf(random_matrix(4, 2, rng));
    auto x2 = make_leaf(random_matrix(4, 2, rng));
    auto x3 = make_leaf(random_matrix(4, 2, rng));
    auto build = [&] {
        const auto hs = cell.forward({x1, x2, x3});
        return mean_all(square(hs.back()));
    };
    const auto rep = fd_gradcheck(build, {cell.wx, cell.wh, cell.b, x1, x2, x3}, rng);
    INFO("worst: analytic " << rep.worst_analytic << " numeric " << rep.worst_numeric);
    CHECK(rep.max_err < 1e-6);
}

TEST_CASE("layer norm standardizes rows and differentiates", "[nn]") {
    Rng rng(206ULL);
    ParamStore store;
    LayerNorm ln(store, "ln", 6);
    auto x = make_leaf(random_matrix(4, 6, rng));
    const Var y = ln(x);
    for (Eigen::Index r = 0; r < 4; ++r) {
        const double mean = y->val.row(r).mean();
        const double var = (y->val.row(r).array() - mean).square().mean();
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 1e-12));
        CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0, 1e-4));  // eps shifts it slightly
    }

    ln.gamma->val = random_matrix(1, 6, rng);
    ln.beta->val = random_matrix(1, 6, rng);
    auto build = [&] { return mean_all(square(ln(x))); };
    const auto rep = fd_gradcheck(build, {x, ln.gamma, ln.beta}, rng);
    CHECK(rep.max_err < 1e-5);
}

TEST_CASE("dropout scales survivors and is deterministic per seed", "[nn]") {
    Rng rng(207ULL);
    auto x = make_leaf(Matrix::Constant(8, 8, 1.0));
    CHECK(dropout(x, 0.5, false, nullptr).get() == x.get());
    CHECK(dropout(x, 0.0, true, nullptr).get() == x.get());

    Rng r1(42ULL), r2(42ULL);
    const Var d1 = dropout(x, 0.5, true, &r1);
    const Var d2 = dropout(x, 0.5, true, &r2);
    CHECK((d1->val - d2->val).cwiseAbs().maxCoeff() == 0.0);
    int zeros = 0, doubled = 0;
    for (Eigen::Index i = 0; i < 8; ++i)
        for (Eigen::Index j = 0; j < 8; ++j) {
            if (d1->val(i, j) == 0.0) ++zeros;
            else if (d1->val(i, j) == 2.0) ++doubled;
        }
    CHECK(zeros + doubled == 64);
    CHECK(zeros > 10);
    CHECK(doubled > 10);
}

TEST_CASE("adam single steps match a scalar reimplementation", "[nn]") {
    ParamStore store;
    const Var p = store.add("p", Matrix::Constant(1, 1, 0.7));
    Adam opt(0.1);

    double m = 0.0, v = 0.0, theta = 0.7;
    for (int t = 1; t <= 3; ++t) {
        const double g = 0.5 * theta;  // gradient of 0.25 theta^2
        opt.step({p}, {constant(Matrix::Constant(1, 1, g))});
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mhat = m / (1.0 - std::pow(0.9, t));
        const double vhat = v / (1.0 - std::pow(0.999, t));
        theta -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
        CHECK_THAT(p->val(0, 0), Catch::Matchers::WithinAbs(theta, 1e-15));
    }
}

TEST_CASE("adam minimizes a quadratic", "[nn]") {
    ParamStore store;
    const Var w = store.add("w", Matrix::Constant(1, 1, -4.0));
    Adam opt(0.05);
    for (int step = 0; step < 2000; ++step) {
        const Var loss = square(scalar_add(w, -3.0));
        const auto gs = grad(loss, store.params);
        opt.step(store.params, gs);
    }
    CHECK_THAT(w->val(0, 0), Catch::Matchers::WithinAbs(3.0, 1e-4));
}
