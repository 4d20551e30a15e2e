#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "genf/nn/autodiff.hpp"
#include "genf/rng.hpp"
#include "../support/gradcheck.hpp"

using namespace genf::nn;
using genf::Rng;
using genf::test::fd_gradcheck;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = lo + (hi - lo) * rng.uniform();
    return m;
}

// Values bounded away from zero, for kinked or singular ops.
Matrix random_signed_offset(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) {
            const double mag = 0.2 + 0.8 * rng.uniform();
            m(i, j) = rng.uniform() < 0.5 ? -mag : mag;
        }
    return m;
}

}  // namespace

TEST_CASE("arithmetic ops match finite differences", "[autodiff]") {
    Rng rng(101ULL);
    auto a = make_leaf(random_matrix(3, 4, rng));
    auto b = make_leaf(random_matrix(3, 4, rng));
    auto build = [&] {
        const Var num = cmul(add(a, b), sub(a, neg(b)));
        const Var den = scalar_add(square(b), 2.0);
        return mean_all(scalar_mul(cdiv(num, den), 1.5));
    };
    const auto rep = fd_gradcheck(build, {a, b}, rng);
    INFO("worst: analytic " << rep.worst_analytic << " numeric " << rep.worst_numeric);
    CHECK(rep.max_err < 1e-6);
}

TEST_CASE("matmul and transpose match finite differences", "[autodiff]") {
    Rng rng(102ULL);
    auto a = make_leaf(random_matrix(3, 4, rng));
    auto b = make_leaf(random_matrix(5, 4, rng));
    auto build = [&] { return mean_all(tanh_v(matmul(a, transpose(b)))); };
    const auto rep = fd_gradcheck(build, {a, b}, rng);
    CHECK(rep.max_err < 1e-6);
}

TEST_CASE("elementwise nonlinearities match finite differences", "[autodiff]") {
    Rng rng(103ULL);
    auto x = make_leaf(random_matrix(4, 3, rng));
    auto build = [&] {
        const Var s = sigmoid(x);
        const Var t = tanh_v(x);
        const Var e = exp_v(scalar_mul(x, 0.5));
        const Var l = log_v(scalar_add(square(x), 1.0));
        const Var q = sqrt_v(scalar_add(square(x), 0.5));
        return mean_all(add(add(cmul(s, t), e), cmul(l, q)));
    };
    const auto rep = fd_gradcheck(build, {x}, rng);
    CHECK(rep.max_err < 1e-6);
}

TEST_CASE("relu gradient is exact away from the kink", "[autodiff]") {
    Rng rng(104ULL);
    auto x = make_leaf(random_signed_offset(5, 4, rng));
    auto build = [&] { return sum_all(square(relu(x))); };
    const auto rep = fd_gradcheck(build, {x}, rng);
    CHECK(rep.max_err < 1e-6);

    // Analytic value: d/dx sum(relu(x)^2) = 2x on the active side, 0 elsewhere.
    const Var g = grad(build(), {x})[0];
    for (Eigen::Index i = 0; i < x->rows(); ++i)
        for (Eigen::Index j = 0; j < x->cols(); ++j) {
            const double expect = x->val(i, j) > 0.0 ? 2.0 * x->val(i, j) : 0.0;
            CHECK_THAT(g->val(i, j), Catch::Matchers::WithinAbs(expect, 1e-14));
        }
}

TEST_CASE("reductions and broadcasts match finite differences", "[autodiff]") {
    Rng rng(105ULL);
    const Eigen::Index r = 4, c = 3;
    auto x = make_leaf(random_matrix(r, c, rng));
    auto y = make_leaf(random_matrix(r, c, rng));
    auto s = make_leaf(random_matrix(1, 1, rng));
    auto build = [&] {
        const Var rows = broadcast_col(rowwise_sum(x), c);   // r x c
        const Var cols = broadcast_row(colwise_sum(y), r);   // r x c
        const Var all = broadcast_all(s, r, c);
        return sum_all(cmul(cmul(rows, cols), scalar_add(all, 1.0)));
    };
    const auto rep = fd_gradcheck(build, {x, y, s}, rng);
    CHECK(rep.max_err < 1e-6);
}

TEST_CASE("structural ops route gradients to the right slots", "[autodiff]") {
    Rng rng(106ULL);
    auto x = make_leaf(random_matrix(3, 4, rng));
    auto y = make_leaf(random_matrix(2, 4, rng));
    auto build = [&] {
        const Var z = concat_rows(x, y);                       // 5 x 4
        const Var w = concat_cols(slice_rows(z, 1, 3), slice_rows(z, 2, 3));  // 3 x 8
        const Var p = pad_cols(slice_cols(w, 2, 4), 1, 6);     // 3 x 6
        return mean_all(square(pad_rows(p, 2, 7)));            // 7 x 6
    };
    const auto rep = fd_gradcheck(build, {x, y}, rng);
    CHECK(rep.max_err < 1e-6);
}

TEST_CASE("softmax rows sum to one and differentiate correctly", "[autodiff]") {
    Rng rng(107ULL);
    auto x = make_leaf(random_matrix(4, 5, rng, -3.0, 3.0));
    auto m = make_leaf(random_matrix(4, 5, rng));
    const Var sm = softmax_rows(x);
    for (Eigen::Index i = 0; i < sm->rows(); ++i)
        CHECK_THAT(sm->val.row(i).sum(), Catch::Matchers::WithinAbs(1.0, 1e-12));

    auto build = [&] { return sum_all(cmul(softmax_rows(x), m)); };
    const auto rep = fd_gradcheck(build, {x, m}, rng);
    CHECK(rep.max_err < 1e-5);

    // Max-subtraction keeps huge logits finite.
    auto big = make_leaf(Matrix::Constant(2, 3, 800.0));
    CHECK(softmax_rows(big)->val.allFinite());

    auto bad = make_leaf(Matrix::Constant(1, 2, -std::numeric_limits<double>::infinity()));
    CHECK_THROWS_AS(softmax_rows(bad), genf::ContractError);
}

TEST_CASE("bmm matches a per-block loop for every transpose combination", "[autodiff]") {
    Rng rng(108ULL);
    const Eigen::Index blocks = 3;
    for (const bool ta : {false, true}) {
        for (const bool tb : {false, true}) {
            // Per block: op(A) is 2x4, op(B) is 4x5.
            const Eigen::Index ar = ta ? 4 : 2, ac = ta ? 2 : 4;
            const Eigen::Index br = tb ? 5 : 4, bc = tb ? 4 : 5;
            auto a = make_leaf(random_matrix(blocks * ar, ac, rng));
            auto b = make_leaf(random_matrix(blocks * br, bc, rng));
            const Var out = bmm(a, b, ar, br, ta, tb);
            REQUIRE(out->rows() == blocks * 2);
            REQUIRE(out->cols() == 5);
            for (Eigen::Index i = 0; i < blocks; ++i) {
                Matrix ab = a->val.middleRows(i * ar, ar);
                Matrix bb = b->val.middleRows(i * br, br);
                if (ta) ab = ab.transpose().eval();
                if (tb) bb = bb.transpose().eval();
                const Matrix expect = ab * bb;
                CHECK((out->val.middleRows(i * 2, 2) - expect).cwiseAbs().maxCoeff() < 1e-14);
            }
            auto build = [&] { return mean_all(square(bmm(a, b, ar, br, ta, tb))); };
            const auto rep = fd_gradcheck(build, {a, b}, rng);
            INFO("ta=" << ta << " tb=" << tb);
            CHECK(rep.max_err < 1e-6);
        }
    }
}

TEST_CASE("linear regression gradient matches the closed form", "[autodiff]") {
    Rng rng(109ULL);
    auto x = make_leaf(random_matrix(6, 3, rng));
    auto w = make_leaf(random_matrix(3, 1, rng));
    auto t = make_leaf(random_matrix(6, 1, rng));
    const Var resid = sub(matmul(x, w), t);
    const Var loss = sum_all(square(resid));
    const Var gw = grad(loss, {w})[0];
    const Matrix expect = 2.0 * x->val.transpose() * (x->val * w->val - t->val);
    CHECK((gw->val - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient accumulates across fan-out", "[autodiff]") {
    auto x = make_leaf(Matrix::Constant(2, 2, 3.0));
    const Var y = add(x, x);
    const Var g = grad(sum_all(y), {x})[0];
    CHECK((g->val.array() == 2.0).all());
}

TEST_CASE("grad with explicit seed and non-scalar root", "[autodiff]") {
    Rng rng(110ULL);
    auto x = make_leaf(random_matrix(3, 2, rng));
    const Var y = cmul(x, x);
    CHECK_THROWS_AS(grad(y, {x}), genf::ContractError);
    const Var g = grad(y, {x}, constant(Matrix::Ones(3, 2)))[0];
    CHECK((g->val - 2.0 * x->val).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("unreached targets get zero gradients", "[autodiff]") {
    Rng rng(111ULL);
    auto x = make_leaf(random_matrix(2, 2, rng));
    auto unused = make_leaf(random_matrix(4, 3, rng));
    const Var loss = sum_all(square(x));
    const auto gs = grad(loss, {x, unused});
    CHECK(gs[0]->val.cwiseAbs().maxCoeff() > 0.0);
    CHECK(gs[1]->rows() == 4);
    CHECK(gs[1]->cols() == 3);
    CHECK(gs[1]->val.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("second-order gradients via grad of grad", "[autodiff]") {
    Rng rng(112ULL);
    auto x = make_leaf(random_signed_offset(5, 1, rng));

    // y = sum x^3, dy/dx = 3x^2
    const Var y = sum_all(cmul(cmul(x, x), x));
    const Var g = grad(y, {x})[0];
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK_THAT(g->val(i, 0),
                   Catch::Matchers::WithinRel(3.0 * x->val(i, 0) * x->val(i, 0), 1e-12));

    // loss = sum (dy/dx)^2 = 9 sum x^4, dloss/dx = 36 x^3
    const Var loss2 = sum_all(square(g));
    const Var g2 = grad(loss2, {x})[0];
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK_THAT(g2->val(i, 0),
                   Catch::Matchers::WithinRel(36.0 * std::pow(x->val(i, 0), 3.0), 1e-12));

    // d(sum dy/dx)/dx = 6x
    const Var g3 = grad(sum_all(g), {x})[0];
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK_THAT(g3->val(i, 0), Catch::Matchers::WithinRel(6.0 * x->val(i, 0), 1e-12));
}

TEST_CASE("second-order mixed derivative matches finite differences", "[autodiff]") {
    // The shape of the critic's gradient penalty: an inner gradient norm that
    // is then differentiated with respect to a different tensor.
    Rng rng(113ULL);
    auto x = make_leaf(random_matrix(4, 3, rng));
    auto w = make_leaf(random_matrix(3, 2, rng));
    auto build = [&] {
        const Var f = sum_all(square(tanh_v(matmul(x, w))));
        const Var gx = grad(f, {x})[0];
        return mean_all(square(gx));
    };
    const auto rep = fd_gradcheck(build, {w, x}, rng);
    INFO("worst: analytic " << rep.worst_analytic << " numeric " << rep.worst_numeric);
    CHECK(rep.max_err < 1e-4);
}

TEST_CASE("shape contracts are enforced", "[autodiff]") {
    auto a = make_leaf(Matrix::Zero(2, 3));
    auto b = make_leaf(Matrix::Zero(3, 2));
    CHECK_THROWS_AS(add(a, b), genf::ContractError);
    CHECK_THROWS_AS(cmul(a, b), genf::ContractError);
    CHECK_THROWS_AS(matmul(a, a), genf::ContractError);
    CHECK_THROWS_AS(broadcast_col(a, 5), genf::ContractError);
    CHECK_THROWS_AS(broadcast_row(b, 5), genf::ContractError);
    CHECK_THROWS_AS(slice_rows(a, 1, 4), genf::ContractError);
    CHECK_THROWS_AS(slice_cols(a, 2, 2), genf::ContractError);
    CHECK_THROWS_AS(bmm(a, b, 2, 2, false, false), genf::ContractError);
}
