#include "mfts/group_structure.hpp"
#include "mfts/panel.hpp"
#include "mfts/reconcile.hpp"
#include "mfts/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace mfts;

namespace {

// minimal 3-row summing structure: one total over two bottom series
SummingMatrix toy_matrix() {
    SummingMatrix s;
    s.year = 2000;
    s.rows = {SeriesKey{Level::National, "AUS", Sex::T}, SeriesKey{Level::Area, "A1", Sex::T},
              SeriesKey{Level::Area, "A2", Sex::T}};
    s.cols = {s.rows[1], s.rows[2]};
    s.entries.resize(3, 2);
    s.entries << 1, 1, 1, 0, 0, 1;
    return s;
}

MortalityPanel exposure_panel(const GroupStructure& gs, std::uint64_t seed) {
    AgeGrid grid;
    for (int i = 0; i < 3; ++i) {
        grid.labels.push_back("g" + std::to_string(i));
        grid.centers.push_back(2.0 + 5 * i);
    }
    CounterRng rng(seed);
    const std::size_t nb = gs.bottom.size(), na = grid.size();
    Eigen::MatrixXd deaths(1, nb * na), exposures(1, nb * na);
    for (std::size_t j = 0; j < nb * na; ++j) {
        exposures(0, j) = 100.0 * (1.0 + rng.next_uniform());
        deaths(0, j) = 0.02 * exposures(0, j);
    }
    return MortalityPanel::from_bottom({2000}, grid, gs, deaths, exposures);
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    CounterRng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = 0.05 + 0.02 * rng.next_gaussian();
    return m;
}

} // namespace

TEST_CASE("bottom-up aggregation") {
    SummingMatrix s = toy_matrix();
    s.entries << 0.5, 0.5, 1, 0, 0, 1;
    Eigen::MatrixXd b(2, 1);
    b << 1, 2;
    const Eigen::MatrixXd out = reconcile_bu(b, s);
    CHECK(out(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(out(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(out(2, 0) == doctest::Approx(2.0).epsilon(1e-14));

    CHECK(reconcile_bu(Eigen::MatrixXd::Zero(2, 4), s).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(reconcile_bu(Eigen::MatrixXd::Zero(3, 1), s), Error);
}

TEST_CASE("bottom-up through an exposure matrix is coherent") {
    const GroupStructure gs = GroupStructure::nested(2, 2);
    const auto panel = exposure_panel(gs, 3);
    const SummingMatrix s = build_summing_matrix(panel, 2000);
    const Eigen::MatrixXd b = random_matrix(static_cast<int>(s.cols.size()), 3, 4);
    const Eigen::MatrixXd out = reconcile_bu(b, s);
    CHECK(coherence_residual(out, s) <= 1e-12);
}

TEST_CASE("ols reconciliation reproduces the hand-computed projection") {
    const SummingMatrix s = toy_matrix();
    Eigen::MatrixXd base(3, 1);
    base << 4, 1, 2;
    const Eigen::MatrixXd out = reconcile_ols(base, s);
    CHECK(out(0, 0) == doctest::Approx(11.0 / 3.0).epsilon(1e-10));
    CHECK(out(1, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    CHECK(out(2, 0) == doctest::Approx(7.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("ols is an identity on coherent input and is idempotent") {
    const SummingMatrix s = toy_matrix();
    Eigen::MatrixXd b(2, 2);
    b << 1.0, 0.5, 2.0, 0.25;
    const Eigen::MatrixXd coherent = s.entries * b;
    CHECK((reconcile_ols(coherent, s) - coherent).cwiseAbs().maxCoeff() <= 1e-10);

    Eigen::MatrixXd base = random_matrix(3, 2, 5);
    const Eigen::MatrixXd once = reconcile_ols(base, s);
    const Eigen::MatrixXd twice = reconcile_ols(once, s);
    CHECK((twice - once).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(coherence_residual(once, s) <= 1e-9);
}

TEST_CASE("mint with identity covariance reduces to ols") {
    const SummingMatrix s = toy_matrix();
    const Eigen::MatrixXd base = random_matrix(3, 4, 7);
    ErrorCovariance eye;
    eye.W = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd mint = reconcile_mint(base, s, eye);
    const Eigen::MatrixXd ols = reconcile_ols(base, s);
    CHECK((mint - ols).cwiseAbs().maxCoeff() <= 1e-10);

    // coherent input is unchanged
    Eigen::MatrixXd b(2, 1);
    b << 0.7, 0.3;
    const Eigen::MatrixXd coherent = s.entries * b;
    CHECK((reconcile_mint(coherent, s, eye) - coherent).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("mint with diagonal weights matches the normal-equations oracle") {
    const SummingMatrix s = toy_matrix();
    Eigen::MatrixXd base(3, 1);
    base << 4, 1, 2;
    ErrorCovariance w;
    w.W = Eigen::Vector3d(4.0, 1.0, 1.0).asDiagonal();
    const Eigen::MatrixXd out = reconcile_mint(base, s, w);

    // brute force: beta = (S' W^-1 S)^-1 S' W^-1 y
    const Eigen::MatrixXd winv = w.W.inverse();
    const Eigen::MatrixXd gram = s.entries.transpose() * winv * s.entries;
    const Eigen::VectorXd beta = gram.inverse() * s.entries.transpose() * winv * base.col(0);
    const Eigen::VectorXd expect = s.entries * beta;
    CHECK((out.col(0) - expect).cwiseAbs().maxCoeff() <= 1e-10);
    // hand-solved values for this instance
    CHECK(out(0, 0) == doctest::Approx(10.0 / 3.0).epsilon(1e-10));
    CHECK(out(1, 0) == doctest::Approx(7.0 / 6.0).epsilon(1e-10));
    CHECK(out(2, 0) == doctest::Approx(13.0 / 6.0).epsilon(1e-10));
}

TEST_CASE("shrinkage arithmetic") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.5, 0.5, 1.0;
    const ErrorCovariance out = shrink_toward_diagonal(cov, 0.4);
    CHECK(out.W(0, 0) == 1.0);
    CHECK(out.W(1, 1) == 1.0);
    CHECK(out.W(0, 1) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(out.W(1, 0) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("independent errors in high dimension shrink hard") {
    const int n_series = 177, n_obs = 23;
    CounterRng rng(11);
    Eigen::MatrixXd errors(n_obs, n_series);
    for (int t = 0; t < n_obs; ++t)
        for (int j = 0; j < n_series; ++j)
            errors(t, j) = (0.5 + 0.5 * (j % 3)) * rng.next_gaussian();
    const ErrorCovariance w = estimate_W(errors);
    CHECK(w.intensity >= 0.5);
    const Eigen::LLT<Eigen::MatrixXd> llt(w.W);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("repeated identical errors still give a positive-definite W") {
    Eigen::MatrixXd errors(5, 4);
    for (int t = 0; t < 5; ++t) errors.row(t) << 1.0, -0.5, 0.25, 2.0;
    const ErrorCovariance w = estimate_W(errors);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w.W);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK_THROWS_AS(estimate_W(Eigen::MatrixXd::Zero(1, 4)), Error);
}

TEST_CASE("equal-weight combination") {
    const SummingMatrix s = toy_matrix();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Constant(3, 2, 1.0);
    const Eigen::MatrixXd b = Eigen::MatrixXd::Constant(3, 2, 2.0);
    const Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 2, 3.0);
    CHECK((combine_average(a, a, a) - a).cwiseAbs().maxCoeff() == 0.0);
    CHECK(combine_average(a, b, c)(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(combine_average(a, b, Eigen::MatrixXd::Zero(2, 2)), Error);

    // convex combinations of coherent forecasts stay coherent
    const Eigen::MatrixXd base = random_matrix(3, 2, 13);
    ErrorCovariance eye;
    eye.W = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd bu = reconcile_bu(base.bottomRows(2), s);
    const Eigen::MatrixXd ols = reconcile_ols(base, s);
    const Eigen::MatrixXd mint = reconcile_mint(base, s, eye);
    CHECK(coherence_residual(combine_average(bu, ols, mint), s) <= 1e-10);
}

TEST_CASE("reconciliations are linear in the base forecasts") {
    const GroupStructure gs = GroupStructure::nested(2, 1);
    const auto panel = exposure_panel(gs, 17);
    const SummingMatrix s = build_summing_matrix(panel, 2000);
    const int n = static_cast<int>(s.rows.size());
    const Eigen::MatrixXd x = random_matrix(n, 3, 19);
    const Eigen::MatrixXd y = random_matrix(n, 3, 23);
    const double a = 1.7, b = -0.4;

    ErrorCovariance w;
    {
        CounterRng rng(29);
        Eigen::MatrixXd errors(40, n);
        for (int t = 0; t < 40; ++t)
            for (int j = 0; j < n; ++j) errors(t, j) = rng.next_gaussian();
        w = estimate_W(errors);
    }

    const auto check_linear = [&](auto method) {
        const Eigen::MatrixXd lhs = method(a * x + b * y);
        const Eigen::MatrixXd rhs = a * method(x) + b * method(y);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9);
    };
    check_linear([&](const Eigen::MatrixXd& m) { return reconcile_ols(m, s); });
    check_linear([&](const Eigen::MatrixXd& m) { return reconcile_mint(m, s, w); });
}

TEST_CASE("mint with heavy aggregate weights approaches bottom-up") {
    const GroupStructure gs = GroupStructure::nested(2, 1);
    const auto panel = exposure_panel(gs, 31);
    const SummingMatrix s = build_summing_matrix(panel, 2000);
    const int n = static_cast<int>(s.rows.size());
    const Eigen::MatrixXd base = random_matrix(n, 2, 37);

    ErrorCovariance w;
    w.W = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t r = 0; r < s.rows.size(); ++r) {
        bool is_bottom = false;
        for (const auto& col : s.cols) is_bottom = is_bottom || col == s.rows[r];
        if (!is_bottom) w.W(r, r) = 1e6;
    }

    Eigen::MatrixXd bottom(s.cols.size(), base.cols());
    for (std::size_t c = 0; c < s.cols.size(); ++c) {
        for (std::size_t r = 0; r < s.rows.size(); ++r)
            if (s.rows[r] == s.cols[c]) bottom.row(c) = base.row(r);
    }
    const Eigen::MatrixXd bu = reconcile_bu(bottom, s);
    const Eigen::MatrixXd mint = reconcile_mint(base, s, w);
    CHECK(((mint - bu).cwiseAbs().array() / bu.cwiseAbs().array().max(1e-12)).maxCoeff() <=
          1e-3);
}
