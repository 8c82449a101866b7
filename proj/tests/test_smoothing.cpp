#include "mfts/bspline.hpp"
#include "mfts/group_structure.hpp"
#include "mfts/lp.hpp"
#include "mfts/panel.hpp"
#include "mfts/rng.hpp"
#include "mfts/smoothing.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mfts;

namespace {

std::vector<double> default_centers() { return AgeGrid::five_year_default().centers; }

double weighted_l1_objective(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             const Eigen::VectorXd& fit) {
    double obj = 0.0;
    for (int i = 0; i < y.size(); ++i)
        if (w[i] > 0.0) obj += w[i] * std::abs(y[i] - fit[i]);
    return obj;
}

} // namespace

TEST_CASE("poisson variance of a log rate") {
    CHECK(poisson_variance(0.01, 10000.0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(poisson_variance(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(poisson_variance(0.05, 2000.0) == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(poisson_weight(0.01, 10000.0) == doctest::Approx(100.0).epsilon(1e-14));
    // unusable cells become weight zero, not exceptions
    CHECK(poisson_weight(0.0, 100.0) == 0.0);
    CHECK(poisson_weight(-0.1, 100.0) == 0.0);
    CHECK(poisson_weight(0.1, 0.0) == 0.0);
}

TEST_CASE("B-spline basis partitions unity and interpolates at full rank") {
    const auto centers = default_centers();
    const BSplineBasis basis = BSplineBasis::make(centers, 18, 4);
    const Eigen::MatrixXd B = basis.design(centers);
    for (int i = 0; i < B.rows(); ++i)
        CHECK(B.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    // square collocation matrix is invertible (Schoenberg-Whitney holds)
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    CHECK(lu.isInvertible());
}

TEST_CASE("simplex solves a textbook LP") {
    // max x+y st x+2y<=4, 3x+y<=6  ->  min -x-y with slacks
    LpProblem p;
    p.A.resize(2, 4);
    p.A << 1, 2, 1, 0, 3, 1, 0, 1;
    p.b.resize(2);
    p.b << 4, 6;
    p.c.resize(4);
    p.c << -1, -1, 0, 0;
    const LpSolution sol = solve_lp(p);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.x[0] == doctest::Approx(1.6).epsilon(1e-9));
    CHECK(sol.x[1] == doctest::Approx(1.2).epsilon(1e-9));
    CHECK(sol.objective == doctest::Approx(-2.8).epsilon(1e-9));
}

TEST_CASE("simplex flags infeasible and unbounded problems") {
    LpProblem infeasible;
    infeasible.A.resize(2, 1);
    infeasible.A << 1, 1;
    infeasible.b.resize(2);
    infeasible.b << 1, 2;
    infeasible.c.resize(1);
    infeasible.c << 0;
    CHECK(solve_lp(infeasible).status == LpStatus::Infeasible);

    LpProblem unbounded; // min -x st x - s = 0
    unbounded.A.resize(1, 2);
    unbounded.A << 1, -1;
    unbounded.b.resize(1);
    unbounded.b << 0;
    unbounded.c.resize(2);
    unbounded.c << -1, 0;
    CHECK(solve_lp(unbounded).status == LpStatus::Unbounded);
}

TEST_CASE("simplex agrees with vertex enumeration on random small LPs") {
    CounterRng rng(2024);
    for (int rep = 0; rep < 25; ++rep) {
        const int m = 3, n = 7;
        LpProblem p;
        p.A.resize(m, n);
        p.b.resize(m);
        p.c.resize(n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) p.A(i, j) = std::round(10.0 * (rng.next_uniform() - 0.3));
        Eigen::VectorXd x0(n);
        for (int j = 0; j < n; ++j) x0[j] = rng.next_uniform(); // ensures feasibility
        p.b = p.A * x0;
        for (int j = 0; j < n; ++j) p.c[j] = std::round(5.0 * rng.next_uniform()) + 0.5;
        const auto ours = solve_lp(p);
        const auto ref = oracle::lp_enumerate_vertices(p.A, p.b, p.c);
        REQUIRE(ref.feasible);
        REQUIRE(ours.status == LpStatus::Optimal);
        CHECK(ours.objective == doctest::Approx(ref.objective).epsilon(1e-7));
    }
}

TEST_CASE("constant input is a fixpoint of the smoother") {
    const auto centers = default_centers();
    const int m = static_cast<int>(centers.size());
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(m, -3.5);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 2.0);
    for (double tau : {0.0, 1.0, 10.0}) {
        SmoothingConfig cfg;
        cfg.tau = tau;
        const SmoothFit fit = smooth_series(y, w, centers, cfg);
        CHECK((fit.values.array() + 3.5).abs().maxCoeff() <= 1e-8);
        CHECK(fit.objective <= 1e-8);
    }
}

TEST_CASE("monotone constraint binds above the threshold") {
    const auto centers = default_centers();
    const int m = static_cast<int>(centers.size());
    CounterRng rng(5);
    Eigen::VectorXd y(m), w = Eigen::VectorXd::Constant(m, 1.0);
    // strictly decreasing curve, including above age 65
    for (int i = 0; i < m; ++i) y[i] = 2.0 - 0.25 * i + 0.01 * rng.next_gaussian();

    SmoothingConfig cfg;
    const SmoothFit fit = smooth_series(y, w, centers, cfg);
    for (int i = 0; i + 1 < m; ++i)
        if (centers[i] >= cfg.monotone_from)
            CHECK(fit.values[i + 1] - fit.values[i] >= -1e-9);

    // same data without the constraint keeps decreasing
    cfg.monotone_from = std::numeric_limits<double>::infinity();
    const SmoothFit free_fit = smooth_series(y, w, centers, cfg);
    CHECK(free_fit.values[m - 1] < free_fit.values[m - 2]);
}

TEST_CASE("property: monotone above threshold for random inputs") {
    const auto centers = default_centers();
    const int m = static_cast<int>(centers.size());
    CounterRng rng(77);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd y(m), w(m);
        for (int i = 0; i < m; ++i) {
            y[i] = 3.0 * rng.next_gaussian();
            w[i] = 0.25 + rng.next_uniform();
        }
        SmoothingConfig cfg;
        cfg.tau = rep % 2 == 0 ? 0.5 : 2.0;
        const SmoothFit fit = smooth_series(y, w, centers, cfg);
        double min_diff = 0.0;
        for (int i = 0; i + 1 < m; ++i)
            if (centers[i] >= cfg.monotone_from)
                min_diff = std::min(min_diff, fit.values[i + 1] - fit.values[i]);
        CHECK(min_diff >= -1e-9);
    }
}

TEST_CASE("tau=0 with knots at all grid points interpolates the data") {
    const auto centers = default_centers();
    const int m = static_cast<int>(centers.size());
    CounterRng rng(11);
    Eigen::VectorXd y(m), w(m);
    for (int i = 0; i < m; ++i) {
        y[i] = rng.next_gaussian();
        w[i] = 0.5 + rng.next_uniform();
    }
    SmoothingConfig cfg;
    cfg.tau = 0.0;
    cfg.monotone_from = std::numeric_limits<double>::infinity();
    const SmoothFit fit = smooth_series(y, w, centers, cfg);
    CHECK((fit.values - y).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("tau=0 restricted-basis fit matches the LP vertex-enumeration oracle") {
    // 6-point weighted L1 regression onto a 3-function linear spline basis
    const std::vector<double> centers = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    Eigen::VectorXd y(6), w(6);
    y << 1.0, 2.7, 2.1, 4.9, 4.2, 6.3;
    w << 1.3, 2.1, 0.7, 1.1, 2.4, 0.9;

    SmoothingConfig cfg;
    cfg.tau = 0.0;
    cfg.monotone_from = std::numeric_limits<double>::infinity();
    cfg.basis_knots = 3;
    cfg.basis_order = 2;
    const SmoothFit fit = smooth_series(y, w, centers, cfg);

    // independent formulation: min sum w|r| st B c + r+ - r- = y
    const BSplineBasis basis = BSplineBasis::make(centers, 3, 2);
    const Eigen::MatrixXd B = basis.design(centers);
    Eigen::MatrixXd A(6, 3 * 2 + 12);
    A.setZero();
    A.block(0, 0, 6, 3) = B;
    A.block(0, 3, 6, 3) = -B;
    for (int i = 0; i < 6; ++i) {
        A(i, 6 + i) = 1.0;
        A(i, 12 + i) = -1.0;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(18);
    for (int i = 0; i < 6; ++i) c[6 + i] = c[12 + i] = w[i];
    const auto ref = oracle::lp_enumerate_vertices(A, y, c);
    REQUIRE(ref.feasible);

    const double ours = weighted_l1_objective(y, w, fit.values);
    CHECK(ours == doctest::Approx(ref.objective).epsilon(1e-6));

    // the instance must have a unique optimal fit for the value comparison
    const auto optimal = oracle::lp_enumerate_optimal_set(A, y, c);
    REQUIRE(!optimal.empty());
    Eigen::VectorXd lo = B * (optimal.front().head(3) - optimal.front().segment(3, 3));
    Eigen::VectorXd hi = lo;
    for (const auto& x : optimal) {
        const Eigen::VectorXd f = B * (x.head(3) - x.segment(3, 3));
        lo = lo.cwiseMin(f);
        hi = hi.cwiseMax(f);
    }
    REQUIRE((hi - lo).maxCoeff() <= 1e-9); // sanity: unique optimum
    CHECK((fit.values - lo).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("uniform weight scaling leaves the fit unchanged") {
    const auto centers = default_centers();
    const int m = static_cast<int>(centers.size());
    CounterRng rng(13);
    Eigen::VectorXd y(m), w(m);
    for (int i = 0; i < m; ++i) {
        y[i] = -4.0 + 0.05 * i + 0.3 * rng.next_gaussian();
        w[i] = 1.0 + rng.next_uniform();
    }
    SmoothingConfig cfg;
    const SmoothFit a = smooth_series(y, w, centers, cfg);
    const SmoothFit b = smooth_series(y, 1000.0 * w, centers, cfg);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("roughness of the fit is non-increasing in tau") {
    const auto centers = default_centers();
    const int m = static_cast<int>(centers.size());
    CounterRng rng(21);
    Eigen::VectorXd y(m), w = Eigen::VectorXd::Constant(m, 1.0);
    for (int i = 0; i < m; ++i) y[i] = std::sin(0.7 * i) + 0.5 * rng.next_gaussian();

    double last = std::numeric_limits<double>::infinity();
    for (double tau : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        SmoothingConfig cfg;
        cfg.tau = tau;
        cfg.monotone_from = std::numeric_limits<double>::infinity();
        const SmoothFit fit = smooth_series(y, w, centers, cfg);
        CHECK(fit.roughness <= last + 1e-7);
        last = fit.roughness;
    }
}

TEST_CASE("too few usable points is an error naming the remedy") {
    const auto centers = default_centers();
    const int m = static_cast<int>(centers.size());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < 4; ++i) w[i] = 1.0; // only 4 usable < order+1
    SmoothingConfig cfg;
    CHECK_THROWS_WITH_AS(smooth_series(y, w, centers, cfg), doctest::Contains("basis"), Error);
}

TEST_CASE("smooth_panel fills masked cells and ignores exposure scaling") {
    const GroupStructure gs = GroupStructure::nested(1, 0); // sexes only
    AgeGrid grid = AgeGrid::five_year_default();
    const std::size_t na = grid.size();
    const std::size_t nb = gs.bottom.size();
    const int n_years = 3;
    Eigen::MatrixXd deaths(n_years, nb * na), exposures(n_years, nb * na);
    CounterRng rng(31);
    for (int t = 0; t < n_years; ++t)
        for (std::size_t b = 0; b < nb; ++b)
            for (std::size_t a = 0; a < na; ++a) {
                const double rate = std::exp(-5.0 + 0.03 * a + 0.05 * rng.next_gaussian());
                exposures(t, b * na + a) = 1e5;
                deaths(t, b * na + a) = rate * 1e5;
            }
    // one missing cell
    deaths(1, 3) = std::numeric_limits<double>::quiet_NaN();

    const std::vector<int> years = {2000, 2001, 2002};
    const auto panel = MortalityPanel::from_bottom(years, grid, gs, deaths, exposures);
    SmoothingConfig cfg;
    const SmoothCurveSet curves = smooth_panel(panel, cfg);
    for (double v : curves.values) CHECK(std::isfinite(v));

    // doubling D and E together keeps rates and doubles weights: same curves
    const auto panel2 =
        MortalityPanel::from_bottom(years, grid, gs, 2.0 * deaths, 2.0 * exposures);
    const SmoothCurveSet curves2 = smooth_panel(panel2, cfg);
    for (std::size_t i = 0; i < curves.values.size(); ++i)
        CHECK(std::abs(curves.values[i] - curves2.values[i]) <= 1e-8);
}
