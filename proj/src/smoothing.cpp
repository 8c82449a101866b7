#include "mfts/smoothing.hpp"

#include "mfts/bspline.hpp"
#include "mfts/csv.hpp"
#include "mfts/lp.hpp"
#include "mfts/parallel.hpp"

#include <cmath>
#include <sstream>

namespace mfts {

double poisson_variance(double m, double N) { return 1.0 / (m * N); }

double poisson_weight(double m, double N) {
    if (!(m > 0.0) || !(N > 0.0)) return 0.0;
    return m * N;
}

SmoothFit smooth_series(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        const std::vector<double>& centers, const SmoothingConfig& cfg) {
    const int m = static_cast<int>(centers.size());
    if (y.size() != m || w.size() != m)
        throw Error("smooth_series: y/w length does not match the age grid");
    if (cfg.tau < 0.0) throw Error("smoothing parameter tau must be >= 0");

    std::vector<int> usable;
    for (int i = 0; i < m; ++i) {
        if (w[i] < 0.0) throw Error("negative smoothing weight");
        if (w[i] > 0.0 && std::isfinite(y[i])) usable.push_back(i);
    }
    const int nb = cfg.basis_knots;
    if (static_cast<int>(usable.size()) < cfg.basis_order + 1)
        throw Error("smooth_series: only " + std::to_string(usable.size()) +
                    " usable points; reduce basis_knots/basis_order");
    if (cfg.tau == 0.0 && static_cast<int>(usable.size()) < nb)
        throw Error("smooth_series: " + std::to_string(usable.size()) +
                    " usable points cannot pin " + std::to_string(nb) +
                    " basis functions with tau=0; reduce basis_knots");

    // weights standardized to mean one so tau is comparable across curves
    double wsum = 0.0;
    for (int i : usable) wsum += w[i];
    const double wscale = wsum / static_cast<double>(usable.size());

    const BSplineBasis basis = BSplineBasis::make(centers, nb, cfg.basis_order);
    const Eigen::MatrixXd B = basis.design(centers);

    Eigen::MatrixXd slope(m - 1, nb); // finite-difference slopes of the fit
    for (int i = 0; i + 1 < m; ++i)
        slope.row(i) = (B.row(i + 1) - B.row(i)) / (centers[i + 1] - centers[i]);

    const int n_pen = cfg.tau > 0.0 ? m - 2 : 0;
    std::vector<int> mono_rows;
    for (int i = 0; i + 1 < m; ++i)
        if (centers[i] >= cfg.monotone_from - 1e-9) mono_rows.push_back(i);

    const int nu = static_cast<int>(usable.size());
    const int nm = static_cast<int>(mono_rows.size());
    // columns: coef+ | coef- | resid+ | resid- | pen+ | pen- | mono slack
    const int n_cols = 2 * nb + 2 * nu + 2 * n_pen + nm;
    const int n_rows = nu + n_pen + nm;

    LpProblem lp;
    lp.A = Eigen::MatrixXd::Zero(n_rows, n_cols);
    lp.b = Eigen::VectorXd::Zero(n_rows);
    lp.c = Eigen::VectorXd::Zero(n_cols);

    int row = 0;
    for (int k = 0; k < nu; ++k, ++row) {
        const int i = usable[k];
        lp.A.block(row, 0, 1, nb) = B.row(i);
        lp.A.block(row, nb, 1, nb) = -B.row(i);
        lp.A(row, 2 * nb + k) = 1.0;
        lp.A(row, 2 * nb + nu + k) = -1.0;
        lp.b[row] = y[i];
        lp.c[2 * nb + k] = w[i] / wscale;
        lp.c[2 * nb + nu + k] = w[i] / wscale;
    }
    for (int i = 0; i < n_pen; ++i, ++row) {
        const Eigen::RowVectorXd pen = slope.row(i + 1) - slope.row(i);
        lp.A.block(row, 0, 1, nb) = pen;
        lp.A.block(row, nb, 1, nb) = -pen;
        lp.A(row, 2 * nb + 2 * nu + i) = 1.0;
        lp.A(row, 2 * nb + 2 * nu + n_pen + i) = -1.0;
        lp.c[2 * nb + 2 * nu + i] = cfg.tau;
        lp.c[2 * nb + 2 * nu + n_pen + i] = cfg.tau;
    }
    for (int k = 0; k < nm; ++k, ++row) {
        const int i = mono_rows[k];
        lp.A.block(row, 0, 1, nb) = slope.row(i);
        lp.A.block(row, nb, 1, nb) = -slope.row(i);
        lp.A(row, 2 * nb + 2 * nu + 2 * n_pen + k) = -1.0;
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal)
        throw Error("smooth_series: LP solve failed (status " +
                    std::to_string(static_cast<int>(sol.status)) + ")");

    const Eigen::VectorXd coef = sol.x.head(nb) - sol.x.segment(nb, nb);
    SmoothFit fit;
    fit.values = B * coef;
    fit.objective = sol.objective * wscale;
    fit.roughness = 0.0;
    const Eigen::VectorXd slopes = slope * coef;
    for (int i = 0; i + 1 < m - 1; ++i)
        fit.roughness += std::abs(slopes[i + 1] - slopes[i]);
    return fit;
}

Eigen::MatrixXd SmoothCurveSet::curve_matrix(int s) const {
    Eigen::MatrixXd out(years.size(), ages.size());
    for (std::size_t t = 0; t < years.size(); ++t)
        for (std::size_t a = 0; a < ages.size(); ++a)
            out(t, a) = values[cell(static_cast<int>(t), s, static_cast<int>(a))];
    return out;
}

void SmoothCurveSet::write_csv(const std::filesystem::path& path) const {
    std::ostringstream out;
    out << "year,age_center,series,log_rate\n";
    for (std::size_t t = 0; t < years.size(); ++t)
        for (std::size_t s = 0; s < series.size(); ++s)
            for (std::size_t a = 0; a < ages.size(); ++a)
                out << years[t] << "," << format_full(ages.centers[a]) << "," << series[s].str()
                    << ","
                    << format_full(values[cell(static_cast<int>(t), static_cast<int>(s),
                                               static_cast<int>(a))])
                    << "\n";
    write_file_atomic(path, out.str());
}

SmoothCurveSet smooth_panel(const MortalityPanel& panel, const SmoothingConfig& cfg,
                            const std::optional<std::vector<int>>& series_filter, int jobs) {
    SmoothCurveSet out;
    out.years = panel.years();
    out.ages = panel.ages();
    if (series_filter) {
        for (int s : *series_filter) out.series.push_back(panel.series()[s]);
    } else {
        out.series = panel.series();
    }
    const std::size_t n_cells = out.years.size() * out.series.size() * out.ages.size();
    out.values.assign(n_cells, 0.0);
    out.weights.assign(n_cells, 0.0);
    out.residual_scale.assign(n_cells, std::numeric_limits<double>::quiet_NaN());

    const int n_ages = static_cast<int>(out.ages.size());
    const std::size_t n_tasks = out.years.size() * out.series.size();

    parallel_for(n_tasks, jobs, [&](std::size_t task) {
        const int t = static_cast<int>(task / out.series.size());
        const int s_out = static_cast<int>(task % out.series.size());
        const int s_panel = panel.series_index(out.series[s_out]);

        Eigen::VectorXd y(n_ages), w(n_ages);
        for (int a = 0; a < n_ages; ++a) {
            double rate = 0.0, exposure = 0.0;
            if (!panel.masked(t, s_panel, a)) {
                rate = panel.rate(t, s_panel, a);
                exposure = panel.exposures(t, s_panel, a);
            }
            const double weight = poisson_weight(rate, exposure);
            w[a] = weight;
            y[a] = weight > 0.0 ? std::log(rate) : std::numeric_limits<double>::quiet_NaN();
        }
        SmoothFit fit;
        try {
            fit = smooth_series(y, w, out.ages.centers, cfg);
        } catch (const Error& e) {
            throw Error("smoothing failed for series " + out.series[s_out].str() + " year " +
                        std::to_string(out.years[t]) + ": " + e.what());
        }
        for (int a = 0; a < n_ages; ++a) {
            const std::size_t idx = out.cell(t, s_out, a);
            out.values[idx] = fit.values[a];
            out.weights[idx] = w[a];
            if (w[a] > 0.0) out.residual_scale[idx] = std::sqrt(1.0 / w[a]);
        }
    });
    return out;
}

} // namespace mfts
