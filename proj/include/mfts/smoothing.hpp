#pragma once

#include "mfts/age_grid.hpp"
#include "mfts/panel.hpp"
#include "mfts/series_key.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

namespace mfts {

struct SmoothingConfig {
    /// Weight of the roughness penalty, applied to weights standardized to
    /// mean one.
    double tau = 1.0;
    /// Age from which fitted curves must be non-decreasing; +inf disables.
    double monotone_from = 65.0;
    /// Number of B-spline basis functions (default: one per age group).
    int basis_knots = 18;
    /// Spline order; 4 is cubic.
    int basis_order = 4;
};

/// Approximate variance of an observed log central mortality rate with rate
/// m and exposure N: 1 / (m N).
double poisson_variance(double m, double N);

/// Inverse-variance weight m * N; cells with m <= 0 or N <= 0 get weight 0
/// and are treated as missing.
double poisson_weight(double m, double N);

struct SmoothFit {
    Eigen::VectorXd values; // fitted log rates on the full grid
    double objective = 0.0;
    double roughness = 0.0; // L1 norm of slope differences of the fit
};

/// Weighted L1 spline fit with an L1 roughness penalty on slope changes and
/// a non-decreasing constraint from cfg.monotone_from upward. Missing cells
/// carry weight 0; the fit is still evaluated there.
SmoothFit smooth_series(const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                        const std::vector<double>& centers, const SmoothingConfig& cfg);

/// Smoothed log-mortality curves for a panel, one curve per (series, year).
struct SmoothCurveSet {
    std::vector<int> years;
    std::vector<SeriesKey> series;
    AgeGrid ages;
    // dense [year][series][age]
    std::vector<double> values;
    std::vector<double> weights;
    std::vector<double> residual_scale;

    std::size_t cell(int t, int s, int a) const {
        return (static_cast<std::size_t>(t) * series.size() + s) * ages.size() + a;
    }
    double value(int t, int s, int a) const { return values[cell(t, s, a)]; }

    /// Curve matrix (years x ages) of one series.
    Eigen::MatrixXd curve_matrix(int s) const;

    void write_csv(const std::filesystem::path& path) const;
};

SmoothCurveSet smooth_panel(const MortalityPanel& panel, const SmoothingConfig& cfg,
                            const std::optional<std::vector<int>>& series_filter = std::nullopt,
                            int jobs = 1);

} // namespace mfts
