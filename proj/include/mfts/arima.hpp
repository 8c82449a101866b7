#pragma once

#include "mfts/kpss.hpp"

#include <Eigen/Dense>

namespace mfts {

struct ArimaSpec {
    int p = 0;
    int d = 0;
    int q = 0;
    bool include_constant = false;
};

struct ArimaOptions {
    /// Nelder-Mead iteration budget per start, scaled by dimension inside.
    int max_iterations = 600;
    double tolerance = 1e-11;
};

/// A fitted ARIMA model. AR and MA polynomials are kept stationary and
/// invertible by construction (coefficients live in a partial-autocorrelation
/// reparameterization during optimization).
struct ArimaFit {
    ArimaSpec spec;
    Eigen::VectorXd ar; // tau_1..tau_p
    Eigen::VectorXd ma; // nu_1..nu_q
    /// Mean of the d-differenced series (0 when the constant is off).
    double mean = 0.0;
    /// Intercept form of the constant: mean * (1 - sum(ar)).
    double constant = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    /// One-step prediction errors on the differenced scale, length n-d.
    Eigen::VectorXd residuals;
    bool near_boundary = false;
    bool fallback = false;
    /// Series the model was fit to (original scale); forecasting needs it.
    Eigen::VectorXd data;
};

/// Exact Gaussian maximum likelihood via the innovations form of the Kalman
/// filter, multi-started from a conditional-sum-of-squares estimate and the
/// zero vector.
ArimaFit fit_arima(const Eigen::VectorXd& series, const ArimaSpec& spec,
                   const ArimaOptions& options = {});

/// KPSS-selected d, then an exhaustive AICc grid over (p, q) and the
/// constant flag (constant allowed only for d <= 1). Ties prefer smaller
/// p+q, then smaller p, then no constant. Falls back to a random walk when
/// every candidate fails.
ArimaFit auto_arima(const Eigen::VectorXd& series, int p_max = 5, int q_max = 5, int d_max = 2,
                    const ArimaOptions& options = {});

/// Conditional-mean point forecasts at horizons 1..h on the original scale.
Eigen::VectorXd forecast_arima(const ArimaFit& fit, int h);

/// In-sample one-step-ahead fitted values on the original scale; the first
/// d entries have no prediction and are NaN.
Eigen::VectorXd fitted_one_step(const ArimaFit& fit);

} // namespace mfts
