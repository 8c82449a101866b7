#pragma once

#include "mfts/panel.hpp"

#include <Eigen/Dense>

namespace mfts {

/// Covariance of one-step base forecast errors across series, with
/// off-diagonals shrunk toward the diagonal target.
struct ErrorCovariance {
    Eigen::MatrixXd W;
    double intensity = 0.0; // shrinkage weight on the diagonal target
};

/// Aggregates bottom-level forecasts upward: rows of S times the bottom
/// block. `base_bottom` is (bottom series x ages).
Eigen::MatrixXd reconcile_bu(const Eigen::MatrixXd& base_bottom, const SummingMatrix& s);

/// Least-squares projection of all base forecasts onto the coherent
/// subspace, age column by age column, via QR of S.
Eigen::MatrixXd reconcile_ols(const Eigen::MatrixXd& base_all, const SummingMatrix& s);

/// Trace-minimizing projection weighted by the inverse error covariance.
Eigen::MatrixXd reconcile_mint(const Eigen::MatrixXd& base_all, const SummingMatrix& s,
                               const ErrorCovariance& w);

/// Unbiased covariance of error vectors (rows = observations, columns =
/// series; errors are treated as zero-mean) with the closed-form
/// variance-minimizing shrinkage intensity toward the diagonal.
ErrorCovariance estimate_W(const Eigen::MatrixXd& errors);

/// Off-diagonals scaled by (1 - intensity), diagonal kept.
ErrorCovariance shrink_toward_diagonal(const Eigen::MatrixXd& cov, double intensity);

/// Equal-weight average of the three reconciliations.
Eigen::MatrixXd combine_average(const Eigen::MatrixXd& bu, const Eigen::MatrixXd& ols,
                                const Eigen::MatrixXd& mint);

/// Max-abs residual of forecasts against S times their own bottom block.
double coherence_residual(const Eigen::MatrixXd& forecasts, const SummingMatrix& s);

} // namespace mfts
