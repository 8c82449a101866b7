#pragma once

#include <Eigen/Dense>

namespace mfts {

/// 5% critical value of the level-stationarity KPSS test.
inline constexpr double kKpssCritical5 = 0.463;

/// Level-stationarity KPSS statistic. The long-run variance uses a Bartlett
/// kernel with `lag_truncation` lags; pass -1 for the floor(4*(n/100)^(1/4))
/// default. A constant series yields 0.
double kpss_statistic(const Eigen::VectorXd& series, int lag_truncation = -1);

/// d-th order difference.
Eigen::VectorXd difference(const Eigen::VectorXd& series, int d);

/// Undoes `difference`: rebuilds the original tail given the d seed values
/// that preceded the differenced block.
Eigen::VectorXd integrate(const Eigen::VectorXd& differenced, const Eigen::VectorXd& seeds);

/// Smallest d <= d_max whose d-times differenced series passes the KPSS test
/// at the 5% level; d_max if none does.
int select_d(const Eigen::VectorXd& series, int d_max = 2);

} // namespace mfts
