#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mfts {

/// Clamped B-spline basis of a given order on an interval, with interior
/// knots placed at quantiles of the supplied sites.
class BSplineBasis {
  public:
    /// `n_basis` basis functions of order `order` (order 4 = cubic) spanning
    /// [sites.front(), sites.back()].
    static BSplineBasis make(const std::vector<double>& sites, int n_basis, int order);

    int size() const { return n_basis_; }
    int order() const { return order_; }

    /// Row vector of the n_basis values at x (x clamped to the domain).
    Eigen::RowVectorXd evaluate(double x) const;

    /// Collocation matrix: rows are evaluate(points[i]).
    Eigen::MatrixXd design(const std::vector<double>& points) const;

  private:
    int n_basis_ = 0;
    int order_ = 0;
    std::vector<double> knots_; // padded knot vector, length n_basis + order
};

} // namespace mfts
