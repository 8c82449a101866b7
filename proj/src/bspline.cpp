#include "mfts/bspline.hpp"

#include "mfts/error.hpp"

#include <algorithm>
#include <cmath>

namespace mfts {

BSplineBasis BSplineBasis::make(const std::vector<double>& sites, int n_basis, int order) {
    if (sites.size() < 2) throw Error("B-spline basis needs at least two sites");
    if (order < 1) throw Error("B-spline order must be positive");
    if (n_basis < order)
        throw Error("B-spline basis needs at least `order` functions (got " +
                    std::to_string(n_basis) + " with order " + std::to_string(order) + ")");

    BSplineBasis basis;
    basis.n_basis_ = n_basis;
    basis.order_ = order;

    const double lo = sites.front();
    const double hi = sites.back();
    const int n_interior = n_basis - order;
    basis.knots_.assign(order, lo);
    // interior knots at quantiles of the sites, so every basis function has
    // data in its support when the fit uses the same sites
    const int m = static_cast<int>(sites.size());
    for (int j = 1; j <= n_interior; ++j) {
        const double frac = static_cast<double>(j) * (m - 1) / (n_interior + 1);
        const int left = static_cast<int>(std::floor(frac));
        const double w = frac - left;
        const double pos = left + 1 < m ? sites[left] * (1.0 - w) + sites[left + 1] * w
                                        : sites[m - 1];
        basis.knots_.push_back(pos);
    }
    basis.knots_.insert(basis.knots_.end(), order, hi);
    for (std::size_t i = 1; i < basis.knots_.size(); ++i)
        if (basis.knots_[i] < basis.knots_[i - 1])
            throw Error("internal: non-monotone knot vector");
    return basis;
}

Eigen::RowVectorXd BSplineBasis::evaluate(double x) const {
    const int k = order_;
    const int n = n_basis_;
    const double lo = knots_.front(), hi = knots_.back();
    x = std::clamp(x, lo, hi);

    // locate the knot span [knots[span], knots[span+1]) containing x
    int span = k - 1; // first valid span index into knots_
    const int last = n - 1;
    if (x >= hi) {
        span = last;
        // step back over zero-width end spans
        while (span > k - 1 && knots_[span] == knots_[span + 1]) --span;
    } else {
        while (span < last && x >= knots_[span + 1]) ++span;
    }

    // Cox-de Boor recursion for the k nonzero functions on this span
    std::vector<double> vals(k, 0.0), left(k, 0.0), right(k, 0.0);
    vals[0] = 1.0;
    for (int j = 1; j < k; ++j) {
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double den = right[r + 1] + left[j - r];
            const double temp = den != 0.0 ? vals[r] / den : 0.0;
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }

    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
    for (int r = 0; r < k; ++r) {
        const int idx = span - k + 1 + r;
        if (idx >= 0 && idx < n) row[idx] = vals[r];
    }
    return row;
}

Eigen::MatrixXd BSplineBasis::design(const std::vector<double>& points) const {
    Eigen::MatrixXd out(points.size(), n_basis_);
    for (std::size_t i = 0; i < points.size(); ++i) out.row(i) = evaluate(points[i]);
    return out;
}

} // namespace mfts
