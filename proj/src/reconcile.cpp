#include "mfts/reconcile.hpp"

#include <cmath>

namespace mfts {

namespace {

// rows of S holding the bottom block, in column order
std::vector<int> bottom_rows(const SummingMatrix& s) {
    std::vector<int> rows(s.cols.size(), -1);
    for (std::size_t c = 0; c < s.cols.size(); ++c) {
        for (std::size_t r = 0; r < s.rows.size(); ++r)
            if (s.rows[r] == s.cols[c]) {
                rows[c] = static_cast<int>(r);
                break;
            }
        if (rows[c] < 0)
            throw Error("summing matrix has no row for bottom series " + s.cols[c].str());
    }
    return rows;
}

} // namespace

Eigen::MatrixXd reconcile_bu(const Eigen::MatrixXd& base_bottom, const SummingMatrix& s) {
    if (base_bottom.rows() != s.entries.cols())
        throw Error("bottom forecast rows (" + std::to_string(base_bottom.rows()) +
                    ") do not match summing matrix columns (" +
                    std::to_string(s.entries.cols()) + ")");
    return s.entries * base_bottom;
}

Eigen::MatrixXd reconcile_ols(const Eigen::MatrixXd& base_all, const SummingMatrix& s) {
    if (base_all.rows() != s.entries.rows())
        throw Error("base forecast rows do not match summing matrix rows");
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(s.entries);
    // S has full column rank (it embeds an identity block)
    const Eigen::MatrixXd beta = qr.solve(base_all);
    return s.entries * beta;
}

Eigen::MatrixXd reconcile_mint(const Eigen::MatrixXd& base_all, const SummingMatrix& s,
                               const ErrorCovariance& w) {
    if (base_all.rows() != s.entries.rows())
        throw Error("base forecast rows do not match summing matrix rows");
    if (w.W.rows() != s.entries.rows() || w.W.cols() != s.entries.rows())
        throw Error("error covariance dimension does not match the series count");
    const Eigen::LLT<Eigen::MatrixXd> llt(w.W);
    if (llt.info() != Eigen::Success)
        throw Error("error covariance is not positive-definite");
    // whiten by L^-1 and solve the weighted projection as plain least squares
    const Eigen::MatrixXd u = llt.matrixL().solve(s.entries);
    const Eigen::MatrixXd y = llt.matrixL().solve(base_all);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(u);
    const Eigen::MatrixXd beta = qr.solve(y);
    return s.entries * beta;
}

ErrorCovariance shrink_toward_diagonal(const Eigen::MatrixXd& cov, double intensity) {
    ErrorCovariance out;
    out.intensity = intensity;
    out.W = (1.0 - intensity) * cov;
    out.W.diagonal() = cov.diagonal();
    return out;
}

ErrorCovariance estimate_W(const Eigen::MatrixXd& errors) {
    const int t_obs = static_cast<int>(errors.rows());
    const int n = static_cast<int>(errors.cols());
    if (t_obs < 2) throw Error("need at least two error vectors to estimate W");

    // unbiased covariance of zero-mean errors
    const Eigen::MatrixXd cov = errors.transpose() * errors / (t_obs - 1);

    // variance-minimizing intensity: sum of variances of the off-diagonal
    // estimates over the sum of their squares
    double var_sum = 0.0, sq_sum = 0.0;
    const double scale =
        static_cast<double>(t_obs) / ((t_obs - 1.0) * (t_obs - 1.0) * (t_obs - 1.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double wbar = errors.col(i).dot(errors.col(j)) / t_obs;
            double var_ij = 0.0;
            for (int t = 0; t < t_obs; ++t) {
                const double pi = errors(t, i) * errors(t, j);
                var_ij += (pi - wbar) * (pi - wbar);
            }
            var_sum += scale * var_ij;
            sq_sum += cov(i, j) * cov(i, j);
        }
    }
    double intensity = sq_sum > 0.0 ? var_sum / sq_sum : 1.0;
    intensity = std::clamp(intensity, 0.0, 1.0);

    ErrorCovariance out = shrink_toward_diagonal(cov, intensity);

    // the diagonal target can still be degenerate (an all-zero error column,
    // or no shrinkage on a rank-deficient estimate): ridge until factorizable
    const double base = std::max(out.W.diagonal().maxCoeff(), 1e-12);
    for (int i = 0; i < n; ++i)
        if (out.W(i, i) <= 0.0) out.W(i, i) = 1e-12 * base;
    double ridge = 1e-10 * base;
    for (int attempt = 0; attempt < 60; ++attempt) {
        const Eigen::LLT<Eigen::MatrixXd> llt(out.W);
        if (llt.info() == Eigen::Success) return out;
        out.W.diagonal().array() += ridge;
        ridge *= 4.0;
    }
    throw Error("could not regularize the error covariance");
}

Eigen::MatrixXd combine_average(const Eigen::MatrixXd& bu, const Eigen::MatrixXd& ols,
                                const Eigen::MatrixXd& mint) {
    if (bu.rows() != ols.rows() || bu.cols() != ols.cols() || bu.rows() != mint.rows() ||
        bu.cols() != mint.cols())
        throw Error("combine_average inputs differ in shape");
    return (bu + ols + mint) / 3.0;
}

double coherence_residual(const Eigen::MatrixXd& forecasts, const SummingMatrix& s) {
    const std::vector<int> rows = bottom_rows(s);
    Eigen::MatrixXd bottom(s.cols.size(), forecasts.cols());
    for (std::size_t c = 0; c < s.cols.size(); ++c) bottom.row(c) = forecasts.row(rows[c]);
    return (forecasts - s.entries * bottom).cwiseAbs().maxCoeff();
}

} // namespace mfts
