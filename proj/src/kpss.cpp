#include "mfts/kpss.hpp"

#include "mfts/error.hpp"

#include <cmath>

namespace mfts {

double kpss_statistic(const Eigen::VectorXd& series, int lag_truncation) {
    const int n = static_cast<int>(series.size());
    if (n < 8) throw Error("KPSS needs at least 8 observations");
    const int l = lag_truncation >= 0
                      ? lag_truncation
                      : static_cast<int>(std::floor(4.0 * std::pow(n / 100.0, 0.25)));

    const Eigen::VectorXd e = series.array() - series.mean();
    double cumsum = 0.0, numerator = 0.0;
    for (int t = 0; t < n; ++t) {
        cumsum += e[t];
        numerator += cumsum * cumsum;
    }
    numerator /= static_cast<double>(n) * n;

    // Bartlett-weighted long-run variance
    double s2 = e.squaredNorm() / n;
    for (int j = 1; j <= l && j < n; ++j) {
        double gamma = 0.0;
        for (int t = 0; t + j < n; ++t) gamma += e[t] * e[t + j];
        gamma /= n;
        s2 += 2.0 * (1.0 - static_cast<double>(j) / (l + 1)) * gamma;
    }
    if (s2 <= 1e-300) return 0.0; // constant series
    return numerator / s2;
}

Eigen::VectorXd difference(const Eigen::VectorXd& series, int d) {
    Eigen::VectorXd out = series;
    for (int round = 0; round < d; ++round) {
        if (out.size() < 2) throw Error("series too short to difference");
        Eigen::VectorXd next(out.size() - 1);
        for (int t = 0; t + 1 < out.size(); ++t) next[t] = out[t + 1] - out[t];
        out = std::move(next);
    }
    return out;
}

Eigen::VectorXd integrate(const Eigen::VectorXd& differenced, const Eigen::VectorXd& seeds) {
    const int d = static_cast<int>(seeds.size());
    // lasts[j] = most recent value of the j-times differenced series
    std::vector<double> lasts(d);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd diffs = difference(seeds, j);
        lasts[j] = diffs[diffs.size() - 1];
    }
    Eigen::VectorXd out(differenced.size());
    for (int i = 0; i < differenced.size(); ++i) {
        double value = differenced[i];
        for (int j = d - 1; j >= 0; --j) {
            value += lasts[j];
            lasts[j] = value;
        }
        out[i] = value;
    }
    return out;
}

int select_d(const Eigen::VectorXd& series, int d_max) {
    for (int d = 0; d <= d_max; ++d) {
        const Eigen::VectorXd w = difference(series, d);
        if (kpss_statistic(w) < kKpssCritical5) return d;
    }
    return d_max;
}

} // namespace mfts
