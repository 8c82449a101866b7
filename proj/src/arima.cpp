#include "mfts/arima.hpp"

#include "mfts/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace mfts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Durbin-Levinson map from partial autocorrelations in (-1,1) to the AR
// coefficients of a stationary polynomial.
Eigen::VectorXd pacf_to_ar(const Eigen::VectorXd& pacf) {
    const int p = static_cast<int>(pacf.size());
    Eigen::VectorXd phi = pacf;
    Eigen::VectorXd work(p);
    for (int j = 1; j < p; ++j) {
        const double a = phi[j];
        for (int k = 0; k < j; ++k) work[k] = phi[k] - a * phi[j - 1 - k];
        for (int k = 0; k < j; ++k) phi[k] = work[k];
    }
    return phi;
}

// Inverse of pacf_to_ar; returns false when the polynomial is not strictly
// stationary (some |pacf| >= 1).
bool ar_to_pacf(const Eigen::VectorXd& ar, Eigen::VectorXd& pacf) {
    const int p = static_cast<int>(ar.size());
    pacf = ar;
    Eigen::VectorXd work(p);
    for (int j = p - 1; j > 0; --j) {
        const double a = pacf[j];
        const double denom = 1.0 - a * a;
        if (!(std::abs(a) < 1.0)) return false;
        for (int k = 0; k < j; ++k)
            work[k] = (pacf[k] + a * pacf[j - 1 - k]) / denom;
        for (int k = 0; k < j; ++k) pacf[k] = work[k];
    }
    for (int j = 0; j < p; ++j)
        if (!(std::abs(pacf[j]) < 1.0)) return false;
    return true;
}

struct StateSpace {
    Eigen::MatrixXd T;
    Eigen::VectorXd rvec; // moving-average loading of the innovation
    int dim = 0;
};

StateSpace make_state_space(const Eigen::VectorXd& ar, const Eigen::VectorXd& ma) {
    const int p = static_cast<int>(ar.size());
    const int q = static_cast<int>(ma.size());
    StateSpace ss;
    ss.dim = std::max(p, q + 1);
    ss.T = Eigen::MatrixXd::Zero(ss.dim, ss.dim);
    for (int i = 0; i < p; ++i) ss.T(i, 0) = ar[i];
    for (int i = 0; i + 1 < ss.dim; ++i) ss.T(i, i + 1) = 1.0;
    ss.rvec = Eigen::VectorXd::Zero(ss.dim);
    ss.rvec[0] = 1.0;
    for (int i = 0; i < q; ++i) ss.rvec[i + 1] = ma[i];
    return ss;
}

// stationary covariance: P = T P T' + r r'
Eigen::MatrixXd initial_covariance(const StateSpace& ss) {
    const int r = ss.dim;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(r * r, r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            for (int k = 0; k < r; ++k)
                for (int l = 0; l < r; ++l)
                    lhs(i + r * j, k + r * l) -= ss.T(i, k) * ss.T(j, l);
    const Eigen::MatrixXd rr = ss.rvec * ss.rvec.transpose();
    const Eigen::VectorXd vec_rr = Eigen::Map<const Eigen::VectorXd>(rr.data(), r * r);
    const Eigen::VectorXd vec_p = lhs.partialPivLu().solve(vec_rr);
    Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(vec_p.data(), r, r);
    return 0.5 * (p + p.transpose());
}

struct FilterResult {
    double sum_log_f = 0.0;
    double sum_sq = 0.0; // sum v^2 / F
    Eigen::VectorXd innovations;
    Eigen::VectorXd final_state; // one-step-ahead state prediction after the last point
    bool ok = false;
};

// Kalman filter with unit innovation variance; the scale is concentrated out.
FilterResult kalman_filter(const Eigen::VectorXd& w, const StateSpace& ss) {
    const int n = static_cast<int>(w.size());
    const int r = ss.dim;
    FilterResult res;
    res.innovations.resize(n);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(r);
    Eigen::MatrixXd p = initial_covariance(ss);
    if (!p.allFinite()) return res;
    const Eigen::MatrixXd rr = ss.rvec * ss.rvec.transpose();
    for (int t = 0; t < n; ++t) {
        const double f = p(0, 0);
        if (!(f > 1e-12) || !std::isfinite(f)) return res;
        const double v = w[t] - a[0];
        res.innovations[t] = v;
        res.sum_log_f += std::log(f);
        res.sum_sq += v * v / f;
        const Eigen::MatrixXd m = ss.T * p; // r x r
        const Eigen::VectorXd gain = m.col(0) / f;
        a = ss.T * a + gain * v;
        p = m * ss.T.transpose() + rr - m.col(0) * m.col(0).transpose() / f;
        p = 0.5 * (p + p.transpose());
    }
    res.final_state = a;
    res.ok = true;
    return res;
}

// concentrated -2 log likelihood (constants dropped)
double concentrated_neg2ll(const Eigen::VectorXd& w, const Eigen::VectorXd& ar,
                           const Eigen::VectorXd& ma) {
    const StateSpace ss = make_state_space(ar, ma);
    const FilterResult res = kalman_filter(w, ss);
    if (!res.ok) return kInf;
    const int n = static_cast<int>(w.size());
    // variance floor keeps perfectly-fit (constant) series finite
    const double sigma2 = std::max(res.sum_sq / n, 1e-30);
    const double out = n * std::log(sigma2) + res.sum_log_f;
    return std::isfinite(out) ? out : kInf;
}

// deterministic Nelder-Mead; returns the best point visited
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, const Eigen::VectorXd& steps,
                            int max_iter, double tol) {
    const int n = static_cast<int>(x0.size());
    if (n == 0) return x0;
    std::vector<Eigen::VectorXd> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int i = 0; i < n; ++i) xs[i + 1][i] += steps[i];
    for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);

    const auto order = [&]() {
        for (int i = 1; i <= n; ++i) {
            const Eigen::VectorXd x = xs[i];
            const double fx = fs[i];
            int j = i - 1;
            while (j >= 0 && fs[j] > fx) {
                xs[j + 1] = xs[j];
                fs[j + 1] = fs[j];
                --j;
            }
            xs[j + 1] = x;
            fs[j + 1] = fx;
        }
    };
    order();

    for (int iter = 0; iter < max_iter * n; ++iter) {
        if (std::abs(fs[n] - fs[0]) <= tol * (1.0 + std::abs(fs[0]))) break;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= n;

        const Eigen::VectorXd reflected = centroid + (centroid - xs[n]);
        const double fr = f(reflected);
        if (fr < fs[0]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - xs[n]);
            const double fe = f(expanded);
            if (fe < fr) {
                xs[n] = expanded;
                fs[n] = fe;
            } else {
                xs[n] = reflected;
                fs[n] = fr;
            }
        } else if (fr < fs[n - 1]) {
            xs[n] = reflected;
            fs[n] = fr;
        } else {
            const Eigen::VectorXd contracted =
                fr < fs[n] ? centroid + 0.5 * (reflected - centroid)
                           : centroid + 0.5 * (xs[n] - centroid);
            const double fc = f(contracted);
            if (fc < std::min(fr, fs[n])) {
                xs[n] = contracted;
                fs[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                    fs[i] = f(xs[i]);
                }
            }
        }
        order();
    }
    return xs[0];
}

struct ParamCodec {
    int p, q;
    bool constant;

    int dim() const { return p + q + (constant ? 1 : 0); }

    void decode(const Eigen::VectorXd& z, Eigen::VectorXd& ar, Eigen::VectorXd& ma,
                double& mu) const {
        Eigen::VectorXd r_ar(p), r_ma(q);
        for (int i = 0; i < p; ++i) r_ar[i] = std::tanh(z[i]);
        for (int i = 0; i < q; ++i) r_ma[i] = std::tanh(z[p + i]);
        ar = pacf_to_ar(r_ar);
        ma = -pacf_to_ar(r_ma); // sign flip keeps 1 + nu_1 B + ... invertible
        mu = constant ? z[p + q] : 0.0;
    }

    // inverse map; pacf values clamped into the open unit interval
    Eigen::VectorXd encode(const Eigen::VectorXd& ar, const Eigen::VectorXd& ma,
                           double mu) const {
        const auto safe_atanh = [](double r) {
            const double c = std::clamp(r, -0.97, 0.97);
            return 0.5 * std::log((1.0 + c) / (1.0 - c));
        };
        Eigen::VectorXd z(dim());
        Eigen::VectorXd pac;
        if (!ar_to_pacf(ar, pac)) pac = Eigen::VectorXd::Zero(p);
        for (int i = 0; i < p; ++i) z[i] = safe_atanh(pac[i]);
        Eigen::VectorXd mneg = -ma;
        if (!ar_to_pacf(mneg, pac)) pac = Eigen::VectorXd::Zero(q);
        for (int i = 0; i < q; ++i) z[p + i] = safe_atanh(pac[i]);
        if (constant) z[p + q] = mu;
        return z;
    }
};

// Hannan-Rissanen style conditional estimate for the optimizer start
void css_start(const Eigen::VectorXd& w, int p, int q, Eigen::VectorXd& ar,
               Eigen::VectorXd& ma) {
    const int n = static_cast<int>(w.size());
    ar = Eigen::VectorXd::Zero(p);
    ma = Eigen::VectorXd::Zero(q);
    if (p + q == 0) return;

    const Eigen::VectorXd wc = w.array() - w.mean();
    Eigen::VectorXd resid = wc;
    if (q > 0) {
        // long autoregression for proxy residuals
        const int order = std::min(n / 2, std::max(8, p + q + 3));
        if (n - order > order + 2) {
            Eigen::MatrixXd x(n - order, order);
            Eigen::VectorXd y(n - order);
            for (int t = order; t < n; ++t) {
                y[t - order] = wc[t];
                for (int j = 0; j < order; ++j) x(t - order, j) = wc[t - 1 - j];
            }
            const Eigen::VectorXd coef =
                (x.transpose() * x + 1e-8 * Eigen::MatrixXd::Identity(order, order))
                    .ldlt()
                    .solve(x.transpose() * y);
            resid = Eigen::VectorXd::Zero(n);
            for (int t = order; t < n; ++t) {
                double pred = 0.0;
                for (int j = 0; j < order; ++j) pred += coef[j] * wc[t - 1 - j];
                resid[t] = wc[t] - pred;
            }
        }
    }

    const int lag = std::max(p, q);
    if (n - lag <= p + q + 1) return;
    Eigen::MatrixXd x(n - lag, p + q);
    Eigen::VectorXd y(n - lag);
    for (int t = lag; t < n; ++t) {
        y[t - lag] = wc[t];
        for (int j = 0; j < p; ++j) x(t - lag, j) = wc[t - 1 - j];
        for (int j = 0; j < q; ++j) x(t - lag, p + j) = resid[t - 1 - j];
    }
    const Eigen::VectorXd coef =
        (x.transpose() * x + 1e-8 * Eigen::MatrixXd::Identity(p + q, p + q))
            .ldlt()
            .solve(x.transpose() * y);
    ar = coef.head(p);
    ma = coef.tail(q);
}

// smallest root modulus of 1 - c_1 z - ... - c_k z^k via companion matrix
double min_root_modulus(const Eigen::VectorXd& coefs) {
    int k = static_cast<int>(coefs.size());
    while (k > 0 && std::abs(coefs[k - 1]) < 1e-12) --k;
    if (k == 0) return kInf;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) companion(0, i) = coefs[i];
    for (int i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd eigs = companion.eigenvalues();
    double max_abs = 0.0; // roots of the polynomial are reciprocals of these
    for (int i = 0; i < k; ++i) max_abs = std::max(max_abs, std::abs(eigs[i]));
    return max_abs > 0.0 ? 1.0 / max_abs : kInf;
}

} // namespace

ArimaFit fit_arima(const Eigen::VectorXd& series, const ArimaSpec& spec,
                   const ArimaOptions& options) {
    if (spec.p < 0 || spec.d < 0 || spec.q < 0) throw Error("negative ARIMA order");
    const Eigen::VectorXd w = difference(series, spec.d);
    const int nw = static_cast<int>(w.size());
    if (nw <= spec.p + spec.q + 2)
        throw Error("series too short for ARIMA(" + std::to_string(spec.p) + "," +
                    std::to_string(spec.d) + "," + std::to_string(spec.q) + ")");

    const ParamCodec codec{spec.p, spec.q, spec.include_constant};
    const auto objective = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd ar, ma;
        double mu;
        codec.decode(z, ar, ma, mu);
        return concentrated_neg2ll(w.array() - mu, ar, ma);
    };

    Eigen::VectorXd best_z = Eigen::VectorXd::Zero(codec.dim());
    if (codec.dim() > 0) {
        const double sd = std::sqrt((w.array() - w.mean()).square().sum() /
                                    std::max(1, nw - 1));
        Eigen::VectorXd steps = Eigen::VectorXd::Constant(codec.dim(), 0.25);
        if (spec.include_constant)
            steps[codec.dim() - 1] = std::max(0.1 * sd, 1e-4);

        Eigen::VectorXd ar0, ma0;
        css_start(w, spec.p, spec.q, ar0, ma0);
        const double mu0 = spec.include_constant ? w.mean() : 0.0;
        std::vector<Eigen::VectorXd> starts;
        starts.push_back(codec.encode(ar0, ma0, mu0));
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(codec.dim());
        if (spec.include_constant) zero[codec.dim() - 1] = mu0;
        starts.push_back(zero);

        double best_f = kInf;
        for (const auto& start : starts) {
            const Eigen::VectorXd z =
                nelder_mead(objective, start, steps, options.max_iterations,
                            options.tolerance);
            const double fz = objective(z);
            if (fz < best_f) {
                best_f = fz;
                best_z = z;
            }
        }
        if (!std::isfinite(best_f))
            throw Error("ARIMA likelihood optimization failed to converge");
    }

    ArimaFit fit;
    fit.spec = spec;
    codec.decode(best_z, fit.ar, fit.ma, fit.mean);

    const Eigen::VectorXd wc = w.array() - fit.mean;
    const StateSpace ss = make_state_space(fit.ar, fit.ma);
    const FilterResult res = kalman_filter(wc, ss);
    if (!res.ok) throw Error("ARIMA filter failed at the optimum");
    fit.sigma2 = res.sum_sq / nw;
    const double two_pi = 6.283185307179586476925286766559;
    fit.loglik = -0.5 * (nw * std::log(two_pi) +
                         nw * std::log(std::max(fit.sigma2, 1e-30)) + res.sum_log_f + nw);
    const int k = spec.p + spec.q + (spec.include_constant ? 1 : 0) + 1;
    const int denom = nw - k - 1;
    fit.aicc = denom >= 1
                   ? -2.0 * fit.loglik + 2.0 * k + 2.0 * k * (k + 1.0) / denom
                   : kInf;
    fit.residuals = res.innovations;
    fit.constant = fit.mean * (1.0 - fit.ar.sum());
    fit.data = series;
    fit.near_boundary = std::min(min_root_modulus(fit.ar), min_root_modulus(-fit.ma)) < 1.01;
    return fit;
}

ArimaFit auto_arima(const Eigen::VectorXd& series, int p_max, int q_max, int d_max,
                    const ArimaOptions& options) {
    const int d = select_d(series, d_max);
    ArimaFit best;
    bool have_best = false;

    const auto better = [&](const ArimaFit& a, const ArimaFit& b) {
        if (a.aicc < b.aicc - 1e-9) return true;
        if (a.aicc > b.aicc + 1e-9) return false;
        const int sum_a = a.spec.p + a.spec.q, sum_b = b.spec.p + b.spec.q;
        if (sum_a != sum_b) return sum_a < sum_b;
        if (a.spec.p != b.spec.p) return a.spec.p < b.spec.p;
        return !a.spec.include_constant && b.spec.include_constant;
    };

    for (int p = 0; p <= p_max; ++p) {
        for (int q = 0; q <= q_max; ++q) {
            for (int with_constant = 0; with_constant < 2; ++with_constant) {
                if (with_constant && d > 1) continue;
                const ArimaSpec spec{p, d, q, with_constant == 1};
                if (static_cast<int>(series.size()) - d <= p + q + 2) continue;
                try {
                    const ArimaFit fit = fit_arima(series, spec, options);
                    if (!std::isfinite(fit.aicc)) continue;
                    // near-unit-root fits are spurious on short series; the
                    // automatic selection treats them as failed candidates
                    if (fit.near_boundary) continue;
                    if (!have_best || better(fit, best)) {
                        best = fit;
                        have_best = true;
                    }
                } catch (const Error&) {
                    // failed candidates count as infinite AICc
                }
            }
        }
    }
    if (have_best) return best;

    // every candidate failed: random walk fallback
    const ArimaSpec rw{0, std::max(d, 1), 0, false};
    ArimaFit fit = fit_arima(series, rw, options);
    fit.fallback = true;
    return fit;
}

Eigen::VectorXd forecast_arima(const ArimaFit& fit, int h) {
    if (h < 1) throw Error("forecast horizon must be >= 1");
    const Eigen::VectorXd w = difference(fit.data, fit.spec.d);
    const Eigen::VectorXd wc = w.array() - fit.mean;
    const StateSpace ss = make_state_space(fit.ar, fit.ma);
    const FilterResult res = kalman_filter(wc, ss);
    if (!res.ok) throw Error("ARIMA filter failed while forecasting");

    Eigen::VectorXd state = res.final_state;
    Eigen::VectorXd fw(h);
    for (int j = 0; j < h; ++j) {
        fw[j] = state[0] + fit.mean;
        state = ss.T * state;
    }
    if (fit.spec.d == 0) return fw;
    return integrate(fw, fit.data.tail(fit.spec.d));
}

Eigen::VectorXd fitted_one_step(const ArimaFit& fit) {
    const int n = static_cast<int>(fit.data.size());
    Eigen::VectorXd fitted =
        Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < fit.residuals.size(); ++i)
        fitted[i + fit.spec.d] = fit.data[i + fit.spec.d] - fit.residuals[i];
    return fitted;
}

} // namespace mfts
