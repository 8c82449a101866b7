#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately naive (exhaustive enumeration, classical iterations) so they
// cannot share a failure mode with the library code they check.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

struct LpVertexResult {
    double objective = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x;
    bool feasible = false;
};

// Brute-force solution of min c'x, Ax=b, x>=0 by enumerating every basic
// solution (all column subsets of size rank(A)). Exponential; tiny LPs only.
inline LpVertexResult lp_enumerate_vertices(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                            const Eigen::VectorXd& c) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    LpVertexResult best;

    std::vector<int> pick(m);
    for (int i = 0; i < m; ++i) pick[i] = i;
    const auto advance = [&]() {
        int i = m - 1;
        while (i >= 0 && pick[i] == n - m + i) --i;
        if (i < 0) return false;
        ++pick[i];
        for (int j = i + 1; j < m; ++j) pick[j] = pick[j - 1] + 1;
        return true;
    };

    Eigen::MatrixXd sub(m, m);
    do {
        for (int j = 0; j < m; ++j) sub.col(j) = A.col(pick[j]);
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd xb = lu.solve(b);
        if ((sub * xb - b).cwiseAbs().maxCoeff() > 1e-8) continue;
        if (xb.minCoeff() < -1e-9) continue;
        double obj = 0.0;
        for (int j = 0; j < m; ++j) obj += c[pick[j]] * xb[j];
        if (obj < best.objective) {
            best.objective = obj;
            best.x = Eigen::VectorXd::Zero(n);
            for (int j = 0; j < m; ++j) best.x[pick[j]] = xb[j];
            best.feasible = true;
        }
    } while (advance());
    return best;
}

// All basic feasible solutions attaining the optimal objective (within tol).
inline std::vector<Eigen::VectorXd> lp_enumerate_optimal_set(const Eigen::MatrixXd& A,
                                                             const Eigen::VectorXd& b,
                                                             const Eigen::VectorXd& c,
                                                             double tol = 1e-9) {
    const LpVertexResult best = lp_enumerate_vertices(A, b, c);
    std::vector<Eigen::VectorXd> out;
    if (!best.feasible) return out;
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    std::vector<int> pick(m);
    for (int i = 0; i < m; ++i) pick[i] = i;
    const auto advance = [&]() {
        int i = m - 1;
        while (i >= 0 && pick[i] == n - m + i) --i;
        if (i < 0) return false;
        ++pick[i];
        for (int j = i + 1; j < m; ++j) pick[j] = pick[j - 1] + 1;
        return true;
    };
    Eigen::MatrixXd sub(m, m);
    do {
        for (int j = 0; j < m; ++j) sub.col(j) = A.col(pick[j]);
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd xb = lu.solve(b);
        if ((sub * xb - b).cwiseAbs().maxCoeff() > 1e-8) continue;
        if (xb.minCoeff() < -1e-9) continue;
        double obj = 0.0;
        for (int j = 0; j < m; ++j) obj += c[pick[j]] * xb[j];
        if (obj <= best.objective + tol) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            for (int j = 0; j < m; ++j) x[pick[j]] = xb[j];
            out.push_back(std::move(x));
        }
    } while (advance());
    return out;
}

// Classical cyclic Jacobi eigendecomposition of a symmetric matrix.
// Returns eigenvalues in descending order with matching eigenvector columns.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    const int n = static_cast<int>(a.rows());
    vectors = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cos = 1.0 / std::sqrt(t * t + 1.0);
                const double sin = t * cos;
                Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
                rot(p, p) = cos;
                rot(q, q) = cos;
                rot(p, q) = sin;
                rot(q, p) = -sin;
                a = rot.transpose() * a * rot;
                vectors = vectors * rot;
            }
        }
    }
    values = a.diagonal();
    // sort descending, carrying the eigenvectors along
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) { return values[i] > values[j]; });
    Eigen::VectorXd sorted_values(n);
    Eigen::MatrixXd sorted_vectors(n, n);
    for (int i = 0; i < n; ++i) {
        sorted_values[i] = values[order[i]];
        sorted_vectors.col(i) = vectors.col(order[i]);
    }
    values = sorted_values;
    vectors = sorted_vectors;
}

} // namespace oracle
