#include "mfts/lp.hpp"

#include "mfts/error.hpp"

#include <cmath>
#include <vector>

namespace mfts {

namespace {

constexpr double kPivotEps = 1e-9;

struct Tableau {
    Eigen::MatrixXd body; // m x (n_cols + 1), last column is the rhs
    std::vector<int> basis;
    int n_cols;

    double rhs(int i) const { return body(i, n_cols); }

    void pivot(int row, int col) {
        body.row(row) /= body(row, col);
        for (int i = 0; i < body.rows(); ++i) {
            if (i == row) continue;
            const double factor = body(i, col);
            if (factor != 0.0) body.row(i) -= factor * body.row(row);
        }
        basis[row] = col;
    }
};

// One simplex phase over the given cost vector. Columns with allowed[j]
// false never enter the basis. Returns false on iteration-limit.
bool run_phase(Tableau& t, const Eigen::VectorXd& cost, const std::vector<bool>& allowed,
               int max_iter, int& iterations, bool& unbounded) {
    const int m = static_cast<int>(t.body.rows());
    const int n = t.n_cols;
    unbounded = false;

    Eigen::VectorXd reduced(n);
    int stall = 0;
    bool bland = false;
    while (true) {
        if (iterations++ > max_iter) return false;

        // reduced costs r = c - c_B' B^-1 A, recomputed from the tableau
        for (int j = 0; j < n; ++j) {
            double zj = 0.0;
            for (int i = 0; i < m; ++i) zj += cost[t.basis[i]] * t.body(i, j);
            reduced[j] = cost[j] - zj;
        }

        int enter = -1;
        if (bland) {
            for (int j = 0; j < n; ++j)
                if (allowed[j] && reduced[j] < -kPivotEps) {
                    enter = j;
                    break;
                }
        } else {
            double best = -kPivotEps;
            for (int j = 0; j < n; ++j)
                if (allowed[j] && reduced[j] < best) {
                    best = reduced[j];
                    enter = j;
                }
        }
        if (enter < 0) return true; // optimal for this phase

        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            const double a = t.body(i, enter);
            if (a > kPivotEps) {
                const double ratio = t.rhs(i) / a;
                if (leave < 0 || ratio < best_ratio - 1e-12 ||
                    (std::abs(ratio - best_ratio) <= 1e-12 && t.basis[i] < t.basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) {
            unbounded = true;
            return true;
        }
        if (best_ratio < 1e-12) {
            if (++stall > m + 16) bland = true;
        } else {
            stall = 0;
            bland = false;
        }
        t.pivot(leave, enter);
    }
}

} // namespace

LpSolution solve_lp(const LpProblem& problem) {
    const int m = static_cast<int>(problem.A.rows());
    const int n = static_cast<int>(problem.A.cols());
    if (problem.b.size() != m || problem.c.size() != n)
        throw Error("inconsistent LP dimensions");

    LpSolution sol;
    const int total = n + m;

    Tableau t;
    t.n_cols = total;
    t.body.resize(m, total + 1);
    t.body.setZero();
    t.body.block(0, 0, m, n) = problem.A;
    t.body.col(total) = problem.b;
    for (int i = 0; i < m; ++i) {
        if (t.body(i, total) < 0.0) t.body.row(i) = -t.body.row(i);
        t.body(i, n + i) = 1.0;
        t.basis.push_back(n + i);
    }

    const int max_iter = 2000 + 400 * (m + n);
    sol.iterations = 0;

    // phase 1: minimize the sum of artificials
    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(total);
    phase1_cost.tail(m).setOnes();
    std::vector<bool> allow_all(total, true);
    bool unbounded = false;
    if (!run_phase(t, phase1_cost, allow_all, max_iter, sol.iterations, unbounded)) {
        sol.status = LpStatus::IterationLimit;
        return sol;
    }
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
        if (t.basis[i] >= n) infeas += t.rhs(i);
    if (infeas > 1e-7 * (1.0 + problem.b.cwiseAbs().maxCoeff())) {
        sol.status = LpStatus::Infeasible;
        return sol;
    }

    // force remaining artificials out; rows that cannot pivot are redundant
    std::vector<int> keep;
    for (int i = 0; i < m; ++i) {
        if (t.basis[i] < n) {
            keep.push_back(i);
            continue;
        }
        int col = -1;
        for (int j = 0; j < n; ++j)
            if (std::abs(t.body(i, j)) > 1e-7) {
                col = j;
                break;
            }
        if (col >= 0) {
            t.pivot(i, col);
            keep.push_back(i);
        }
    }
    if (static_cast<int>(keep.size()) < m) {
        Eigen::MatrixXd reduced_body(keep.size(), total + 1);
        std::vector<int> reduced_basis;
        for (std::size_t k = 0; k < keep.size(); ++k) {
            reduced_body.row(k) = t.body.row(keep[k]);
            reduced_basis.push_back(t.basis[keep[k]]);
        }
        t.body = std::move(reduced_body);
        t.basis = std::move(reduced_basis);
    }

    // phase 2: original objective, artificial columns locked out
    Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(total);
    phase2_cost.head(n) = problem.c;
    std::vector<bool> allow_original(total, false);
    for (int j = 0; j < n; ++j) allow_original[j] = true;
    if (!run_phase(t, phase2_cost, allow_original, max_iter, sol.iterations, unbounded)) {
        sol.status = LpStatus::IterationLimit;
        return sol;
    }
    if (unbounded) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    sol.x = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < t.basis.size(); ++i)
        if (t.basis[i] < n) sol.x[t.basis[i]] = t.rhs(static_cast<int>(i));
    sol.objective = problem.c.dot(sol.x);
    sol.status = LpStatus::Optimal;
    return sol;
}

} // namespace mfts
