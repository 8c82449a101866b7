#pragma once

#include <Eigen/Dense>

namespace mfts {

/// Linear program in standard form: minimize c'x subject to A x = b, x >= 0.
struct LpProblem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

/// Dense two-phase primal simplex. Dantzig pricing with lowest-index
/// tie-breaks, falling back to Bland's rule when stalling, so the returned
/// vertex is deterministic.
LpSolution solve_lp(const LpProblem& problem);

} // namespace mfts
