#ifndef UNLOCK_LINPROG_HPP
#define UNLOCK_LINPROG_HPP

#include <stdexcept>

#include <Eigen/Dense>

namespace unlock {

struct SimplexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Optimal;
    Eigen::VectorXd x;
    double objective = 0.0;
};

// Minimize c'x subject to A x = b, x >= 0 (rows with b < 0 are negated
// internally). Dense two-phase simplex with Bland's rule, so pivoting is
// deterministic and cycling-free; pivot tolerance 1e-9.
LpResult simplex_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, int max_pivots = 20000);

}  // namespace unlock

#endif
