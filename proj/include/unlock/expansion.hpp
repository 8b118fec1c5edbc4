#ifndef UNLOCK_EXPANSION_HPP
#define UNLOCK_EXPANSION_HPP

#include <vector>

#include <Eigen/Dense>

#include "unlock/framework.hpp"
#include "unlock/geometry.hpp"

namespace unlock {

struct QpInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct QpMaxIters : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleAfterRetries : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct QpDidNotConverge : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NewtonDidNotConverge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExpansionParams {
    double eta = 0.1;            // strut expansion demand scale, > 0
    double barrier_weight = 0.0; // 0 disables the barrier mode
    double qp_tol = 1e-9;
    int max_qp_iters = 1000;
    int max_eta_retries = 20;
};

// eta = 0.1 * shortest bar length, the demand scale the flow defaults to.
double default_eta(const Linkage& l);

struct VelocityField {
    std::vector<Point2> v;
    double objective_value = 0.0;   // sum of |v_i|^2
    std::vector<int> active_struts; // framework edge ids tight at the solution
};

// Right-hand side of the strut inequality <p_i - p_j, v_i - v_j> >= demand.
// TautStrut -> 0; Strut -> eta * min(1, 1/length). Bars are rejected.
double strut_demand(const std::vector<Point2>& pos, const Edge& edge, double eta);

struct QpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd eq_multipliers;
    Eigen::VectorXd ineq_multipliers;  // zero for inactive rows
    int iterations = 0;
};

// Minimize x'x subject to eq x = 0 and ineq x >= rhs. Primal active-set on
// the dense KKT system; the initial feasible point comes from a simplex
// phase 1, so InfeasibleDetected is decided exactly there. Deterministic:
// lowest-index tie-breaking everywhere, no randomized starts.
QpResult qp_solve(const Eigen::MatrixXd& eq, const Eigen::MatrixXd& ineq,
                  const Eigen::VectorXd& ineq_rhs, double tol, int max_iters);

// The paper's velocity program: minimize total squared vertex speed with
// bar lengths preserved and every strut expanding at least at its demand.
// Halves eta and retries when infeasible; a configuration infeasible after
// all retries is at (or numerically at) the fully unfolded state.
VelocityField expansive_velocity(const Linkage& config, const Framework& fw,
                                 const ExpansionParams& params);

// Barrier-smoothed variant: log barrier on non-taut struts, shifted so the
// hard-constrained solution is strictly interior; taut struts are held as
// equalities. Solved by damped Newton in the bar-constraint nullspace.
VelocityField expansive_velocity_barrier(const Linkage& config, const Framework& fw,
                                         const ExpansionParams& params);

}  // namespace unlock

#endif
