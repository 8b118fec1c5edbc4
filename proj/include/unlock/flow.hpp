#ifndef UNLOCK_FLOW_HPP
#define UNLOCK_FLOW_HPP

#include <string>
#include <vector>

#include "unlock/expansion.hpp"
#include "unlock/framework.hpp"
#include "unlock/geometry.hpp"

namespace unlock {

struct StepSizeUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProjectionDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FlowParams {
    double dt_init = 0.05;
    double dt_min = 1e-9;
    double dt_max = 1e4;
    double dt_growth = 1.4;
    int max_steps = 50000;
    double straight_tol = 1e-3;  // radians
    double convex_tol = 1e-3;    // radians
    double bar_tol = 1e-8;       // relative length drift
    double expand_tol = 1e-9;    // per-step slack, scaled by coordinate magnitude
    int snapshot_every = 10;
    bool use_rk4 = true;         // Euler behind this switch for debugging
};

enum class Outcome { Unfolded, MaxStepsReached, NumericalFailure };

std::string outcome_name(Outcome o);

struct StepDiag {
    double t = 0.0;
    double dt = 0.0;
    double min_strut_slack = 0.0;
    double max_bar_drift = 0.0;
    int halvings = 0;
};

struct TraceFrame {
    double t = 0.0;
    Linkage config;
    StepDiag diag;
};

struct MotionTrace {
    std::vector<TraceFrame> frames;
    Outcome outcome = Outcome::NumericalFailure;
    int failure_step = -1;
    int total_steps = 0;
    std::vector<StepDiag> step_diags;  // one per accepted step
};

bool is_unfolded(const Linkage& l, double straight_tol, double convex_tol);

// Minimal least-squares correction (Gauss-Newton) restoring the target
// lengths of the given vertex pairs to max relative error <= tol.
std::vector<Point2> project_edge_lengths(std::vector<Point2> pos,
                                         const std::vector<std::pair<int, int>>& edges,
                                         const std::vector<double>& targets, double tol,
                                         int max_iters);

Linkage project_bar_lengths(const Linkage& config, const Framework& fw,
                            const std::vector<double>& targets, double tol,
                            int max_iters);

struct StepResult {
    Linkage config;
    double dt_used = 0.0;
    StepDiag diag;
};

// One accepted integration step: taut struts classified at entry, the
// velocity field re-solved at every RK4 stage, bar lengths projected back
// to their targets, then the simplicity / monotone-expansion / bar-drift
// gates. dt halves until the gates pass or dt_min underflows.
StepResult step(const Linkage& config, const Framework& fw, const FlowParams& fp,
                const ExpansionParams& ep, double dt_start, double t_now,
                const std::vector<double>& bar_targets);

MotionTrace run_unfold(const Linkage& l, const FlowParams& fp, const ExpansionParams& ep);

struct MonotoneReport {
    double max_violation = 0.0;
    int frame_a = -1;
    int frame_b = -1;
    int vertex_i = -1;
    int vertex_j = -1;
    bool pass(double tol) const { return max_violation <= tol; }
};

// Largest decrease of any pairwise vertex distance between consecutive
// stored frames.
MonotoneReport check_monotone_expansion(const MotionTrace& trace, double tol);

}  // namespace unlock

#endif
