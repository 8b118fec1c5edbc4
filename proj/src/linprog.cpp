#include "unlock/linprog.hpp"

#include <vector>

namespace unlock {

namespace {

constexpr double kPivotTol = 1e-9;

// Tableau with basis tracking. Column layout: [structural | artificial],
// rightmost column is the rhs; last row is the (reduced) objective.
struct Tableau {
    Eigen::MatrixXd t;            // (m+1) x (cols+1)
    std::vector<int> basis;       // size m, column index basic in each row
    int m;
    int cols;
    int enterable;                // phase 2 bars artificials from entering

    double& rhs(int r) { return t(r, cols); }
    double obj() const { return -t(m, cols); }

    // Bland: entering = lowest-index column with negative reduced cost.
    int entering() const {
        for (int j = 0; j < enterable; ++j)
            if (t(m, j) < -kPivotTol) return j;
        return -1;
    }

    // Ratio test; ties broken toward the lowest basis index (Bland). The
    // tie window scales with the ratio, so small right-hand sides do not
    // drown genuine differences.
    int leaving(int enter) const {
        int row = -1;
        double best = 0.0;
        for (int r = 0; r < m; ++r) {
            double a = t(r, enter);
            if (a <= kPivotTol) continue;
            double ratio = t(r, cols) / a;
            double window = 1e-12 * std::max(1.0, std::abs(best));
            if (row == -1 || ratio < best - window ||
                (ratio <= best + window && basis[r] < basis[row])) {
                row = r;
                best = ratio;
            }
        }
        return row;
    }

    void pivot(int row, int col) {
        t.row(row) /= t(row, col);
        for (int r = 0; r <= m; ++r) {
            if (r == row) continue;
            double f = t(r, col);
            if (f != 0.0) t.row(r) -= f * t.row(row);
        }
        basis[row] = col;
    }

    // Exact artificial mass, recomputed from the basis; the accumulated
    // objective row drifts after many pivots and cannot be trusted near
    // zero.
    double artificial_sum(int art_start) const {
        double s = 0.0;
        for (int r = 0; r < m; ++r)
            if (basis[r] >= art_start) s += t(r, cols);
        return s;
    }

    // Rebuild the phase-1 objective row exactly from the current basis,
    // shedding the roundoff that pivoting accumulates in row m.
    void reprice_phase1(int art_start) {
        t.row(m).setZero();
        for (int r = 0; r < m; ++r)
            if (basis[r] >= art_start) t.row(m) -= t.row(r);
        t.block(m, art_start, 1, cols - art_start).setZero();
    }

    // stop_below: objective level at which the phase may stop early (the
    // phase-1 artificial sum is bounded below by zero, so chasing reduced
    // costs under the tolerance floor only churns the tableau);
    // art_start >= 0 makes the stop test use the exact artificial sum and
    // enables periodic re-pricing.
    LpStatus run(int max_pivots, double stop_below, int art_start = -1) {
        // split variables leave exactly mirrored columns behind; once one
        // side is basic the other decays to rounding dust whose reduced
        // cost can drift just past the tolerance. Such columns are barred
        // rather than reported as unbounded rays.
        std::vector<char> banned(cols, 0);
        int since_reprice = 0;
        for (int it = 0; it < max_pivots; ++it) {
            double level = art_start >= 0 ? artificial_sum(art_start) : obj();
            if (level <= stop_below) return LpStatus::Optimal;
            if (art_start >= 0 && since_reprice >= 64) {
                reprice_phase1(art_start);
                since_reprice = 0;
            }
            int enter = -1;
            for (int j = 0; j < enterable; ++j)
                if (!banned[j] && t(m, j) < -kPivotTol) { enter = j; break; }
            if (enter < 0) return LpStatus::Optimal;
            int leave = leaving(enter);
            if (leave < 0) {
                if (art_start >= 0) {
                    // the negative reduced cost may itself be drift; check
                    // against a freshly priced row before concluding
                    reprice_phase1(art_start);
                    since_reprice = 0;
                    if (t(m, enter) >= -kPivotTol) continue;
                }
                double dust = 0.0;
                for (int r = 0; r < m; ++r) dust = std::max(dust, std::abs(t(r, enter)));
                if (t(m, enter) > -1e-6 || dust <= 1e-8) {
                    banned[enter] = 1;
                    continue;
                }
                if (art_start >= 0) {
                    // a real ray cannot exist here; stop and let the exact
                    // artificial sum decide feasibility
                    banned[enter] = 1;
                    continue;
                }
                return LpStatus::Unbounded;
            }
            pivot(leave, enter);
            ++since_reprice;
        }
        throw SimplexError("simplex: pivot limit exceeded");
    }
};

}  // namespace

LpResult simplex_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& c, int max_pivots) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    if (b.size() != m || c.size() != n)
        throw std::invalid_argument("simplex_solve: dimension mismatch");

    Tableau tab;
    tab.m = m;
    tab.cols = n + m;  // one artificial per row
    tab.enterable = tab.cols;
    tab.t.setZero(m + 1, tab.cols + 1);
    tab.basis.resize(m);

    for (int r = 0; r < m; ++r) {
        // normalize the row so the tableau starts well scaled
        double rn = A.row(r).lpNorm<Eigen::Infinity>();
        double s = (b(r) < 0 ? -1.0 : 1.0) / std::max(rn, 1e-30);
        tab.t.block(r, 0, 1, n) = s * A.row(r);
        tab.t(r, n + r) = 1.0;
        tab.rhs(r) = s * b(r);
        tab.basis[r] = n + r;
    }

    // Phase 1: minimize the artificial sum.
    for (int r = 0; r < m; ++r) tab.t.row(m) -= tab.t.row(r);
    tab.t.block(m, n, 1, m).setZero();

    double rhs_scale = 0.0;
    for (int r = 0; r < m; ++r) rhs_scale = std::max(rhs_scale, std::abs(tab.rhs(r)));
    double feas_tol = std::max(1e-11, 1e-7 * rhs_scale);

    LpStatus st = tab.run(max_pivots, 0.5 * feas_tol, n);
    if (st == LpStatus::Unbounded)
        throw SimplexError("simplex: phase 1 unbounded (internal)");
    double art_sum = 0.0;
    for (int r = 0; r < m; ++r)
        if (tab.basis[r] >= n) art_sum += tab.rhs(r);
    if (art_sum > feas_tol) return {LpStatus::Infeasible, Eigen::VectorXd(), 0.0};

    // Drive remaining artificials out of the basis where possible, using
    // the largest available pivot so the tableau stays well scaled.
    for (int r = 0; r < m; ++r) {
        if (tab.basis[r] < n) continue;
        int col = -1;
        double best = 1e-7;
        for (int j = 0; j < n; ++j)
            if (std::abs(tab.t(r, j)) > best) {
                best = std::abs(tab.t(r, j));
                col = j;
            }
        if (col >= 0) tab.pivot(r, col);
        // else: redundant row, keep the degenerate artificial at zero
    }

    // Phase 2: swap in the real objective, priced out over the basis.
    // Artificial columns may no longer enter.
    tab.enterable = n;
    tab.t.row(m).setZero();
    tab.t.block(m, 0, 1, n) = c.transpose();
    for (int r = 0; r < m; ++r) {
        int bj = tab.basis[r];
        double f = tab.t(m, bj);
        if (f != 0.0) tab.t.row(m) -= f * tab.t.row(r);
    }

    st = tab.run(max_pivots, -std::numeric_limits<double>::infinity());
    if (st == LpStatus::Unbounded) return {LpStatus::Unbounded, Eigen::VectorXd(), 0.0};

    LpResult res;
    res.status = LpStatus::Optimal;
    res.x.setZero(n);
    for (int r = 0; r < m; ++r)
        if (tab.basis[r] < n) res.x(tab.basis[r]) = tab.rhs(r);
    res.objective = c.dot(res.x);
    return res;
}

}  // namespace unlock
