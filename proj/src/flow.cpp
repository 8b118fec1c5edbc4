#include "unlock/flow.hpp"

#include <algorithm>
#include <cmath>

namespace unlock {

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Unfolded: return "Unfolded";
        case Outcome::MaxStepsReached: return "MaxStepsReached";
        case Outcome::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

bool is_unfolded(const Linkage& l, double straight_tol, double convex_tol) {
    for (const auto& c : l.chains) {
        if (c.closed) {
            if (!is_convexified(c, convex_tol)) return false;
        } else {
            if (!is_straightened(c, straight_tol)) return false;
        }
    }
    return true;
}

std::vector<Point2> project_edge_lengths(std::vector<Point2> pos,
                                         const std::vector<std::pair<int, int>>& edges,
                                         const std::vector<double>& targets, double tol,
                                         int max_iters) {
    const int m = static_cast<int>(edges.size());
    if (m != static_cast<int>(targets.size()))
        throw std::invalid_argument("project_edge_lengths: target count mismatch");
    const int nv = 2 * static_cast<int>(pos.size());

    double prev_err = std::numeric_limits<double>::max();
    for (int it = 0; it <= max_iters; ++it) {
        Eigen::VectorXd r(m);
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m, nv);
        double max_rel = 0.0;
        for (int e = 0; e < m; ++e) {
            auto [a, b] = edges[e];
            Point2 d = pos[a] - pos[b];
            double len = d.norm();
            if (len <= 0.0) throw ProjectionDiverged("projection hit a collapsed edge");
            r(e) = len - targets[e];
            max_rel = std::max(max_rel, std::abs(r(e)) / targets[e]);
            Point2 u = d * (1.0 / len);
            j(e, 2 * a) = u.x;
            j(e, 2 * a + 1) = u.y;
            j(e, 2 * b) = -u.x;
            j(e, 2 * b + 1) = -u.y;
        }
        if (max_rel <= tol) return pos;
        if (it == max_iters) break;
        if (max_rel > 4.0 * prev_err)
            throw ProjectionDiverged("projection residual grew");
        prev_err = std::max(max_rel, 1e-300);

        Eigen::VectorXd lam = (j * j.transpose()).ldlt().solve(r);
        Eigen::VectorXd delta = -j.transpose() * lam;
        if (!delta.allFinite()) throw ProjectionDiverged("projection produced non-finite step");
        for (size_t v = 0; v < pos.size(); ++v) {
            pos[v].x += delta(2 * v);
            pos[v].y += delta(2 * v + 1);
        }
    }
    throw ProjectionDiverged("projection did not reach tolerance");
}

Linkage project_bar_lengths(const Linkage& config, const Framework& fw,
                            const std::vector<double>& targets, double tol,
                            int max_iters) {
    std::vector<std::pair<int, int>> bars;
    for (const auto& e : fw.edges)
        if (e.kind == EdgeKind::Bar) bars.emplace_back(e.i, e.j);
    auto pos = project_edge_lengths(all_vertices(config), bars, targets, tol, max_iters);
    return with_vertices(config, pos);
}

namespace {

double coordinate_scale(const std::vector<Point2>& pos) {
    double s = 1.0;
    for (const auto& p : pos) s = std::max({s, std::abs(p.x), std::abs(p.y)});
    return s;
}

std::vector<double> bar_lengths(const std::vector<Point2>& pos, const Framework& fw) {
    std::vector<double> lens;
    for (const auto& e : fw.edges)
        if (e.kind == EdgeKind::Bar) lens.push_back((pos[e.i] - pos[e.j]).norm());
    return lens;
}

Eigen::VectorXd flatten(const std::vector<Point2>& v) {
    Eigen::VectorXd x(2 * v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        x(2 * i) = v[i].x;
        x(2 * i + 1) = v[i].y;
    }
    return x;
}

std::vector<Point2> unflatten(const Eigen::VectorXd& x) {
    std::vector<Point2> v(x.size() / 2);
    for (size_t i = 0; i < v.size(); ++i) v[i] = {x(2 * i), x(2 * i + 1)};
    return v;
}

}  // namespace

StepResult step(const Linkage& config, const Framework& fw, const FlowParams& fp,
                const ExpansionParams& ep, double dt_start, double t_now,
                const std::vector<double>& bar_targets) {
    Framework cfw = classify_taut_struts(config, fw, 0.5 * fp.straight_tol);
    const Eigen::VectorXd x0 = flatten(all_vertices(config));
    const Eigen::MatrixXd dist0 = pairwise_distances(config);
    const double scale = coordinate_scale(all_vertices(config));

    // stage solve; stage 1 errors mean the flow itself is stuck and
    // propagate, while failures at tentative interior states only ask for
    // a smaller dt
    auto velocity_at = [&](const Eigen::VectorXd& x, int stage) -> Eigen::VectorXd {
        Linkage c = with_vertices(config, unflatten(x));
        try {
            return flatten(ep.barrier_weight > 0 ? expansive_velocity_barrier(c, cfw, ep).v
                                                 : expansive_velocity(c, cfw, ep).v);
        } catch (const std::runtime_error&) {
            if (stage == 1) throw;
            throw ProjectionDiverged("stage velocity failed");  // retried with smaller dt
        }
    };

    Eigen::VectorXd k1 = velocity_at(x0, 1);

    // entry diagnostics: minimum strut slack of the accepted field
    double min_slack = std::numeric_limits<double>::max();
    {
        auto pos = all_vertices(config);
        auto vel = unflatten(k1);
        for (const auto& e : cfw.edges) {
            if (e.kind == EdgeKind::Bar) continue;
            Point2 d = pos[e.i] - pos[e.j];
            Point2 dv = vel[e.i] - vel[e.j];
            min_slack = std::min(min_slack, d.dot(dv) - strut_demand(pos, e, ep.eta));
        }
        if (cfw.edges.empty() || min_slack == std::numeric_limits<double>::max())
            min_slack = 0.0;
    }

    double dt = dt_start;
    int halvings = 0;
    while (true) {
        bool stage_failed = false;
        Eigen::VectorXd xn;
        try {
            if (fp.use_rk4) {
                Eigen::VectorXd k2 = velocity_at(x0 + 0.5 * dt * k1, 2);
                Eigen::VectorXd k3 = velocity_at(x0 + 0.5 * dt * k2, 3);
                Eigen::VectorXd k4 = velocity_at(x0 + dt * k3, 4);
                xn = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            } else {
                xn = x0 + dt * k1;
            }
        } catch (const ProjectionDiverged&) {
            stage_failed = true;
        }

        Linkage candidate;
        double drift = 0.0;
        bool ok = !stage_failed;
        if (ok) {
            try {
                candidate = project_bar_lengths(with_vertices(config, unflatten(xn)), fw,
                                                bar_targets, 1e-12, 30);
            } catch (const ProjectionDiverged&) {
                ok = false;
            }
        }
        if (ok) {
            auto lens = bar_lengths(all_vertices(candidate), fw);
            for (size_t e = 0; e < lens.size(); ++e)
                drift = std::max(drift, std::abs(lens[e] - bar_targets[e]) / bar_targets[e]);
            ok = drift <= fp.bar_tol;
        }
        if (ok) ok = is_simple(candidate);
        if (ok) {
            Eigen::MatrixXd dist1 = pairwise_distances(candidate);
            double worst = (dist0 - dist1).maxCoeff();
            ok = worst <= fp.expand_tol * scale;
        }
        if (ok) {
            StepResult res;
            res.config = std::move(candidate);
            res.dt_used = dt;
            res.diag = {t_now + dt, dt, min_slack, drift, halvings};
            return res;
        }
        dt *= 0.5;
        ++halvings;
        if (dt < fp.dt_min)
            throw StepSizeUnderflow("step: dt underflow with validation still failing");
    }
}

MotionTrace run_unfold(const Linkage& l, const FlowParams& fp, const ExpansionParams& ep) {
    std::string structural = validate_structure(l);
    if (!structural.empty()) throw std::invalid_argument("run_unfold: " + structural);
    Framework fw = build_framework(l);  // rejects non-simple input
    const auto targets = bar_lengths(all_vertices(l), fw);

    MotionTrace trace;
    trace.frames.push_back({0.0, l, {}});

    Linkage config = l;
    double t = 0.0;
    double dt = fp.dt_init;
    int since_snapshot = 0;

    auto push_final = [&](const Linkage& c, double tt, const StepDiag& d) {
        if (!trace.frames.empty() && trace.frames.back().t == tt) return;
        trace.frames.push_back({tt, c, d});
    };

    for (int k = 0; k < fp.max_steps; ++k) {
        if (is_unfolded(config, fp.straight_tol, fp.convex_tol)) {
            trace.outcome = Outcome::Unfolded;
            push_final(config, t, trace.step_diags.empty() ? StepDiag{} : trace.step_diags.back());
            return trace;
        }
        StepResult sr;
        try {
            sr = step(config, fw, fp, ep, dt, t, targets);
        } catch (const InfeasibleAfterRetries&) {
            trace.outcome = is_unfolded(config, fp.straight_tol, fp.convex_tol)
                                ? Outcome::Unfolded
                                : Outcome::NumericalFailure;
            if (trace.outcome == Outcome::NumericalFailure) trace.failure_step = k;
            push_final(config, t, {});
            return trace;
        } catch (const std::runtime_error&) {
            trace.outcome = Outcome::NumericalFailure;
            trace.failure_step = k;
            push_final(config, t, {});
            return trace;
        }
        config = std::move(sr.config);
        t += sr.dt_used;
        trace.step_diags.push_back(sr.diag);
        ++trace.total_steps;
        dt = std::min(sr.dt_used * fp.dt_growth, fp.dt_max);
        if (++since_snapshot >= fp.snapshot_every) {
            trace.frames.push_back({t, config, sr.diag});
            since_snapshot = 0;
        }
    }

    trace.outcome = is_unfolded(config, fp.straight_tol, fp.convex_tol)
                        ? Outcome::Unfolded
                        : Outcome::MaxStepsReached;
    push_final(config, t, trace.step_diags.empty() ? StepDiag{} : trace.step_diags.back());
    return trace;
}

MonotoneReport check_monotone_expansion(const MotionTrace& trace, double tol) {
    MonotoneReport rep;
    (void)tol;
    for (size_t f = 0; f + 1 < trace.frames.size(); ++f) {
        Eigen::MatrixXd a = pairwise_distances(trace.frames[f].config);
        Eigen::MatrixXd b = pairwise_distances(trace.frames[f + 1].config);
        int n = static_cast<int>(a.rows());
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                double drop = a(i, j) - b(i, j);
                if (drop > rep.max_violation) {
                    rep.max_violation = drop;
                    rep.frame_a = static_cast<int>(f);
                    rep.frame_b = static_cast<int>(f + 1);
                    rep.vertex_i = i;
                    rep.vertex_j = j;
                }
            }
        }
    }
    return rep;
}

}  // namespace unlock
