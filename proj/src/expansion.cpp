#include "unlock/expansion.hpp"

#include <algorithm>
#include <cmath>

#include "unlock/linprog.hpp"

namespace unlock {

double default_eta(const Linkage& l) {
    double shortest = std::numeric_limits<double>::max();
    for (const auto& c : l.chains)
        for (int k = 0; k < c.segment_count(); ++k)
            shortest = std::min(shortest, c.segment(k).length());
    return 0.1 * shortest;
}

double strut_demand(const std::vector<Point2>& pos, const Edge& edge, double eta) {
    if (edge.kind == EdgeKind::Bar)
        throw std::invalid_argument("strut_demand: edge is a bar");
    if (edge.kind == EdgeKind::TautStrut) return 0.0;
    double len = (pos[edge.i] - pos[edge.j]).norm();
    return eta * std::min(1.0, 1.0 / len);
}

namespace {

// Feasible point for {eq x = 0, ineq x >= rhs} via simplex phase 1 with
// split free variables and surplus columns. Throws QpInfeasible.
Eigen::VectorXd lp_feasible_point(const Eigen::MatrixXd& eq, const Eigen::MatrixXd& ineq,
                                  const Eigen::VectorXd& rhs) {
    const int nv = static_cast<int>(std::max(eq.cols(), ineq.cols()));
    const int me = static_cast<int>(eq.rows());
    const int mi = static_cast<int>(ineq.rows());
    const int ncols = 2 * nv + mi;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(me + mi, ncols);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(me + mi);
    if (me > 0) {
        a.block(0, 0, me, nv) = eq;
        a.block(0, nv, me, nv) = -eq;
    }
    if (mi > 0) {
        a.block(me, 0, mi, nv) = ineq;
        a.block(me, nv, mi, nv) = -ineq;
        a.block(me, 2 * nv, mi, mi) = -Eigen::MatrixXd::Identity(mi, mi);
        b.segment(me, mi) = rhs;
    }
    LpResult lp = simplex_solve(a, b, Eigen::VectorXd::Zero(ncols));
    if (lp.status == LpStatus::Infeasible)
        throw QpInfeasible("qp_solve: constraint system infeasible");
    if (lp.status != LpStatus::Optimal)
        throw QpInfeasible("qp_solve: phase 1 failed");
    return lp.x.segment(0, nv) - lp.x.segment(nv, nv);
}

Eigen::VectorXd min_norm_on(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs) {
    if (rows.rows() == 0 || rows.cols() == 0) return Eigen::VectorXd::Zero(rows.cols());
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(rows);
    return cod.solve(rhs);
}

// Lawson-Hanson: minimize |B mu - c| subject to mu >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& b, const Eigen::VectorXd& c, double tol) {
    const int n = static_cast<int>(b.cols());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    std::vector<char> passive(n, 0);
    Eigen::VectorXd resid = c;
    for (int outer = 0; outer < 4 * n + 8; ++outer) {
        Eigen::VectorXd w = b.transpose() * resid;
        int enter = -1;
        double best = tol;
        for (int j = 0; j < n; ++j)
            if (!passive[j] && w(j) > best) {
                best = w(j);
                enter = j;
            }
        if (enter < 0) break;
        passive[enter] = 1;
        for (int inner = 0; inner < 2 * n + 4; ++inner) {
            std::vector<int> p;
            for (int j = 0; j < n; ++j)
                if (passive[j]) p.push_back(j);
            Eigen::MatrixXd bp(b.rows(), p.size());
            for (size_t k = 0; k < p.size(); ++k) bp.col(k) = b.col(p[k]);
            Eigen::VectorXd z =
                bp.completeOrthogonalDecomposition().solve(c);
            bool all_pos = true;
            for (int k = 0; k < z.size(); ++k)
                if (z(k) <= 0) all_pos = false;
            if (all_pos) {
                mu.setZero();
                for (size_t k = 0; k < p.size(); ++k) mu(p[k]) = z(k);
                break;
            }
            double alpha = 1.0;
            for (size_t k = 0; k < p.size(); ++k)
                if (z(k) <= 0) {
                    double denom = mu(p[k]) - z(k);
                    if (denom > 0) alpha = std::min(alpha, mu(p[k]) / denom);
                }
            for (size_t k = 0; k < p.size(); ++k) {
                mu(p[k]) += alpha * (z(k) - mu(p[k]));
                if (mu(p[k]) <= tol) {
                    mu(p[k]) = 0.0;
                    passive[p[k]] = 0;
                }
            }
        }
        resid = c - b * mu;
    }
    return mu;
}

}  // namespace

QpResult qp_solve(const Eigen::MatrixXd& eq, const Eigen::MatrixXd& ineq,
                  const Eigen::VectorXd& ineq_rhs, double tol, int max_iters) {
    const int nv = static_cast<int>(std::max(eq.cols(), ineq.cols()));
    const int me = static_cast<int>(eq.rows());
    const int mi = static_cast<int>(ineq.rows());
    if (mi != ineq_rhs.size())
        throw std::invalid_argument("qp_solve: inequality rhs size mismatch");

    Eigen::VectorXd x;
    if (mi == 0 || ineq_rhs.maxCoeff() <= 0.0) {
        x = Eigen::VectorXd::Zero(nv);  // the unconstrained minimum is feasible
    } else {
        x = lp_feasible_point(eq, ineq, ineq_rhs);
    }

    // The working set starts empty rather than from the phase-1 vertex:
    // vertices of the feasible polyhedron are typically degenerate and
    // seed the loop with a redundant set; letting blockers enter one at a
    // time keeps it close to independent.
    std::vector<int> working;

    auto assemble = [&](const std::vector<int>& w, Eigen::MatrixXd& m, Eigen::VectorXd& r) {
        m.resize(me + w.size(), nv);
        r.resize(me + w.size());
        if (me > 0) {
            m.topRows(me) = eq;
            r.head(me).setZero();
        }
        for (size_t k = 0; k < w.size(); ++k) {
            m.row(me + k) = ineq.row(w[k]);
            r(me + k) = ineq_rhs(w[k]);
        }
    };

    // Orthonormal basis of range(eq'), for projecting the gradient out of
    // the equality rows during the stall certificate below.
    Eigen::MatrixXd eq_range;
    if (me > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(eq.transpose());
        int rank = static_cast<int>(qr.rank());
        eq_range = qr.householderQ() * Eigen::MatrixXd::Identity(nv, rank);
    }
    auto project_out_eq = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
        if (me == 0) return w;
        return w - eq_range * (eq_range.transpose() * w);
    };

    // Degenerate working sets make min-norm multiplier signs unreliable and
    // the plain add/drop loop can stall on a zero step. The certificate:
    // x is optimal iff the projected gradient lies in the cone of the
    // active rows (a small nonnegative least-squares fit); when it does
    // not, the fit residual is a strict descent direction that keeps every
    // positively weighted active row active.
    auto stall_escape = [&](QpResult* opt, int it) -> bool {
        std::vector<int> active;
        double act_tol = 1e3 * tol * std::max(1.0, x.norm());
        for (int i = 0; i < mi; ++i)
            if (std::abs(ineq.row(i).dot(x) - ineq_rhs(i)) <= act_tol) active.push_back(i);
        Eigen::MatrixXd b(nv, active.size());
        for (size_t k = 0; k < active.size(); ++k)
            b.col(k) = project_out_eq(ineq.row(active[k]).transpose());
        Eigen::VectorXd c = project_out_eq(2.0 * x);
        Eigen::VectorXd mu = active.empty() ? Eigen::VectorXd()
                                            : nnls(b, c, 1e-12 * std::max(1.0, c.norm()));
        Eigen::VectorXd rho = active.empty() ? c : (c - b * mu).eval();
        if (rho.norm() <= 1e2 * tol * std::max(1.0, x.norm())) {
            opt->x = x;
            opt->ineq_multipliers = Eigen::VectorXd::Zero(mi);
            for (size_t k = 0; k < active.size(); ++k)
                opt->ineq_multipliers(active[k]) = mu(k);
            if (me > 0) {
                Eigen::VectorXd rest = 2.0 * x - ineq.transpose() * opt->ineq_multipliers;
                opt->eq_multipliers = min_norm_on(eq.transpose().eval(), rest);
            }
            opt->iterations = it;
            return true;
        }
        Eigen::VectorXd d = -rho;
        double dir_norm2 = d.squaredNorm();
        double alpha = -x.dot(d) / dir_norm2;  // unconstrained minimum along d
        for (int i = 0; i < mi; ++i) {
            double ad = ineq.row(i).dot(d);
            if (ad >= -1e-14) continue;
            double slack = ineq.row(i).dot(x) - ineq_rhs(i);
            if (slack <= act_tol) continue;  // active rows stay put along d
            alpha = std::min(alpha, std::max(0.0, slack / (-ad)));
        }
        x += alpha * d;
        working.clear();
        double wt = tol * std::max(1.0, x.norm());
        for (int i = 0; i < mi; ++i)
            if (std::abs(ineq.row(i).dot(x) - ineq_rhs(i)) <= wt) working.push_back(i);
        return false;
    };

    QpResult res;
    Eigen::MatrixXd m;
    Eigen::VectorXd r;
    int stagnant = 0;
    int idle_escapes = 0;
    for (int it = 0; it < max_iters; ++it) {
        if (stagnant >= 30) {
            stagnant = 0;
            Eigen::VectorXd before = x;
            if (stall_escape(&res, it)) return res;
            if ((x - before).norm() <= 1e-12 * std::max(1.0, x.norm())) {
                if (++idle_escapes >= 5)
                    throw QpMaxIters("qp_solve: stalled without an optimality certificate");
            } else {
                idle_escapes = 0;
            }
            continue;
        }
        assemble(working, m, r);
        Eigen::VectorXd target = min_norm_on(m, r);
        Eigen::VectorXd p = target - x;

        if (p.norm() <= tol * std::max(1.0, x.norm())) {
            // multipliers from stationarity 2x = E' lambda + A_W' mu
            Eigen::VectorXd y = min_norm_on(m.transpose().eval(), 2.0 * x);
            int drop = -1;
            double most_negative = -tol;
            for (size_t k = 0; k < working.size(); ++k) {
                if (y(me + k) < most_negative) {
                    most_negative = y(me + k);
                    drop = static_cast<int>(k);
                }
            }
            if (drop < 0) {
                res.x = x;
                res.eq_multipliers = me > 0 ? y.head(me).eval() : Eigen::VectorXd();
                res.ineq_multipliers = Eigen::VectorXd::Zero(mi);
                for (size_t k = 0; k < working.size(); ++k)
                    res.ineq_multipliers(working[k]) = y(me + k);
                res.iterations = it;
                return res;
            }
            working.erase(working.begin() + drop);
            ++stagnant;
            continue;
        }

        // step toward the subproblem solution, stopping at the first blocker
        double alpha = 1.0;
        int blocker = -1;
        for (int i = 0; i < mi; ++i) {
            if (std::binary_search(working.begin(), working.end(), i)) continue;
            double ap = ineq.row(i).dot(p);
            if (ap >= -1e-14) continue;
            double slack = ineq.row(i).dot(x) - ineq_rhs(i);
            double limit = std::max(0.0, -slack / ap);
            if (limit < alpha - 1e-14) {
                alpha = limit;
                blocker = i;
            }
        }
        x += alpha * p;
        if (alpha * p.norm() <= 1e-13 * std::max(1.0, x.norm())) ++stagnant;
        else stagnant = 0;
        if (blocker >= 0) {
            working.insert(std::lower_bound(working.begin(), working.end(), blocker),
                           blocker);
        }
    }
    throw QpMaxIters("qp_solve: iteration limit reached");
}

namespace {

double coordinate_scale(const std::vector<Point2>& pos) {
    double s = 1.0;
    for (const auto& p : pos) s = std::max({s, std::abs(p.x), std::abs(p.y)});
    return s;
}

// Bars and taut struts form the equality block: a taut strut spans a
// straight subchain, so its length sits at the top of its range and its
// derivative is zero in any bar-preserving motion. Keeping those rows out
// of the inequality set also keeps the active-set method away from the
// degenerate add/drop churn their bar-dependent rows would cause.
struct VelocityProgram {
    Eigen::MatrixXd eq;          // bar + taut strut rows
    Eigen::MatrixXd ineq;        // plain strut rows, framework order
    std::vector<int> strut_ids;  // framework edge id per inequality row
    std::vector<int> taut_ids;   // framework edge ids held as equalities
};

VelocityProgram build_program(const std::vector<Point2>& pos, const Framework& fw) {
    VelocityProgram prog;
    int neq = 0, ns = 0;
    for (const auto& e : fw.edges)
        (e.kind == EdgeKind::Strut ? ns : neq) += 1;
    prog.eq.setZero(neq, 2 * fw.n);
    prog.ineq.setZero(ns, 2 * fw.n);
    int eb = 0, es = 0;
    for (size_t e = 0; e < fw.edges.size(); ++e) {
        const Edge& ed = fw.edges[e];
        Point2 d = pos[ed.i] - pos[ed.j];
        bool hard = ed.kind != EdgeKind::Strut;
        Eigen::MatrixXd& dst = hard ? prog.eq : prog.ineq;
        int row = hard ? eb++ : es;
        dst(row, 2 * ed.i) = d.x;
        dst(row, 2 * ed.i + 1) = d.y;
        dst(row, 2 * ed.j) = -d.x;
        dst(row, 2 * ed.j + 1) = -d.y;
        if (!hard) {
            prog.strut_ids.push_back(static_cast<int>(e));
            ++es;
        } else if (ed.kind == EdgeKind::TautStrut) {
            prog.taut_ids.push_back(static_cast<int>(e));
        }
    }
    return prog;
}

VelocityField field_from_solution(const std::vector<Point2>& pos, const Framework& fw,
                                  const VelocityProgram& prog, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& rhs, double tol) {
    VelocityField vf;
    vf.v.resize(pos.size());
    for (size_t i = 0; i < pos.size(); ++i) vf.v[i] = {x(2 * i), x(2 * i + 1)};
    vf.objective_value = x.squaredNorm();
    double scale = coordinate_scale(pos);
    for (int row = 0; row < prog.ineq.rows(); ++row) {
        double slack = prog.ineq.row(row).dot(x) - rhs(row);
        if (std::abs(slack) <= 1e3 * tol * scale)
            vf.active_struts.push_back(prog.strut_ids[row]);
    }
    // taut struts are pinned at their boundary by construction
    vf.active_struts.insert(vf.active_struts.end(), prog.taut_ids.begin(),
                            prog.taut_ids.end());
    std::sort(vf.active_struts.begin(), vf.active_struts.end());
    (void)fw;
    return vf;
}

}  // namespace

namespace {

// Fallback for configurations with nearly straight subchains, whose
// near-dependent rows can defeat the QP numerically: carry every straight
// run rigidly (exactly what the continuum motion does) and solve on the
// reduced vertex set, then extend by linear interpolation along each run.
struct RunReduction {
    Linkage reduced;
    std::vector<int> active;  // global ids, reduced order
    struct Interp {
        int vertex, a, b;  // global ids; vertex sits between a and b
        double frac;
    };
    std::vector<Interp> interps;
};

std::optional<RunReduction> straight_run_reduction(const Linkage& config,
                                                   const Framework& fw) {
    auto pos = all_vertices(config);
    RunReduction rr;
    int base = 0;
    bool any_merge = false;
    for (const auto& c : config.chains) {
        int m = c.size();
        // a vertex is mergeable when its two-hop strut is taut, i.e. the
        // caller's own classification found it straight
        std::vector<char> straight(m, 0);
        if (!c.closed) {
            for (int k = 1; k + 1 < m; ++k) {
                int e = fw.find_edge(base + k - 1, base + k + 1);
                if (e >= 0 && fw.edges[e].kind == EdgeKind::TautStrut) straight[k] = 1;
            }
        } else {
            for (int k = 0; k < m; ++k) {
                int e = fw.find_edge(base + (k + m - 1) % m, base + (k + 1) % m);
                if (e >= 0 && fw.edges[e].kind == EdgeKind::TautStrut) straight[k] = 1;
            }
            int act = 0;
            for (int k = 0; k < m; ++k)
                if (!straight[k]) ++act;
            if (act < 3)  // a closed chain needs three joints; skip merging it
                straight.assign(m, 0);
        }
        Chain red;
        red.closed = c.closed;
        std::vector<int> act_local;
        for (int k = 0; k < m; ++k) {
            if (straight[k]) { any_merge = true; continue; }
            act_local.push_back(k);
            red.vertices.push_back(c.vertices[k]);
            rr.active.push_back(base + k);
        }
        int ma = static_cast<int>(act_local.size());
        int npairs = c.closed ? ma : ma - 1;
        for (int p = 0; p < npairs; ++p) {
            int u = act_local[p];
            int w = act_local[(p + 1) % ma];
            double total = 0.0;
            for (int q = u; q != w; q = (q + 1) % m)
                total += (pos[base + q] - pos[base + (q + 1) % m]).norm();
            double run = 0.0;
            for (int q = (u + 1) % m; q != w; q = (q + 1) % m) {
                run += (pos[base + (q + m - 1) % m] - pos[base + q]).norm();
                rr.interps.push_back({base + q, base + u, base + w, run / total});
            }
        }
        rr.reduced.chains.push_back(std::move(red));
        base += m;
    }
    if (!any_merge) return std::nullopt;
    return rr;
}

// bars = chain edges, struts = the rest; no simplicity gate (chords of
// nearly straight runs may cut corners without invalidating the program)
Framework complete_framework(const Linkage& l) {
    Framework fw;
    fw.n = l.vertex_count();
    std::vector<std::vector<char>> is_bar(fw.n, std::vector<char>(fw.n, 0));
    for (auto [i, j] : chain_edges(l)) {
        if (i > j) std::swap(i, j);
        fw.edges.push_back({i, j, EdgeKind::Bar});
        is_bar[i][j] = 1;
    }
    for (int i = 0; i < fw.n; ++i)
        for (int j = i + 1; j < fw.n; ++j)
            if (!is_bar[i][j]) fw.edges.push_back({i, j, EdgeKind::Strut});
    return fw;
}

VelocityField solve_on_reduction(const Linkage& config, const Framework& fw,
                                 const RunReduction& rr, double eta,
                                 const ExpansionParams& params) {
    Framework fwr = classify_taut_struts(rr.reduced, complete_framework(rr.reduced), 1e-7);
    auto rpos = all_vertices(rr.reduced);
    VelocityProgram prog = build_program(rpos, fwr);
    Eigen::VectorXd rhs(prog.ineq.rows());
    for (int row = 0; row < prog.ineq.rows(); ++row)
        rhs(row) = strut_demand(rpos, fwr.edges[prog.strut_ids[row]], eta);
    QpResult qp = qp_solve(prog.eq, prog.ineq, rhs, params.qp_tol, params.max_qp_iters);

    auto pos = all_vertices(config);
    VelocityField vf;
    vf.v.assign(pos.size(), Point2{0, 0});
    for (size_t k = 0; k < rr.active.size(); ++k)
        vf.v[rr.active[k]] = {qp.x(2 * k), qp.x(2 * k + 1)};
    for (const auto& ip : rr.interps)
        vf.v[ip.vertex] = vf.v[ip.a] + ip.frac * (vf.v[ip.b] - vf.v[ip.a]);
    for (const auto& v : vf.v) vf.objective_value += v.squared_norm();
    double scale = coordinate_scale(pos);
    for (const auto& e : fw.edges) {
        if (e.kind == EdgeKind::Bar) continue;
        Point2 d = pos[e.i] - pos[e.j];
        double slack = d.dot(vf.v[e.i] - vf.v[e.j]) - strut_demand(pos, e, eta);
        if (std::abs(slack) <= 1e3 * params.qp_tol * scale)
            vf.active_struts.push_back(fw.find_edge(e.i, e.j));
    }
    return vf;
}

}  // namespace

VelocityField expansive_velocity(const Linkage& config, const Framework& fw,
                                 const ExpansionParams& params) {
    if (params.eta <= 0) throw std::invalid_argument("expansive_velocity: eta must be > 0");
    auto pos = all_vertices(config);
    VelocityProgram prog = build_program(pos, fw);

    double eta = params.eta;
    bool saw_nonconvergence = false;
    for (int attempt = 0; attempt <= params.max_eta_retries; ++attempt) {
        Eigen::VectorXd rhs(prog.ineq.rows());
        for (int row = 0; row < prog.ineq.rows(); ++row)
            rhs(row) = strut_demand(pos, fw.edges[prog.strut_ids[row]], eta);
        try {
            QpResult qp = qp_solve(prog.eq, prog.ineq, rhs, params.qp_tol,
                                   params.max_qp_iters);
            return field_from_solution(pos, fw, prog, qp.x, rhs, params.qp_tol);
        } catch (const std::runtime_error& err) {
            if (dynamic_cast<const QpMaxIters*>(&err)) saw_nonconvergence = true;
            else if (!dynamic_cast<const QpInfeasible*>(&err) &&
                     !dynamic_cast<const SimplexError*>(&err))
                throw;
        }
        // straight runs carried rigidly give the same motion on a far
        // better conditioned program
        try {
            if (auto rr = straight_run_reduction(config, fw))
                return solve_on_reduction(config, fw, *rr, eta, params);
        } catch (const std::runtime_error&) {
            // fall through to a smaller demand
        }
        eta *= 0.5;
    }
    if (saw_nonconvergence)
        throw QpDidNotConverge("expansive_velocity: active-set solve did not converge");
    throw InfeasibleAfterRetries(
        "expansive_velocity: no expansive field at any retried eta; the linkage is at "
        "(or numerically at) the fully unfolded state");
}

VelocityField expansive_velocity_barrier(const Linkage& config, const Framework& fw,
                                         const ExpansionParams& params) {
    if (params.barrier_weight <= 0)
        throw std::invalid_argument("expansive_velocity_barrier: barrier_weight must be > 0");
    const double w = params.barrier_weight;
    auto pos = all_vertices(config);
    VelocityProgram prog = build_program(pos, fw);
    const int nv = 2 * static_cast<int>(pos.size());

    VelocityField hard = expansive_velocity(config, fw, params);
    Eigen::VectorXd vh(nv);
    for (size_t i = 0; i < pos.size(); ++i) {
        vh(2 * i) = hard.v[i].x;
        vh(2 * i + 1) = hard.v[i].y;
    }

    // equalities: bars plus taut struts (a taut strut cannot move at all:
    // its length is already the subchain length, an upper bound)
    Eigen::MatrixXd z;
    if (prog.eq.rows() == 0) {
        z = Eigen::MatrixXd::Identity(nv, nv);
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(prog.eq);
        Eigen::MatrixXd kernel = lu.kernel();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
        z = qr.householderQ() * Eigen::MatrixXd::Identity(nv, kernel.cols());
    }

    // barrier rows: non-taut struts only (the whole inequality block)
    const int nbar = static_cast<int>(prog.ineq.rows());
    Eigen::MatrixXd az(nbar, z.cols());
    Eigen::VectorXd d(nbar);
    for (int k = 0; k < nbar; ++k) {
        az.row(k) = prog.ineq.row(k) * z;
        d(k) = strut_demand(pos, fw.edges[prog.strut_ids[k]], params.eta);
    }

    Eigen::VectorXd y = z.transpose() * vh;
    Eigen::VectorXd shift(nbar);
    for (int k = 0; k < nbar; ++k)
        shift(k) = std::max(0.0, d(k) - az.row(k).dot(y)) + w;

    auto slacks = [&](const Eigen::VectorXd& yy) -> Eigen::VectorXd {
        return az * yy - d + shift;
    };
    auto value = [&](const Eigen::VectorXd& yy) {
        Eigen::VectorXd s = slacks(yy);
        if (nbar > 0 && s.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
        double f = yy.squaredNorm();
        for (int k = 0; k < nbar; ++k) f -= w * std::log(s(k));
        return f;
    };

    const double scale = coordinate_scale(pos);
    const double grad_tol = 1e-10 * std::max(1.0, scale * scale);
    bool converged = false;
    for (int it = 0; it < std::max(200, params.max_qp_iters); ++it) {
        Eigen::VectorXd s = slacks(y);
        Eigen::VectorXd grad = 2.0 * y;
        Eigen::MatrixXd hess = 2.0 * Eigen::MatrixXd::Identity(y.size(), y.size());
        for (int k = 0; k < nbar; ++k) {
            grad -= (w / s(k)) * az.row(k).transpose();
            hess += (w / (s(k) * s(k))) * az.row(k).transpose() * az.row(k);
        }
        if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) { converged = true; break; }
        Eigen::VectorXd dy = hess.ldlt().solve(-grad);
        double f0 = value(y);
        double slope = grad.dot(dy);
        double t = 1.0;
        int bt = 0;
        while (bt++ < 60 && value(y + t * dy) > f0 + 0.25 * t * slope) t *= 0.5;
        if (bt >= 60) throw NewtonDidNotConverge("barrier: line search failed");
        y += t * dy;
    }
    if (!converged) throw NewtonDidNotConverge("barrier: Newton did not converge");

    Eigen::VectorXd x = z * y;
    Eigen::VectorXd rhs(prog.ineq.rows());
    for (int row = 0; row < prog.ineq.rows(); ++row)
        rhs(row) = strut_demand(pos, fw.edges[prog.strut_ids[row]], params.eta);
    return field_from_solution(pos, fw, prog, x, rhs, params.qp_tol);
}

}  // namespace unlock
