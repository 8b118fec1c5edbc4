#include "unlock/pseudotri.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "unlock/plane_graph.hpp"

namespace unlock {

namespace {

const double kPi = std::acos(-1.0);

double coordinate_scale(const std::vector<Point2>& pos) {
    double s = 1.0;
    for (const auto& p : pos) s = std::max({s, std::abs(p.x), std::abs(p.y)});
    return s;
}

// Andrew monotone chain, ccw hull vertex ids. General position assumed.
std::vector<int> convex_hull(const std::vector<Point2>& pos) {
    std::vector<int> idx(pos.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (pos[a].x != pos[b].x) return pos[a].x < pos[b].x;
        return pos[a].y < pos[b].y;
    });
    auto build = [&](std::vector<int> order) {
        std::vector<int> h;
        for (int v : order) {
            while (h.size() >= 2 &&
                   (pos[h[h.size() - 1]] - pos[h[h.size() - 2]])
                           .cross(pos[v] - pos[h[h.size() - 2]]) <= 0)
                h.pop_back();
            h.push_back(v);
        }
        return h;
    };
    std::vector<int> lower = build(idx);
    std::reverse(idx.begin(), idx.end());
    std::vector<int> upper = build(idx);
    lower.pop_back();
    upper.pop_back();
    lower.insert(lower.end(), upper.begin(), upper.end());
    return lower;
}

std::vector<std::vector<int>> incidence(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> inc(n);
    for (size_t e = 0; e < edges.size(); ++e) {
        inc[edges[e].first].push_back(static_cast<int>(e));
        inc[edges[e].second].push_back(static_cast<int>(e));
    }
    return inc;
}

struct ReflexGap {
    double gap = 2.0 * kPi;  // widest angular gap at the vertex
    int edge_from = -1;      // edge whose direction starts the gap
    int edge_to = -1;        // edge whose direction ends it (ccw)
};

ReflexGap reflex_gap(const std::vector<Point2>& pos,
                     const std::vector<std::pair<int, int>>& edges,
                     const std::vector<int>& inc, int v) {
    ReflexGap rg;
    if (inc.size() < 2) return rg;  // gap 2*pi, trivially pointed
    std::vector<std::pair<double, int>> dirs;
    for (int e : inc) {
        int o = edges[e].first == v ? edges[e].second : edges[e].first;
        Point2 d = pos[o] - pos[v];
        dirs.emplace_back(std::atan2(d.y, d.x), e);
    }
    std::sort(dirs.begin(), dirs.end());
    rg.gap = -1.0;
    for (size_t k = 0; k < dirs.size(); ++k) {
        size_t nx = (k + 1) % dirs.size();
        double gap = dirs[nx].first - dirs[k].first;
        if (nx == 0) gap += 2.0 * kPi;
        if (gap > rg.gap) {
            rg.gap = gap;
            rg.edge_from = dirs[k].second;
            rg.edge_to = dirs[nx].second;
        }
    }
    return rg;
}

// Angle of the fixed gap (from edge_a's direction ccw to edge_b's) at v.
double gap_between(const std::vector<Point2>& pos,
                   const std::vector<std::pair<int, int>>& edges, int v, int ea, int eb) {
    auto dir = [&](int e) {
        int o = edges[e].first == v ? edges[e].second : edges[e].first;
        Point2 d = pos[o] - pos[v];
        return std::atan2(d.y, d.x);
    };
    double g = dir(eb) - dir(ea);
    while (g < 0) g += 2.0 * kPi;
    while (g >= 2.0 * kPi) g -= 2.0 * kPi;
    return g;
}

bool vertex_pointed(const std::vector<Point2>& pos,
                    const std::vector<std::pair<int, int>>& edges,
                    const std::vector<int>& inc, int v) {
    // the tiny slack admits configurations exactly at an alignment event,
    // where one gap sits on pi itself
    return reflex_gap(pos, edges, inc, v).gap > kPi - 1e-9;
}

bool edges_cross(const std::vector<Point2>& pos, const std::pair<int, int>& a,
                 const std::pair<int, int>& b) {
    if (a.first == b.first || a.first == b.second || a.second == b.first ||
        a.second == b.second)
        return false;  // sharing a vertex is fine; overlaps are excluded by general position
    Segment sa{pos[a.first], pos[a.second]};
    Segment sb{pos[b.first], pos[b.second]};
    return !segment_intersection(sa, sb).empty();
}

bool edge_insertable(const std::vector<Point2>& pos,
                     const std::vector<std::pair<int, int>>& edges,
                     const std::pair<int, int>& cand) {
    for (const auto& e : edges) {
        if (e == cand) return false;
        if (edges_cross(pos, e, cand)) return false;
    }
    auto with = edges;
    with.push_back(cand);
    auto inc = incidence(static_cast<int>(pos.size()), with);
    return vertex_pointed(pos, with, inc[cand.first], cand.first) &&
           vertex_pointed(pos, with, inc[cand.second], cand.second);
}

std::vector<PseudoFace> extract_faces(const std::vector<Point2>& pos,
                                      const std::vector<std::pair<int, int>>& edges) {
    PlaneFaces pf = trace_faces(pos, edges);
    std::vector<PseudoFace> faces;
    for (size_t f = 0; f < pf.face_vertices.size(); ++f) {
        if (static_cast<int>(f) == pf.outer_face) continue;
        PseudoFace face;
        face.cycle = pf.face_vertices[f];
        int k = static_cast<int>(face.cycle.size());
        for (int c = 0; c < k; ++c) {
            const Point2& u = pos[face.cycle[(c + k - 1) % k]];
            const Point2& v = pos[face.cycle[c]];
            const Point2& w = pos[face.cycle[(c + 1) % k]];
            if ((v - u).cross(w - v) > 0) face.corners.push_back(face.cycle[c]);
        }
        // reflex chains run corner to corner, endpoints inclusive
        if (face.corners.size() >= 2) {
            std::vector<int> corner_pos;
            for (int c = 0; c < k; ++c)
                if (std::find(face.corners.begin(), face.corners.end(), face.cycle[c]) !=
                    face.corners.end())
                    corner_pos.push_back(c);
            for (size_t ci = 0; ci < corner_pos.size(); ++ci) {
                int from = corner_pos[ci];
                int to = corner_pos[(ci + 1) % corner_pos.size()];
                std::vector<int> chain;
                for (int c = from;; c = (c + 1) % k) {
                    chain.push_back(face.cycle[c]);
                    if (c == to) break;
                }
                face.reflex_chains.push_back(std::move(chain));
            }
        }
        faces.push_back(std::move(face));
    }
    return faces;
}

}  // namespace

int Pseudotriangulation::find_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (size_t e = 0; e < edges.size(); ++e)
        if (edges[e].first == i && edges[e].second == j) return static_cast<int>(e);
    return -1;
}

Pseudotriangulation build_pointed_pseudotriangulation(
    const std::vector<Point2>& pos, const std::vector<std::pair<int, int>>& bars) {
    const int n = static_cast<int>(pos.size());
    if (n < 3) throw DegeneratePosition("need at least 3 vertices");
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            for (int c = b + 1; c < n; ++c)
                if (orient(pos[a], pos[b], pos[c]) == 0)
                    throw DegeneratePosition("collinear triple " + std::to_string(a) + "," +
                                             std::to_string(b) + "," + std::to_string(c));

    Pseudotriangulation pt;
    pt.n = n;
    auto add_edge = [&](int i, int j, bool bar) {
        if (i > j) std::swap(i, j);
        if (pt.find_edge(i, j) >= 0) {
            if (bar) pt.edge_is_bar[pt.find_edge(i, j)] = 1;
            return;
        }
        pt.edges.emplace_back(i, j);
        pt.edge_is_bar.push_back(bar ? 1 : 0);
    };
    for (auto [i, j] : bars) add_edge(i, j, true);
    for (size_t e1 = 0; e1 < pt.edges.size(); ++e1)
        for (size_t e2 = e1 + 1; e2 < pt.edges.size(); ++e2)
            if (edges_cross(pos, pt.edges[e1], pt.edges[e2]))
                throw std::invalid_argument("bars cross");

    auto hull = convex_hull(pos);
    for (size_t k = 0; k < hull.size(); ++k)
        add_edge(hull[k], hull[(k + 1) % hull.size()], false);

    {
        auto inc = incidence(n, pt.edges);
        for (int v = 0; v < n; ++v)
            if (!vertex_pointed(pos, pt.edges, inc[v], v))
                throw BarsNotExtendable("vertex " + std::to_string(v) +
                                        " not pointed in the bar+hull graph");
    }

    const int want = 2 * n - 3;
    while (static_cast<int>(pt.edges.size()) < want) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::max();
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (pt.find_edge(i, j) >= 0) continue;
                double len = (pos[i] - pos[j]).norm();
                if (len >= best) continue;
                if (!edge_insertable(pos, pt.edges, {i, j})) continue;
                best = len;
                bi = i;
                bj = j;
            }
        }
        if (bi < 0)
            throw BarsNotExtendable("no insertable diagonal with " +
                                    std::to_string(pt.edges.size()) + " edges");
        add_edge(bi, bj, false);
    }

    pt.faces = extract_faces(pos, pt.edges);
    return pt;
}

PtReport verify_pseudotriangulation(const std::vector<Point2>& pos,
                                    const Pseudotriangulation& pt) {
    PtReport rep;
    rep.edge_count_ok = static_cast<int>(pt.edges.size()) == 2 * pt.n - 3;

    auto inc = incidence(pt.n, pt.edges);
    rep.pointed_ok = true;
    for (int v = 0; v < pt.n; ++v)
        if (!vertex_pointed(pos, pt.edges, inc[v], v)) rep.pointed_ok = false;

    rep.faces_ok = true;
    for (size_t e1 = 0; e1 < pt.edges.size() && rep.faces_ok; ++e1)
        for (size_t e2 = e1 + 1; e2 < pt.edges.size(); ++e2)
            if (edges_cross(pos, pt.edges[e1], pt.edges[e2])) {
                rep.faces_ok = false;
                break;
            }
    if (rep.faces_ok) {
        try {
            auto faces = extract_faces(pos, pt.edges);
            if (static_cast<int>(faces.size()) !=
                static_cast<int>(pt.edges.size()) - pt.n + 1)
                rep.faces_ok = false;
            for (const auto& f : faces)
                if (f.corners.size() != 3) rep.faces_ok = false;
        } catch (const std::exception&) {
            rep.faces_ok = false;
        }
    }
    return rep;
}

namespace {

// gauge-fixed rigidity matrix of the mechanism: every pt edge except the
// removed one, then pin rows (v_a = 0, rotation about a killed via b).
Eigen::MatrixXd mechanism_matrix(const std::vector<Point2>& pos, const Mechanism& mech) {
    const int n = static_cast<int>(pos.size());
    const int me = static_cast<int>(mech.pt.edges.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(me - 1 + 3, 2 * n);
    int row = 0;
    for (int e = 0; e < me; ++e) {
        if (e == mech.removed_edge) continue;
        auto [i, j] = mech.pt.edges[e];
        Point2 d = pos[i] - pos[j];
        m(row, 2 * i) = d.x;
        m(row, 2 * i + 1) = d.y;
        m(row, 2 * j) = -d.x;
        m(row, 2 * j + 1) = -d.y;
        ++row;
    }
    auto [a, b] = mech.pin;
    m(row, 2 * a) = 1.0;
    m(row + 1, 2 * a + 1) = 1.0;
    Point2 t = (pos[b] - pos[a]).rot90();
    m(row + 2, 2 * b) = t.x;
    m(row + 2, 2 * b + 1) = t.y;
    return m;
}

int nullspace_dimension(const Eigen::MatrixXd& m, Eigen::VectorXd* kernel_vec) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv(0) : 0.0;
    int cols = static_cast<int>(m.cols());
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
        if (sv(k) > 1e-10 * std::max(smax, 1e-300)) ++rank;
    if (kernel_vec) *kernel_vec = svd.matrixV().col(cols - 1);
    return cols - rank;
}

}  // namespace

Mechanism make_mechanism(const Pseudotriangulation& pt, const std::vector<Point2>& pos,
                         int hull_edge_override) {
    Mechanism mech;
    mech.pt = pt;

    auto hull = convex_hull(pos);
    std::vector<int> hull_edges;
    for (size_t k = 0; k < hull.size(); ++k) {
        int e = pt.find_edge(hull[k], hull[(k + 1) % hull.size()]);
        if (e >= 0 && !pt.edge_is_bar[e]) hull_edges.push_back(e);
    }
    std::sort(hull_edges.begin(), hull_edges.end());
    if (hull_edge_override >= 0) {
        if (std::find(hull_edges.begin(), hull_edges.end(), hull_edge_override) ==
            hull_edges.end())
            throw std::invalid_argument("make_mechanism: chosen edge is not a removable hull edge");
        mech.removed_edge = hull_edge_override;
    } else {
        if (hull_edges.empty())
            throw UnexpectedDofCount("make_mechanism: no non-bar hull edge to remove");
        mech.removed_edge = hull_edges.front();
    }

    int first_bar = -1;
    for (size_t e = 0; e < pt.edges.size(); ++e)
        if (pt.edge_is_bar[e]) { first_bar = static_cast<int>(e); break; }
    if (first_bar >= 0) mech.pin = pt.edges[first_bar];
    else mech.pin = pt.edges[mech.removed_edge == 0 ? 1 : 0];

    int dof = nullspace_dimension(mechanism_matrix(pos, mech), nullptr);
    if (dof != 1)
        throw UnexpectedDofCount("make_mechanism: gauge-fixed nullspace dimension " +
                                 std::to_string(dof));
    return mech;
}

std::vector<Point2> mechanism_velocity(const std::vector<Point2>& pos, const Mechanism& mech) {
    Eigen::VectorXd kernel;
    int dof = nullspace_dimension(mechanism_matrix(pos, mech), &kernel);
    if (dof != 1)
        throw UnexpectedDofCount("mechanism_velocity: nullspace dimension " +
                                 std::to_string(dof));
    kernel.normalize();
    auto [hi, hj] = mech.pt.edges[mech.removed_edge];
    Point2 d = pos[hi] - pos[hj];
    double der = d.x * (kernel(2 * hi) - kernel(2 * hj)) +
                 d.y * (kernel(2 * hi + 1) - kernel(2 * hj + 1));
    double scale = coordinate_scale(pos);
    if (std::abs(der) <= 1e-12 * scale)
        throw UnexpectedDofCount("mechanism_velocity: removed edge is stationary");
    if (der < 0) kernel = -kernel;
    std::vector<Point2> v(pos.size());
    for (size_t i = 0; i < pos.size(); ++i) v[i] = {kernel(2 * i), kernel(2 * i + 1)};
    return v;
}

namespace {

struct MechIntegrator {
    const Mechanism& mech;
    std::vector<std::pair<int, int>> moving_edges;
    std::vector<double> targets;

    MechIntegrator(const std::vector<Point2>& start, const Mechanism& m) : mech(m) {
        for (size_t e = 0; e < m.pt.edges.size(); ++e) {
            if (static_cast<int>(e) == m.removed_edge) continue;
            moving_edges.push_back(m.pt.edges[e]);
            targets.push_back((start[m.pt.edges[e].first] - start[m.pt.edges[e].second]).norm());
        }
    }

    std::vector<Point2> advance(const std::vector<Point2>& s, double dt) const {
        auto stage = [&](const std::vector<Point2>& p) { return mechanism_velocity(p, mech); };
        auto shift = [](const std::vector<Point2>& p, const std::vector<Point2>& v, double h) {
            std::vector<Point2> q(p.size());
            for (size_t i = 0; i < p.size(); ++i) q[i] = p[i] + h * v[i];
            return q;
        };
        auto k1 = stage(s);
        auto k2 = stage(shift(s, k1, 0.5 * dt));
        auto k3 = stage(shift(s, k2, 0.5 * dt));
        auto k4 = stage(shift(s, k3, dt));
        std::vector<Point2> out(s.size());
        for (size_t i = 0; i < s.size(); ++i)
            out[i] = s[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        return project_edge_lengths(out, moving_edges, targets, 1e-12, 30);
    }
};

}  // namespace

SectionFlow flow_to_alignment(const std::vector<Point2>& pos, const Mechanism& mech,
                              const FlowParams& fp, double event_tol,
                              const StatePredicate& terminated,
                              const StatePredicate& state_ok) {
    SectionFlow out;
    const auto& edges = mech.pt.edges;
    auto inc = incidence(static_cast<int>(pos.size()), edges);

    // the reflex gap of each vertex is tracked against its section-start
    // bounding pair; the pair cannot change until an alignment happens
    struct Watch {
        int vertex, ea, eb;
    };
    std::vector<Watch> watches;
    for (size_t v = 0; v < pos.size(); ++v) {
        if (inc[v].size() < 2) continue;
        ReflexGap rg = reflex_gap(pos, edges, inc[v], static_cast<int>(v));
        watches.push_back({static_cast<int>(v), rg.edge_from, rg.edge_to});
    }
    auto min_gap_excess = [&](const std::vector<Point2>& s, int* which) {
        double worst = std::numeric_limits<double>::max();
        if (which) *which = -1;
        for (const auto& w : watches) {
            double g = gap_between(s, edges, w.vertex, w.ea, w.eb) - kPi;
            if (g < worst) {
                worst = g;
                if (which) *which = static_cast<int>(&w - watches.data());
            }
        }
        return worst;
    };

    MechIntegrator integ(pos, mech);
    std::vector<Point2> state = pos;
    double t = 0.0;
    out.states.push_back(state);
    out.times.push_back(0.0);

    // An alignment is a dead end for this mechanism: the distance spanned
    // by the aligned pair reaches its maximum there, so the expansive
    // motion cannot cross. We bisect onto the event and fabricate the
    // "just past" view by nudging the event vertex through the alignment
    // line; the transverse nudge changes incident lengths only at second
    // order, far below the bar tolerance.
    auto nudged_past = [&](const std::vector<Point2>& ev_state, int vertex, int ea, int eb) {
        auto other = [&](int e) {
            return edges[e].first == vertex ? edges[e].second : edges[e].first;
        };
        int a = other(ea), b = other(eb);
        Point2 line = ev_state[b] - ev_state[a];
        Point2 n = line.rot90() * (1.0 / std::max(line.norm(), 1e-300));
        double delta = 1e-8 * coordinate_scale(ev_state);
        auto try_side = [&](double sgn) {
            auto s = ev_state;
            s[vertex] += (sgn * delta) * n;
            return s;
        };
        auto plus = try_side(1.0);
        if (gap_between(plus, edges, vertex, ea, eb) < kPi) return plus;
        return try_side(-1.0);
    };

    auto finish_event = [&](const std::vector<Point2>& pre, double t_pre, double dt_hit,
                            const std::vector<Point2>& hit_state) {
        double lo = 0.0, hi = dt_hit;
        std::vector<Point2> ev_state = hit_state;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            auto s = integ.advance(pre, mid);
            double g = min_gap_excess(s, nullptr);
            if (g <= 0.0) {
                hi = mid;
                ev_state = s;
            } else {
                lo = mid;
            }
            if (std::abs(g) <= event_tol) { ev_state = s; hi = mid; break; }
        }
        int which = -1;
        min_gap_excess(ev_state, &which);

        AlignmentEvent ev;
        ev.t_event = t_pre + hi;
        ev.vertex = watches[which].vertex;
        ev.edge_a = watches[which].ea;
        ev.edge_b = watches[which].eb;
        ev.config_at_event = ev_state;
        ev.config_past_event = nudged_past(ev_state, ev.vertex, ev.edge_a, ev.edge_b);
        out.event = ev;
        out.t_end = ev.t_event;
        out.states.push_back(ev.config_at_event);
        out.times.push_back(ev.t_event);
    };

    if (terminated && terminated(state)) return out;
    {
        int which = -1;
        if (min_gap_excess(state, &which) <= event_tol && which >= 0) {
            AlignmentEvent ev;
            ev.t_event = 0.0;
            ev.vertex = watches[which].vertex;
            ev.edge_a = watches[which].ea;
            ev.edge_b = watches[which].eb;
            ev.config_at_event = state;
            ev.config_past_event = nudged_past(state, ev.vertex, ev.edge_a, ev.edge_b);
            out.event = ev;
            out.t_end = 0.0;
            return out;
        }
    }

    double dt = fp.dt_init;
    int since_snapshot = 0;
    const double scale = coordinate_scale(pos);
    for (int stepk = 0; stepk < fp.max_steps; ++stepk) {
        if (terminated && terminated(state)) {
            out.t_end = t;
            if (out.times.back() != t) {
                out.states.push_back(state);
                out.times.push_back(t);
            }
            return out;
        }
        // one accepted sub-step with halving
        std::vector<Point2> next;
        bool accepted = false;
        while (dt >= fp.dt_min) {
            bool ok = true;
            try {
                next = integ.advance(state, dt);
            } catch (const std::runtime_error&) {
                ok = false;
            }
            if (ok && state_ok) ok = state_ok(next);
            if (ok) {
                // expansiveness: no pairwise distance may decrease
                for (size_t i = 0; i < state.size() && ok; ++i)
                    for (size_t j = i + 1; j < state.size(); ++j) {
                        double before = (state[i] - state[j]).norm();
                        double after = (next[i] - next[j]).norm();
                        if (after < before - fp.expand_tol * scale) { ok = false; break; }
                    }
            }
            if (ok) { accepted = true; break; }
            dt *= 0.5;
        }
        if (!accepted)
            throw StepSizeUnderflow("flow_to_alignment: dt underflow");

        double g_next = min_gap_excess(next, nullptr);
        if (g_next <= 0.0) {
            finish_event(state, t, dt, next);
            out.steps = stepk + 1;
            // termination has precedence when both land inside one step
            if (terminated && terminated(out.event->config_at_event)) {
                std::vector<Point2> final_state = out.event->config_at_event;
                double t_fin = out.event->t_event;
                out.event.reset();
                out.states.back() = final_state;
                out.times.back() = t_fin;
                out.t_end = t_fin;
            }
            return out;
        }
        state = std::move(next);
        t += dt;
        ++out.steps;
        dt = std::min(dt * fp.dt_growth, fp.dt_max);
        if (++since_snapshot >= fp.snapshot_every) {
            out.states.push_back(state);
            out.times.push_back(t);
            since_snapshot = 0;
        }
    }
    out.t_end = t;
    if (out.times.back() != t) {
        out.states.push_back(state);
        out.times.push_back(t);
    }
    return out;
}

std::vector<Pseudotriangulation> local_revise_candidates(const Pseudotriangulation& pt,
                                                         const AlignmentEvent& ev) {
    const auto& pos = ev.config_past_event;
    auto other_end = [&](int e) {
        return pt.edges[e].first == ev.vertex ? pt.edges[e].second : pt.edges[e].first;
    };
    int a = other_end(ev.edge_a);
    int b = other_end(ev.edge_b);

    // At the event the vertex lies on segment (a,b). The flip removes
    // either the spanning edge (a,b), now threaded through the vertex, or
    // one of the vertex's own diagonals, and inserts the one diagonal that
    // restores a pointed pseudotriangulation just past the alignment.
    std::vector<int> removals;
    int spanning = pt.find_edge(a, b);
    if (spanning >= 0 && !pt.edge_is_bar[spanning]) removals.push_back(spanning);
    for (size_t e = 0; e < pt.edges.size(); ++e) {
        if (pt.edge_is_bar[e]) continue;
        if (static_cast<int>(e) == spanning) continue;
        if (pt.edges[e].first == ev.vertex || pt.edges[e].second == ev.vertex)
            removals.push_back(static_cast<int>(e));
    }
    if (removals.empty())
        throw FlipNotUnique("local_revise: no removable edge at the event vertex "
                            "(straightening events are handled by merging)");

    std::vector<Pseudotriangulation> out;
    for (int removed : removals) {
        Pseudotriangulation base;
        base.n = pt.n;
        for (size_t e = 0; e < pt.edges.size(); ++e) {
            if (static_cast<int>(e) == removed) continue;
            base.edges.push_back(pt.edges[e]);
            base.edge_is_bar.push_back(pt.edge_is_bar[e]);
        }
        for (int i = 0; i < pt.n; ++i) {
            for (int j = i + 1; j < pt.n; ++j) {
                std::pair<int, int> e{i, j};
                if (e == pt.edges[removed]) continue;  // must change the graph
                bool present = false;
                for (const auto& ee : base.edges)
                    if (ee == e) { present = true; break; }
                if (present) continue;
                if (!edge_insertable(pos, base.edges, e)) continue;
                auto trial = base;
                trial.edges.push_back(e);
                trial.edge_is_bar.push_back(0);
                if (!verify_pseudotriangulation(pos, trial).all_ok()) continue;
                trial.faces = extract_faces(pos, trial.edges);
                out.push_back(std::move(trial));
            }
        }
    }
    return out;
}

Pseudotriangulation local_revise(const Pseudotriangulation& pt, const AlignmentEvent& ev) {
    auto candidates = local_revise_candidates(pt, ev);
    if (candidates.empty())
        throw FlipNotUnique("local_revise: no completion restores a pointed "
                            "pseudotriangulation");
    return candidates.front();
}

namespace {

struct MergedView {
    const Linkage* proto;
    std::vector<char> active;                 // per global vertex
    std::vector<double> bar_len0;             // original bar length per chain edge
    std::vector<std::pair<int, int>> glob_bars;

    explicit MergedView(const Linkage& l) : proto(&l) {
        active.assign(l.vertex_count(), 1);
        glob_bars = chain_edges(l);
        auto pos = all_vertices(l);
        for (auto [i, j] : glob_bars) bar_len0.push_back((pos[i] - pos[j]).norm());
    }

    std::vector<int> active_ids() const {
        std::vector<int> ids;
        for (size_t v = 0; v < active.size(); ++v)
            if (active[v]) ids.push_back(static_cast<int>(v));
        return ids;
    }

    // consecutive active vertices along each chain, as reduced-index bars
    std::vector<std::pair<int, int>> reduced_bars(const std::vector<int>& ids) const {
        std::vector<int> red(active.size(), -1);
        for (size_t k = 0; k < ids.size(); ++k) red[ids[k]] = static_cast<int>(k);
        std::vector<std::pair<int, int>> bars;
        int base = 0;
        for (const auto& c : proto->chains) {
            std::vector<int> act;
            for (int k = 0; k < c.size(); ++k)
                if (active[base + k]) act.push_back(base + k);
            int m = static_cast<int>(act.size());
            for (int k = 0; k + 1 < m; ++k) bars.emplace_back(red[act[k]], red[act[k + 1]]);
            if (c.closed && m >= 3) bars.emplace_back(red[act[0]], red[act[m - 1]]);
            base += c.size();
        }
        for (auto& [i, j] : bars)
            if (i > j) std::swap(i, j);
        return bars;
    }

    // full configuration: active vertices take the reduced positions,
    // merged ones sit at their fixed arc-length fractions
    Linkage full_config(const std::vector<int>& ids,
                        const std::vector<Point2>& red_pos) const {
        auto pos = all_vertices(*proto);
        for (size_t k = 0; k < ids.size(); ++k) pos[ids[k]] = red_pos[k];
        int base = 0, bar0 = 0;
        for (const auto& c : proto->chains) {
            int m = c.size();
            // bar (q, q+1 mod m) has original length bar_len0[bar0 + q]
            std::vector<int> act;
            for (int k = 0; k < m; ++k)
                if (active[base + k]) act.push_back(k);
            int ma = static_cast<int>(act.size());
            int npairs = c.closed ? ma : ma - 1;
            for (int p = 0; p < npairs; ++p) {
                int u = act[p];
                int w = act[(p + 1) % ma];
                double total = 0.0;
                for (int q = u; q != w; q = (q + 1) % m) total += bar_len0[bar0 + q];
                double run = 0.0;
                for (int q = (u + 1) % m; q != w; q = (q + 1) % m) {
                    run += bar_len0[bar0 + (q + m - 1) % m];
                    double f = run / total;
                    pos[base + q] = pos[base + u] + f * (pos[base + w] - pos[base + u]);
                }
            }
            base += m;
            bar0 += c.segment_count();
        }
        return with_vertices(*proto, pos);
    }
};

}  // namespace

StreinuTrace run_streinu_unfold(const Linkage& l, const StreinuParams& params) {
    std::string structural = validate_structure(l);
    if (!structural.empty()) throw std::invalid_argument("run_streinu_unfold: " + structural);
    if (!is_simple(l)) throw std::invalid_argument("run_streinu_unfold: linkage not simple");

    const FlowParams& fp = params.flow;
    StreinuTrace out;
    MotionTrace& trace = out.trace;
    trace.frames.push_back({0.0, l, {}});

    MergedView mv(l);
    std::vector<Point2> full_pos = all_vertices(l);
    double t = 0.0;
    const int max_sections = 4 * l.vertex_count() * l.vertex_count() + 16;

    std::optional<Pseudotriangulation> carried_pt;
    std::vector<int> carried_ids;

    for (int section = 0;; ++section) {
        Linkage full = with_vertices(l, full_pos);
        if (is_unfolded(full, fp.straight_tol, fp.convex_tol)) {
            trace.outcome = Outcome::Unfolded;
            if (trace.frames.back().t != t) trace.frames.push_back({t, full, {}});
            out.sections = section;
            return out;
        }
        if (section >= max_sections) {
            trace.outcome = Outcome::NumericalFailure;
            trace.failure_step = section;
            if (trace.frames.back().t != t) trace.frames.push_back({t, full, {}});
            out.sections = section;
            return out;
        }

        auto ids = mv.active_ids();
        std::vector<Point2> red_pos;
        red_pos.reserve(ids.size());
        for (int v : ids) red_pos.push_back(full_pos[v]);
        auto red_bars = mv.reduced_bars(ids);

        Pseudotriangulation pt;
        if (carried_pt && carried_ids == ids) {
            pt = *carried_pt;
        } else {
            pt = build_pointed_pseudotriangulation(red_pos, red_bars);
        }
        carried_pt.reset();

        Mechanism mech = make_mechanism(pt, red_pos, params.hull_edge_override);

        auto terminated = [&](const std::vector<Point2>& s) {
            return is_unfolded(mv.full_config(ids, s), fp.straight_tol, fp.convex_tol);
        };
        auto state_ok = [&](const std::vector<Point2>& s) {
            return is_simple(mv.full_config(ids, s));
        };

        SectionFlow sf =
            flow_to_alignment(red_pos, mech, fp, params.event_tol, terminated, state_ok);

        for (size_t k = 1; k < sf.states.size(); ++k) {
            Linkage cfg = mv.full_config(ids, sf.states[k]);
            double tk = t + sf.times[k];
            StepDiag d;
            d.t = tk;
            trace.frames.push_back({tk, cfg, d});
        }
        trace.total_steps += sf.steps;

        const auto& last_state = sf.states.back();
        for (size_t k = 0; k < ids.size(); ++k) full_pos[ids[k]] = last_state[k];
        // refresh merged positions too
        full_pos = all_vertices(mv.full_config(ids, last_state));
        t += sf.times.back();

        if (!sf.event) {
            // terminated (or step budget ran out): loop re-checks predicates
            Linkage now = with_vertices(l, full_pos);
            if (!is_unfolded(now, fp.straight_tol, fp.convex_tol)) {
                trace.outcome = Outcome::MaxStepsReached;
                if (trace.frames.back().t != t) trace.frames.push_back({t, now, {}});
                out.sections = section + 1;
                return out;
            }
            continue;
        }

        const AlignmentEvent& ev = *sf.event;
        bool bar_a = mech.pt.edge_is_bar[ev.edge_a];
        bool bar_b = mech.pt.edge_is_bar[ev.edge_b];
        if (bar_a && bar_b) {
            // a chain joint straightened: it can never unbend expansively,
            // so carry it rigidly on its segment from now on
            int global_v = ids[ev.vertex];
            mv.active[global_v] = 0;
            for (size_t k = 0; k < ids.size(); ++k) full_pos[ids[k]] = ev.config_at_event[k];
            auto ids2 = mv.active_ids();
            std::vector<Point2> rp;
            rp.reserve(ids2.size());
            for (int v : ids2) rp.push_back(full_pos[v]);
            full_pos = all_vertices(mv.full_config(ids2, rp));
        } else {
            // among the verified flips, keep the one whose mechanism still
            // expands every pairwise distance; the others turn back into
            // the cell the motion just left
            auto candidates = local_revise_candidates(mech.pt, ev);
            const auto& start = ev.config_past_event;
            double scale = 1.0;
            for (const auto& p : start) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
            std::optional<Pseudotriangulation> chosen;
            for (auto& cand : candidates) {
                try {
                    Mechanism m2 = make_mechanism(cand, start, params.hull_edge_override);
                    auto v = mechanism_velocity(start, m2);
                    double worst = 0.0;
                    for (size_t i = 0; i < start.size(); ++i)
                        for (size_t j = i + 1; j < start.size(); ++j) {
                            Point2 d = start[i] - start[j];
                            Point2 dv = v[i] - v[j];
                            worst = std::min(worst, d.dot(dv));
                        }
                    if (worst >= -1e-8 * scale) {
                        chosen = std::move(cand);
                        break;
                    }
                } catch (const UnexpectedDofCount&) {
                    continue;
                }
            }
            if (!chosen)
                throw FlipNotUnique("run_streinu_unfold: no revision continues expansively "
                                    "at t=" + std::to_string(t));
            for (size_t k = 0; k < ids.size(); ++k)
                full_pos[ids[k]] = ev.config_past_event[k];
            full_pos = all_vertices(mv.full_config(ids, ev.config_past_event));
            carried_pt = std::move(*chosen);
            carried_ids = ids;
        }
    }
}

}  // namespace unlock
