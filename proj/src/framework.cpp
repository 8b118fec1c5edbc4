#include "unlock/framework.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "unlock/linprog.hpp"
#include "unlock/plane_graph.hpp"

namespace unlock {

int Framework::bar_count() const {
    int b = 0;
    for (const auto& e : edges)
        if (e.kind == EdgeKind::Bar) ++b;
    return b;
}

int Framework::find_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (size_t k = 0; k < edges.size(); ++k)
        if (edges[k].i == i && edges[k].j == j) return static_cast<int>(k);
    return -1;
}

Framework build_framework(const Linkage& l) {
    auto violation = find_simplicity_violation(l);
    if (violation)
        throw FrameworkError("build_framework: linkage is not simple (segments " +
                             std::to_string(violation->segment_a) + " and " +
                             std::to_string(violation->segment_b) + ")");
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

namespace {

struct ChainLocation {
    int chain = -1;
    int index = -1;
};

std::vector<ChainLocation> locate_vertices(const Linkage& l) {
    std::vector<ChainLocation> loc;
    for (size_t ci = 0; ci < l.chains.size(); ++ci)
        for (int k = 0; k < l.chains[ci].size(); ++k)
            loc.push_back({static_cast<int>(ci), k});
    return loc;
}

const double kPi = std::acos(-1.0);

// all interior vertices of the oriented arc a..b (stepping +1 mod n) straight?
bool arc_straight(const Chain& c, int a, int b, double tol) {
    int n = c.size();
    for (int k = (a + 1) % n; k != b; k = (k + 1) % n) {
        const Point2& prev = c.vertices[(k + n - 1) % n];
        const Point2& next = c.vertices[(k + 1) % n];
        if (std::abs(kPi - interior_angle(prev, c.vertices[k], next)) > tol)
            return false;
    }
    return true;
}

}  // namespace

Framework classify_taut_struts(const Linkage& config, Framework fw, double tol) {
    auto loc = locate_vertices(config);
    for (auto& e : fw.edges) {
        if (e.kind == EdgeKind::Bar) continue;
        e.kind = EdgeKind::Strut;
        const auto& li = loc[e.i];
        const auto& lj = loc[e.j];
        if (li.chain != lj.chain) continue;
        const Chain& c = config.chains[li.chain];
        int a = li.index, b = lj.index;
        if (!c.closed) {
            if (a > b) std::swap(a, b);
            bool taut = true;
            for (int k = a + 1; k < b; ++k) {
                double ang = interior_angle(c.vertices[k - 1], c.vertices[k],
                                            c.vertices[k + 1]);
                if (std::abs(kPi - ang) > tol) { taut = false; break; }
            }
            if (taut) e.kind = EdgeKind::TautStrut;
        } else {
            if (arc_straight(c, a, b, tol) || arc_straight(c, b, a, tol))
                e.kind = EdgeKind::TautStrut;
        }
    }
    return fw;
}

Eigen::MatrixXd rigidity_matrix(const std::vector<Point2>& pos, const Framework& fw) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(fw.edges.size(), 2 * fw.n);
    for (size_t e = 0; e < fw.edges.size(); ++e) {
        const Edge& ed = fw.edges[e];
        Point2 d = pos[ed.i] - pos[ed.j];
        r(e, 2 * ed.i) = d.x;
        r(e, 2 * ed.i + 1) = d.y;
        r(e, 2 * ed.j) = -d.x;
        r(e, 2 * ed.j + 1) = -d.y;
    }
    return r;
}

double equilibrium_residual(const std::vector<Point2>& pos, const Framework& fw,
                            const Eigen::VectorXd& omega) {
    Eigen::MatrixXd r = rigidity_matrix(pos, fw);
    return (r.transpose() * omega).cwiseAbs().maxCoeff();
}

namespace {

// Deterministic sign for a bar-only witness: the longest stressed edge
// carries positive stress (lowest edge index on ties).
void orient_witness(const std::vector<Point2>& pos, const Framework& fw,
                    Eigen::VectorXd& omega) {
    int pick = -1;
    double best_len = -1.0;
    for (size_t e = 0; e < fw.edges.size(); ++e) {
        if (std::abs(omega(e)) <= 1e-12) continue;
        double len = (pos[fw.edges[e].i] - pos[fw.edges[e].j]).norm();
        if (len > best_len + 1e-15) {
            best_len = len;
            pick = static_cast<int>(e);
        }
    }
    if (pick >= 0 && omega(pick) < 0) omega = -omega;
}

}  // namespace

std::optional<StressAssignment> find_equilibrium_stress(const std::vector<Point2>& pos,
                                                        const Framework& fw) {
    const int m = static_cast<int>(fw.edges.size());
    const int n2 = 2 * fw.n;
    std::vector<int> bars, struts;
    for (int e = 0; e < m; ++e)
        (fw.edges[e].kind == EdgeKind::Bar ? bars : struts).push_back(e);

    Eigen::MatrixXd r = rigidity_matrix(pos, fw);

    // Bar-only stresses come from the nullspace of the transposed bar rows;
    // strut entries stay zero, which satisfies the nonnegativity for free.
    if (!bars.empty()) {
        Eigen::MatrixXd bt(n2, bars.size());
        for (size_t k = 0; k < bars.size(); ++k) bt.col(k) = r.row(bars[k]).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        double smax = sv.size() > 0 ? sv(0) : 0.0;
        int rank = 0;
        for (int k = 0; k < sv.size(); ++k)
            if (sv(k) > 1e-10 * std::max(1.0, smax)) ++rank;
        if (rank < static_cast<int>(bars.size())) {
            Eigen::VectorXd nullvec = svd.matrixV().col(bars.size() - 1);
            Eigen::VectorXd omega = Eigen::VectorXd::Zero(m);
            for (size_t k = 0; k < bars.size(); ++k) omega(bars[k]) = nullvec(k);
            omega /= omega.cwiseAbs().sum();
            orient_witness(pos, fw, omega);
            if (equilibrium_residual(pos, fw, omega) > 1e-8)
                throw StressSolverError("bar nullspace witness failed equilibrium check");
            return StressAssignment{omega, omega.cwiseAbs().sum()};
        }
    }

    if (struts.empty()) return std::nullopt;

    // Stresses with strut support: maximize total strut stress over the
    // equilibrium cone. The maximum is positive exactly when a nonzero
    // stress with a strictly positive strut entry exists. A plain
    // feasibility formulation would not do: split bar variables can cancel
    // pairwise and certify only the zero stress.
    const int nb = static_cast<int>(bars.size());
    const int ns = static_cast<int>(struts.size());
    const int nvars = 2 * nb + ns + 1;  // bar+ , bar- , struts, slack
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n2 + 1, nvars);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n2 + 1);
    for (int k = 0; k < nb; ++k) {
        a.block(0, k, n2, 1) = r.row(bars[k]).transpose();
        a.block(0, nb + k, n2, 1) = -r.row(bars[k]).transpose();
    }
    for (int k = 0; k < ns; ++k)
        a.block(0, 2 * nb + k, n2, 1) = r.row(struts[k]).transpose();
    for (int k = 0; k < ns; ++k) a(n2, 2 * nb + k) = 1.0;
    a(n2, nvars - 1) = 1.0;
    b(n2) = 1.0;

    Eigen::VectorXd c = Eigen::VectorXd::Zero(nvars);
    for (int k = 0; k < ns; ++k) c(2 * nb + k) = -1.0;

    LpResult lp;
    try {
        lp = simplex_solve(a, b, c);
    } catch (const SimplexError& err) {
        throw StressSolverError(std::string("stress LP failed: ") + err.what());
    }
    if (lp.status != LpStatus::Optimal)
        throw StressSolverError("stress LP terminated without an optimum");
    if (-lp.objective <= 1e-7) return std::nullopt;

    Eigen::VectorXd omega = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < nb; ++k) omega(bars[k]) = lp.x(k) - lp.x(nb + k);
    for (int k = 0; k < ns; ++k) omega(struts[k]) = lp.x(2 * nb + k);
    double total = omega.cwiseAbs().sum();
    if (total <= 1e-12)
        throw StressSolverError("stress LP returned a vanishing witness");
    omega /= total;
    if (equilibrium_residual(pos, fw, omega) > 1e-8)
        throw StressSolverError("stress witness failed equilibrium check");
    return StressAssignment{omega, omega.cwiseAbs().sum()};
}

namespace {

double coordinate_scale(const std::vector<Point2>& pos) {
    double s = 1.0;
    for (const auto& p : pos) s = std::max({s, std::abs(p.x), std::abs(p.y)});
    return s;
}

}  // namespace

PlanarFramework planarize(const std::vector<Point2>& pos, const Framework& fw,
                          const StressAssignment& stress) {
    if (stress.omega.size() != static_cast<int>(fw.edges.size()))
        throw FrameworkError("planarize: stress size does not match framework");

    const double merge_tol = 1e-9 * coordinate_scale(pos);
    const int m = static_cast<int>(fw.edges.size());

    PlanarFramework pf;
    pf.vertices = pos;
    pf.original_vertex_count = static_cast<int>(pos.size());

    // crossing points per edge, as parameters along the edge
    std::vector<std::vector<std::pair<double, int>>> cuts(m);  // (param, new vertex id)
    for (int e1 = 0; e1 < m; ++e1) {
        const Edge& a = fw.edges[e1];
        Segment sa{pos[a.i], pos[a.j]};
        for (int e2 = e1 + 1; e2 < m; ++e2) {
            const Edge& b = fw.edges[e2];
            if (a.i == b.i || a.i == b.j || a.j == b.i || a.j == b.j) continue;
            Segment sb{pos[b.i], pos[b.j]};
            SegmentIntersection hit = segment_intersection(sa, sb);
            if (hit.empty()) continue;
            if (hit.type == IntersectionType::Overlap)
                throw FrameworkError("planarize: overlapping collinear edges " +
                                     std::to_string(e1) + "," + std::to_string(e2));
            const Point2& p = hit.point;
            auto near_end = [&](const Segment& s) {
                return (p - s.a).norm() <= merge_tol || (p - s.b).norm() <= merge_tol;
            };
            if (hit.type == IntersectionType::SharedEndpoint || near_end(sa) || near_end(sb))
                throw FrameworkError(
                    "planarize: edge through a vertex (non-generic position), edges " +
                    std::to_string(e1) + "," + std::to_string(e2));
            // triple crossing: a second cut at the same spot on either edge
            for (int e : {e1, e2})
                for (const auto& [t, vid] : cuts[e])
                    if ((pf.vertices[vid] - p).norm() <= merge_tol)
                        throw FrameworkError(
                            "planarize: three edges through one point near edge " +
                            std::to_string(e));
            int vid = static_cast<int>(pf.vertices.size());
            pf.vertices.push_back(p);
            const Point2 da = sa.b - sa.a;
            const Point2 db = sb.b - sb.a;
            cuts[e1].emplace_back((p - sa.a).dot(da) / da.squared_norm(), vid);
            cuts[e2].emplace_back((p - sb.a).dot(db) / db.squared_norm(), vid);
        }
    }

    for (int e = 0; e < m; ++e) {
        const Edge& ed = fw.edges[e];
        auto& cc = cuts[e];
        std::sort(cc.begin(), cc.end());
        double full_len = (pos[ed.j] - pos[ed.i]).norm();
        int prev = ed.i;
        auto emit = [&](int u, int v) {
            double piece_len = (pf.vertices[v] - pf.vertices[u]).norm();
            // inherit the parent's axial force: density scales with 1/length
            double w = stress.omega(e) == 0.0 ? 0.0
                                              : stress.omega(e) * full_len / piece_len;
            int a = u, b = v;
            pf.edges.push_back({a, b, e, w});
        };
        for (const auto& [t, vid] : cc) {
            emit(prev, vid);
            prev = vid;
        }
        emit(prev, ed.j);
    }

    std::vector<std::pair<int, int>> edge_pairs;
    edge_pairs.reserve(pf.edges.size());
    for (const auto& e : pf.edges) edge_pairs.emplace_back(e.i, e.j);
    PlaneFaces faces = trace_faces(pf.vertices, edge_pairs);
    pf.faces = std::move(faces.face_vertices);
    pf.face_edges = std::move(faces.face_edges);
    pf.outer_face = faces.outer_face;
    return pf;
}

namespace {

// left/right face of each edge, oriented i -> j. The traversal keeps every
// face on the left of its directed boundary, so the face that walks (i,j)
// is the left one.
void edge_sides(const PlanarFramework& pf, std::vector<int>& left, std::vector<int>& right) {
    left.assign(pf.edges.size(), -1);
    right.assign(pf.edges.size(), -1);
    for (size_t f = 0; f < pf.faces.size(); ++f) {
        const auto& cyc = pf.faces[f];
        const auto& eids = pf.face_edges[f];
        for (size_t k = 0; k < cyc.size(); ++k) {
            int u = cyc[k];
            int e = eids[k];
            if (pf.edges[e].i == u) left[e] = static_cast<int>(f);
            else right[e] = static_cast<int>(f);
        }
    }
}

}  // namespace

Terrain maxwell_cremona_lift(const PlanarFramework& pf) {
    const int nf = static_cast<int>(pf.faces.size());
    std::vector<int> left, right;
    edge_sides(pf, left, right);

    Terrain t;
    t.face_gradients.assign(nf, Point2{0, 0});
    t.face_offsets.assign(nf, 0.0);
    std::vector<char> known(nf, 0);
    known[pf.outer_face] = 1;

    // dual breadth-first walk from the outer face
    std::vector<int> queue{pf.outer_face};
    double max_gradient = 0.0;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int f = queue[qi];
        for (size_t e = 0; e < pf.edges.size(); ++e) {
            int le = left[e], re = right[e];
            if (le != f && re != f) continue;
            int g = le == f ? re : le;
            const PlanarEdge& ed = pf.edges[e];
            Point2 d = pf.vertices[ed.j] - pf.vertices[ed.i];
            Point2 jump = ed.omega * d.rot90();  // g_right = g_left + jump
            Point2 grad_g = le == f ? t.face_gradients[f] + jump
                                    : t.face_gradients[f] - jump;
            double off_g = (t.face_gradients[f] - grad_g).dot(pf.vertices[ed.i]) +
                           t.face_offsets[f];
            if (!known[g]) {
                t.face_gradients[g] = grad_g;
                t.face_offsets[g] = off_g;
                known[g] = 1;
                queue.push_back(g);
                max_gradient = std::max(max_gradient, grad_g.norm());
            }
        }
    }
    for (int f = 0; f < nf; ++f)
        if (!known[f]) throw FrameworkError("maxwell_cremona_lift: dual graph disconnected");

    // closure residual on every edge: both face planes must agree across it
    double scale = coordinate_scale(pf.vertices);
    double tol = 1e-8 * std::max(1.0, max_gradient) * std::max(1.0, scale);
    double worst = 0.0;
    for (size_t e = 0; e < pf.edges.size(); ++e) {
        const PlanarEdge& ed = pf.edges[e];
        Point2 d = pf.vertices[ed.j] - pf.vertices[ed.i];
        Point2 jump = ed.omega * d.rot90();
        int lf = left[e], rf = right[e];
        Point2 gerr = t.face_gradients[rf] - t.face_gradients[lf] - jump;
        double herr_i = (t.face_gradients[lf].dot(pf.vertices[ed.i]) + t.face_offsets[lf]) -
                        (t.face_gradients[rf].dot(pf.vertices[ed.i]) + t.face_offsets[rf]);
        double herr_j = (t.face_gradients[lf].dot(pf.vertices[ed.j]) + t.face_offsets[lf]) -
                        (t.face_gradients[rf].dot(pf.vertices[ed.j]) + t.face_offsets[rf]);
        worst = std::max({worst, gerr.norm() * scale, std::abs(herr_i), std::abs(herr_j)});
    }
    if (worst > tol)
        throw FrameworkError("maxwell_cremona_lift: loop closure residual " +
                             std::to_string(worst) + " — input is not an equilibrium stress");

    t.vertex_heights.assign(pf.vertices.size(), 0.0);
    std::vector<char> hset(pf.vertices.size(), 0);
    for (size_t f = 0; f < pf.faces.size(); ++f) {
        for (int v : pf.faces[f]) {
            if (hset[v]) continue;
            t.vertex_heights[v] = t.face_gradients[f].dot(pf.vertices[v]) + t.face_offsets[f];
            hset[v] = 1;
        }
    }
    return t;
}

LiftReport verify_lift(const PlanarFramework& pf, const Terrain& t, double tol) {
    const int nf = static_cast<int>(pf.faces.size());
    std::vector<int> left, right;
    edge_sides(pf, left, right);

    // Independent reconstruction: depth-first over the dual in reverse edge
    // order, rather than the breadth-first forward walk the lift used.
    std::vector<Point2> grad(nf, Point2{0, 0});
    std::vector<double> off(nf, 0.0);
    std::vector<char> known(nf, 0);
    std::vector<int> stack{pf.outer_face};
    known[pf.outer_face] = 1;
    while (!stack.empty()) {
        int f = stack.back();
        stack.pop_back();
        for (int e = static_cast<int>(pf.edges.size()) - 1; e >= 0; --e) {
            int le = left[e], re = right[e];
            if (le != f && re != f) continue;
            int g = le == f ? re : le;
            if (known[g]) continue;
            const PlanarEdge& ed = pf.edges[e];
            Point2 d = pf.vertices[ed.j] - pf.vertices[ed.i];
            Point2 jump = ed.omega * d.rot90();
            grad[g] = le == f ? grad[f] + jump : grad[f] - jump;
            off[g] = (grad[f] - grad[g]).dot(pf.vertices[ed.i]) + off[f];
            known[g] = 1;
            stack.push_back(g);
        }
    }

    LiftReport rep;
    for (int f = 0; f < nf; ++f)
        for (int v : pf.faces[f])
            rep.max_closure_residual =
                std::max(rep.max_closure_residual,
                         std::abs(grad[f].dot(pf.vertices[v]) + off[f] - t.vertex_heights[v]));

    rep.is_flat = true;
    for (double h : t.vertex_heights)
        if (std::abs(h) > tol) { rep.is_flat = false; break; }

    // Positive stress must fold concavely across the edge (mountain),
    // negative convexly (valley): sign of (g_R - g_L) . rot90(d) is sign(w).
    rep.mountain_valley_consistent = true;
    double scale = coordinate_scale(pf.vertices);
    for (size_t e = 0; e < pf.edges.size(); ++e) {
        const PlanarEdge& ed = pf.edges[e];
        Point2 d = pf.vertices[ed.j] - pf.vertices[ed.i];
        double fold = (t.face_gradients[right[e]] - t.face_gradients[left[e]]).dot(d.rot90());
        double expected = ed.omega * d.squared_norm();
        if (std::abs(expected) <= 10 * tol * std::max(1.0, scale)) continue;
        if (fold * expected <= 0.0) rep.mountain_valley_consistent = false;
    }
    return rep;
}

}  // namespace unlock
