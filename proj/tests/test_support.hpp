#ifndef UNLOCK_TEST_SUPPORT_HPP
#define UNLOCK_TEST_SUPPORT_HPP

#include <random>
#include <vector>

#include "unlock/expansion.hpp"
#include "unlock/flow.hpp"
#include "unlock/framework.hpp"
#include "unlock/geometry.hpp"

namespace unlock::testing {

// Random open chain by a rejection-sampled random walk: generic (no
// near-collinear triple), simple, and visibly bent.
inline Linkage random_open_chain(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> len(0.6, 1.4);
    std::uniform_real_distribution<double> turn(-2.0, 2.0);
    std::uniform_real_distribution<double> heading0(0.0, 6.28318);
    for (int attempt = 0; attempt < 2000; ++attempt) {
        Chain c;
        c.closed = false;
        double heading = heading0(rng);
        Point2 p{0, 0};
        c.vertices.push_back(p);
        for (int k = 1; k < n; ++k) {
            if (k > 1) heading += turn(rng);
            double l = len(rng);
            p = p + Point2{l * std::cos(heading), l * std::sin(heading)};
            c.vertices.push_back(p);
        }
        Linkage l{{c}};
        if (!is_simple(l)) continue;
        if (n > 2 && is_straightened(c, 0.05)) continue;
        bool generic = true;
        auto pts = all_vertices(l);
        double scale = 1.0;
        for (const auto& q : pts) scale = std::max({scale, std::abs(q.x), std::abs(q.y)});
        for (size_t a = 0; a < pts.size() && generic; ++a)
            for (size_t b = a + 1; b < pts.size() && generic; ++b)
                for (size_t cc = b + 1; cc < pts.size(); ++cc)
                    if (std::abs((pts[b] - pts[a]).cross(pts[cc] - pts[a])) <
                        1e-5 * scale * scale) {
                        generic = false;
                        break;
                    }
        if (!generic) continue;
        return l;
    }
    throw std::runtime_error("random_open_chain: sampling failed");
}

// Star-shaped polygon with wild radii: simple by construction, rejected
// until visibly non-convex.
inline Linkage random_simple_polygon(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> radius(0.5, 2.5);
    std::uniform_real_distribution<double> angle_jitter(0.05, 0.95);
    const double two_pi = 6.283185307179586;
    for (int attempt = 0; attempt < 2000; ++attempt) {
        Chain c;
        c.closed = true;
        for (int k = 0; k < n; ++k) {
            double a = (k + angle_jitter(rng)) * two_pi / n;
            double r = radius(rng);
            c.vertices.push_back({r * std::cos(a), r * std::sin(a)});
        }
        Linkage l{{c}};
        if (!is_simple(l)) continue;
        if (is_convexified(c, 0.05)) continue;
        bool ok = true;
        for (int k = 0; k < c.segment_count(); ++k)
            if (c.segment(k).length() < 0.15) ok = false;
        if (!ok) continue;
        return l;
    }
    throw std::runtime_error("random_simple_polygon: sampling failed");
}

// 1-3 chains, jointly simple, and not already at the unfolded state (the
// stress certificate is the theorem's claim for configurations that still
// have somewhere to go; straight chains and convex polygons genuinely
// carry stresses).
inline Linkage random_linkage(int max_total, std::mt19937& rng) {
    std::uniform_int_distribution<int> nchains(1, 3);
    std::uniform_real_distribution<double> offset(-6.0, 6.0);
    for (int attempt = 0; attempt < 2000; ++attempt) {
        int chains = nchains(rng);
        Linkage l;
        int used = 0;
        for (int c = 0; c < chains; ++c) {
            int remaining = max_total - used - 2 * (chains - c - 1);
            if (remaining < 2) break;
            std::uniform_int_distribution<int> size(2, std::min(remaining, 6));
            int n = size(rng);
            Linkage one = n >= 4 && rng() % 2 == 0 ? random_simple_polygon(std::max(n, 4), rng)
                                                   : random_open_chain(n, rng);
            Point2 shift{offset(rng), offset(rng)};
            for (auto& v : one.chains[0].vertices) v += shift;
            used += one.chains[0].size();
            l.chains.push_back(one.chains[0]);
        }
        if (l.chains.empty()) continue;
        if (!is_simple(l)) continue;
        bool terminal = true;
        for (const auto& c : l.chains)
            if (c.closed ? !is_convexified(c, 0.05)
                         : (c.size() > 2 && !is_straightened(c, 0.05)))
                terminal = false;
        if (terminal) continue;
        return l;
    }
    throw std::runtime_error("random_linkage: sampling failed");
}

// The braced square: 4 corners, the 4 sides and both diagonals all bars.
// Not a chain framework; the classic one-dimensional stress space.
inline std::pair<std::vector<Point2>, Framework> braced_square() {
    std::vector<Point2> pos{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    Framework fw;
    fw.n = 4;
    fw.edges = {{0, 1, EdgeKind::Bar}, {1, 2, EdgeKind::Bar}, {2, 3, EdgeKind::Bar},
                {0, 3, EdgeKind::Bar}, {0, 2, EdgeKind::Bar}, {1, 3, EdgeKind::Bar}};
    return {pos, fw};
}

// Exhaustive oracle for min |x|^2 s.t. eq x = 0, ineq x >= rhs: the
// minimum-norm point over every active subset that turns out feasible.
// Returns an empty vector when no subset yields a feasible point.
inline Eigen::VectorXd qp_oracle(const Eigen::MatrixXd& eq, const Eigen::MatrixXd& ineq,
                                 const Eigen::VectorXd& rhs) {
    const int nv = static_cast<int>(std::max(eq.cols(), ineq.cols()));
    const int mi = static_cast<int>(ineq.rows());
    const int me = static_cast<int>(eq.rows());
    Eigen::VectorXd best;
    double best_norm = std::numeric_limits<double>::infinity();
    for (long mask = 0; mask < (1L << mi); ++mask) {
        int k = 0;
        for (int i = 0; i < mi; ++i)
            if (mask & (1L << i)) ++k;
        Eigen::MatrixXd m(me + k, nv);
        Eigen::VectorXd r(me + k);
        if (me > 0) {
            m.topRows(me) = eq;
            r.head(me).setZero();
        }
        int row = me;
        for (int i = 0; i < mi; ++i) {
            if (!(mask & (1L << i))) continue;
            m.row(row) = ineq.row(i);
            r(row) = rhs(i);
            ++row;
        }
        Eigen::VectorXd x;
        if (m.rows() == 0) {
            x = Eigen::VectorXd::Zero(nv);
        } else {
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
            x = cod.solve(r);
            if ((m * x - r).lpNorm<Eigen::Infinity>() > 1e-9) continue;  // inconsistent subset
        }
        if (mi > 0 && ((ineq * x - rhs).minCoeff() < -1e-9)) continue;
        if (x.squaredNorm() < best_norm) {
            best_norm = x.squaredNorm();
            best = x;
        }
    }
    return best;
}

}  // namespace unlock::testing

#endif
