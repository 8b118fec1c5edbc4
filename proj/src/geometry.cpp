#include "unlock/geometry.hpp"

#include <algorithm>

namespace unlock {

std::vector<Point2> all_vertices(const Linkage& l) {
    std::vector<Point2> out;
    out.reserve(l.vertex_count());
    for (const auto& c : l.chains)
        out.insert(out.end(), c.vertices.begin(), c.vertices.end());
    return out;
}

Linkage with_vertices(const Linkage& proto, const std::vector<Point2>& pos) {
    Linkage out = proto;
    size_t k = 0;
    for (auto& c : out.chains)
        for (auto& v : c.vertices) v = pos.at(k++);
    if (k != pos.size())
        throw std::invalid_argument("with_vertices: position count mismatch");
    return out;
}

std::vector<std::pair<int, int>> chain_edges(const Linkage& l) {
    std::vector<std::pair<int, int>> edges;
    int base = 0;
    for (const auto& c : l.chains) {
        for (int k = 0; k + 1 < c.size(); ++k)
            edges.emplace_back(base + k, base + k + 1);
        if (c.closed) edges.emplace_back(base, base + c.size() - 1);
        base += c.size();
    }
    return edges;
}

std::vector<Segment> all_segments(const Linkage& l) {
    std::vector<Segment> segs;
    for (const auto& c : l.chains)
        for (int k = 0; k < c.segment_count(); ++k) segs.push_back(c.segment(k));
    return segs;
}

double collinearity_tolerance(const Point2& a, const Point2& b, const Point2& c) {
    double scale = std::max({std::abs(a.x), std::abs(a.y), std::abs(b.x),
                             std::abs(b.y), std::abs(c.x), std::abs(c.y)});
    return 1e-12 * scale * scale;
}

int orient(const Point2& a, const Point2& b, const Point2& c) {
    double det = (b - a).cross(c - a);
    if (std::abs(det) <= collinearity_tolerance(a, b, c)) return 0;
    return det > 0 ? 1 : -1;
}

namespace {

// 1D parameter of p along segment s (s must be nondegenerate); no clamping.
double param_along(const Segment& s, const Point2& p) {
    Point2 d = s.b - s.a;
    return (p - s.a).dot(d) / d.squared_norm();
}

bool on_segment_collinear(const Segment& s, const Point2& p) {
    double t = param_along(s, p);
    return t >= 0.0 && t <= 1.0;
}

}  // namespace

SegmentIntersection segment_intersection(const Segment& s1, const Segment& s2) {
    const Point2 &a = s1.a, &b = s1.b, &c = s2.a, &d = s2.b;
    int o1 = orient(a, b, c);
    int o2 = orient(a, b, d);
    int o3 = orient(c, d, a);
    int o4 = orient(c, d, b);

    if (o1 == 0 && o2 == 0) {
        // collinear: sort the four endpoints along the common line
        double t0 = 0.0, t1 = 1.0;
        double u0 = param_along(s1, c), u1 = param_along(s1, d);
        double lo = std::max(t0, std::min(u0, u1));
        double hi = std::min(t1, std::max(u0, u1));
        if (lo > hi) return {};
        Point2 dir = b - a;
        Point2 plo = a + dir * lo, phi = a + dir * hi;
        if (lo == hi) {
            // single shared point of collinear segments: an endpoint of both
            return {IntersectionType::SharedEndpoint, plo, {}};
        }
        return {IntersectionType::Overlap, plo, {plo, phi}};
    }

    bool straddle1 = (o1 != o2) || (o1 == 0);
    bool straddle2 = (o3 != o4) || (o3 == 0);

    if (o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) {
        if (o1 != o2 && o3 != o4) {
            // proper crossing: solve the 2x2 system
            Point2 r = b - a, s = d - c;
            double denom = r.cross(s);
            double t = (c - a).cross(s) / denom;
            return {IntersectionType::ProperPoint, a + r * t, {}};
        }
        return {};
    }

    // Some endpoint is collinear with the other segment: touching cases.
    (void)straddle1;
    (void)straddle2;
    auto endpoint_touch = [&](const Point2& p, const Segment& host,
                              const Segment& owner) -> std::optional<Point2> {
        // p is an endpoint of `owner`; does it lie on `host`?
        if (orient(host.a, host.b, p) != 0) return std::nullopt;
        if (!on_segment_collinear(host, p)) return std::nullopt;
        (void)owner;
        return p;
    };

    std::optional<Point2> touch;
    if (o1 == 0) touch = endpoint_touch(c, s1, s2);
    if (!touch && o2 == 0) touch = endpoint_touch(d, s1, s2);
    if (!touch && o3 == 0) touch = endpoint_touch(a, s2, s1);
    if (!touch && o4 == 0) touch = endpoint_touch(b, s2, s1);
    if (!touch) return {};

    const Point2& p = *touch;
    bool end1 = (p == a) || (p == b);
    bool end2 = (p == c) || (p == d);
    if (end1 && end2) return {IntersectionType::SharedEndpoint, p, {}};
    // endpoint of one in the interior of the other
    return {IntersectionType::ProperPoint, p, {}};
}

namespace {

struct SegmentRef {
    Segment seg;
    int chain;
    int index_in_chain;
};

std::vector<SegmentRef> segment_refs(const Linkage& l) {
    std::vector<SegmentRef> refs;
    for (size_t ci = 0; ci < l.chains.size(); ++ci) {
        const Chain& c = l.chains[ci];
        for (int k = 0; k < c.segment_count(); ++k)
            refs.push_back({c.segment(k), static_cast<int>(ci), k});
    }
    return refs;
}

bool chain_adjacent(const Chain& c, int ka, int kb) {
    int m = c.segment_count();
    int d = std::abs(ka - kb);
    if (d == 1) return true;
    return c.closed && d == m - 1;
}

}  // namespace

std::optional<SimplicityViolation> find_simplicity_violation(const Linkage& l) {
    auto refs = segment_refs(l);
    int m = static_cast<int>(refs.size());
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const auto& ri = refs[i];
            const auto& rj = refs[j];
            SegmentIntersection hit = segment_intersection(ri.seg, rj.seg);
            if (hit.empty()) continue;
            bool adjacent = ri.chain == rj.chain &&
                            chain_adjacent(l.chains[ri.chain], ri.index_in_chain,
                                           rj.index_in_chain);
            if (adjacent && hit.type == IntersectionType::SharedEndpoint)
                continue;  // the one permitted contact
            return SimplicityViolation{i, j, hit};
        }
    }
    return std::nullopt;
}

bool is_simple(const Linkage& l) { return !find_simplicity_violation(l).has_value(); }

std::string validate_structure(const Linkage& l) {
    if (l.chains.empty()) return "linkage has no chains";
    for (size_t ci = 0; ci < l.chains.size(); ++ci) {
        const Chain& c = l.chains[ci];
        int min_size = c.closed ? 3 : 2;
        if (c.size() < min_size)
            return "chain " + std::to_string(ci) + ": needs at least " +
                   std::to_string(min_size) + " vertices";
        for (const auto& v : c.vertices)
            if (!std::isfinite(v.x) || !std::isfinite(v.y))
                return "chain " + std::to_string(ci) + ": non-finite coordinate";
        for (int k = 0; k < c.segment_count(); ++k)
            if (c.segment(k).length() == 0.0)
                return "chain " + std::to_string(ci) + ": zero-length segment " +
                       std::to_string(k);
    }
    return {};
}

double interior_angle(const Point2& prev, const Point2& v, const Point2& next) {
    Point2 u = prev - v, w = next - v;
    return std::atan2(std::abs(u.cross(w)), u.dot(w));
}

bool is_straightened(const Chain& chain, double tol) {
    if (chain.closed) throw std::invalid_argument("is_straightened: chain is closed");
    const double pi = std::acos(-1.0);
    for (int k = 1; k + 1 < chain.size(); ++k) {
        double ang = interior_angle(chain.vertices[k - 1], chain.vertices[k],
                                    chain.vertices[k + 1]);
        if (std::abs(pi - ang) > tol) return false;
    }
    return true;
}

bool is_convexified(const Chain& chain, double tol) {
    if (!chain.closed) throw std::invalid_argument("is_convexified: chain is open");
    const double pi = std::acos(-1.0);
    int n = chain.size();
    double total_turn = 0.0;
    int sign = 0;
    for (int k = 0; k < n; ++k) {
        const Point2& p = chain.vertices[(k + n - 1) % n];
        const Point2& v = chain.vertices[k];
        const Point2& q = chain.vertices[(k + 1) % n];
        Point2 e1 = v - p, e2 = q - v;
        double turn = std::atan2(e1.cross(e2), e1.dot(e2));
        total_turn += turn;
        if (std::abs(turn) <= tol) continue;  // straight enough, either sign ok
        int s = turn > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    if (sign == 0) return false;  // fully collinear closed chain is degenerate
    double winding_tol = std::max(0.1, tol * n);
    return std::abs(total_turn - sign * 2.0 * pi) <= winding_tol;
}

Eigen::MatrixXd pairwise_distances(const Linkage& l) {
    auto pts = all_vertices(l);
    int n = static_cast<int>(pts.size());
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            double dist = (pts[i] - pts[j]).norm();
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

}  // namespace unlock
