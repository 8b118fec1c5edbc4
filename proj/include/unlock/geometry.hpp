#ifndef UNLOCK_GEOMETRY_HPP
#define UNLOCK_GEOMETRY_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace unlock {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2() = default;
    Point2(double x_, double y_) : x(x_), y(y_) {}

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    Point2& operator+=(const Point2& o) { x += o.x; y += o.y; return *this; }

    double dot(const Point2& o) const { return x * o.x + y * o.y; }
    double cross(const Point2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
    // counterclockwise quarter turn
    Point2 rot90() const { return {-y, x}; }

    bool operator==(const Point2& o) const { return x == o.x && y == o.y; }
};

inline Point2 operator*(double s, const Point2& p) { return p * s; }

struct Segment {
    Point2 a;
    Point2 b;
    double length() const { return (b - a).norm(); }
};

// Open chain: >= 2 vertices, consecutive ones distinct.
// Closed chain: >= 3 vertices, the last-to-first segment is implicit.
struct Chain {
    std::vector<Point2> vertices;
    bool closed = false;

    int size() const { return static_cast<int>(vertices.size()); }
    int segment_count() const { return closed ? size() : size() - 1; }
    Segment segment(int k) const {
        return {vertices[k], vertices[(k + 1) % size()]};
    }
};

struct Linkage {
    std::vector<Chain> chains;

    int vertex_count() const {
        int n = 0;
        for (const auto& c : chains) n += c.size();
        return n;
    }
    int segment_count() const {
        int m = 0;
        for (const auto& c : chains) m += c.segment_count();
        return m;
    }
};

// Chains are concatenated in input order; stable global indices for
// struts, traces and stress vectors.
std::vector<Point2> all_vertices(const Linkage& l);
Linkage with_vertices(const Linkage& proto, const std::vector<Point2>& pos);

// Global (vertex i, vertex j) pairs of all chain segments, i/j global ids.
std::vector<std::pair<int, int>> chain_edges(const Linkage& l);

// Global segment list matching chain_edges ordering.
std::vector<Segment> all_segments(const Linkage& l);

enum class IntersectionType { None, ProperPoint, SharedEndpoint, Overlap };

struct SegmentIntersection {
    IntersectionType type = IntersectionType::None;
    Point2 point;      // ProperPoint / SharedEndpoint
    Segment overlap;   // Overlap only

    bool empty() const { return type == IntersectionType::None; }
};

// Sign of the signed area of triangle abc; 0 when the orientation
// magnitude falls below 1e-12 * scale^2 (scale = max coordinate magnitude).
int orient(const Point2& a, const Point2& b, const Point2& c);

// Collinearity threshold used by orient for the given three points.
double collinearity_tolerance(const Point2& a, const Point2& b, const Point2& c);

SegmentIntersection segment_intersection(const Segment& s1, const Segment& s2);

struct SimplicityViolation {
    int segment_a = -1;  // global segment ids
    int segment_b = -1;
    SegmentIntersection hit;
};

// nullopt means the linkage is simple. Any contact between non-adjacent
// segments counts, even a single shared point; the adjacency exemption
// applies only to the shared endpoint of chain-consecutive segments.
std::optional<SimplicityViolation> find_simplicity_violation(const Linkage& l);
bool is_simple(const Linkage& l);

// Structural invariant check (vertex counts, nonzero segment lengths,
// finite coordinates). Returns a diagnostic, empty string when fine.
std::string validate_structure(const Linkage& l);

// Interior angle at vertex v of the wedge (prev, v, next), in [0, pi].
double interior_angle(const Point2& prev, const Point2& v, const Point2& next);

// Open chains only: every interior vertex within tol radians of straight.
bool is_straightened(const Chain& chain, double tol);

// Closed chains only: all turns share a sign (or are within tol of
// straight) and the total turning is one full revolution.
bool is_convexified(const Chain& chain, double tol);

// Entry (i,j) is the distance between global vertices i and j.
Eigen::MatrixXd pairwise_distances(const Linkage& l);

}  // namespace unlock

#endif
