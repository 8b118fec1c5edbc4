#ifndef UNLOCK_FRAMEWORK_HPP
#define UNLOCK_FRAMEWORK_HPP

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "unlock/geometry.hpp"

namespace unlock {

struct FrameworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StressSolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EdgeKind { Bar, Strut, TautStrut };

struct Edge {
    int i = -1;  // i < j, global vertex ids
    int j = -1;
    EdgeKind kind = EdgeKind::Strut;
};

// Bars are exactly the chain edges of the source linkage; struts are every
// remaining vertex pair, including pairs spanning different chains.
struct Framework {
    int n = 0;
    std::vector<Edge> edges;

    int bar_count() const;
    int strut_count() const { return static_cast<int>(edges.size()) - bar_count(); }
    int find_edge(int i, int j) const;  // -1 when absent
};

Framework build_framework(const Linkage& l);

// Marks strut (i,j) TautStrut when i and j lie on the same chain and every
// interior vertex of a subchain between them is straight within tol (for
// closed chains either arc qualifies). Such a strut cannot strictly expand
// while bars are preserved.
Framework classify_taut_struts(const Linkage& config, Framework fw, double tol);

// Row per edge; row (i,j) carries (p_i - p_j) in i's columns and the
// negation in j's, so (R v) at edge e equals <p_i - p_j, v_i - v_j>.
Eigen::MatrixXd rigidity_matrix(const std::vector<Point2>& pos, const Framework& fw);

struct StressAssignment {
    Eigen::VectorXd omega;       // per edge, framework order
    double normalization = 0.0;  // sum of |omega|
};

// Nonzero equilibrium stress if one exists: strut entries >= 0, vertex
// equilibrium R^T omega = 0, normalized to sum |omega| = 1. Returns nullopt
// when only the zero stress exists (the unlocked certificate). Throws
// StressSolverError on numerical failure.
std::optional<StressAssignment> find_equilibrium_stress(const std::vector<Point2>& pos,
                                                        const Framework& fw);

// Max norm of the per-vertex stress force sums, |R^T omega|_inf.
double equilibrium_residual(const std::vector<Point2>& pos, const Framework& fw,
                            const Eigen::VectorXd& omega);

struct PlanarEdge {
    int i = -1;
    int j = -1;
    int parent = -1;     // edge id in the source framework
    double omega = 0.0;  // force density; scaled so the axial force matches the parent
};

struct PlanarFramework {
    std::vector<Point2> vertices;        // originals first, then crossing points
    int original_vertex_count = 0;
    std::vector<PlanarEdge> edges;
    std::vector<std::vector<int>> faces;       // vertex cycles
    std::vector<std::vector<int>> face_edges;  // edge id per cycle step
    int outer_face = -1;
};

// Subdivides every proper crossing at a new vertex. Requires generic
// position: collinear overlapping edges or three edges through one point
// are rejected with a diagnostic. Each piece carries its parent's axial
// force, which keeps all vertices in equilibrium.
PlanarFramework planarize(const std::vector<Point2>& pos, const Framework& fw,
                          const StressAssignment& stress);

struct Terrain {
    std::vector<Point2> face_gradients;
    std::vector<double> face_offsets;
    std::vector<double> vertex_heights;
};

// Maxwell-Cremona lifting: outer face fixed to the zero plane; crossing
// edge e from its left face L to its right face R changes the gradient by
// omega_e * rot90(edge vector): g_R = g_L + omega * rot90(j - i). Positive
// stress folds concavely across the edge (a mountain), negative convexly
// (a valley). Throws when loop closure fails, i.e. the input was not an
// equilibrium stress.
Terrain maxwell_cremona_lift(const PlanarFramework& pf);

struct LiftReport {
    double max_closure_residual = 0.0;
    bool is_flat = false;
    bool mountain_valley_consistent = false;
};

// Recomputes heights along an independent spanning traversal and checks
// the fold direction of every stressed edge.
LiftReport verify_lift(const PlanarFramework& pf, const Terrain& t, double tol);

}  // namespace unlock

#endif
