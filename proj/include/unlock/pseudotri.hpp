#ifndef UNLOCK_PSEUDOTRI_HPP
#define UNLOCK_PSEUDOTRI_HPP

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "unlock/flow.hpp"
#include "unlock/geometry.hpp"

namespace unlock {

struct DegeneratePosition : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BarsNotExtendable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnexpectedDofCount : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FlipNotUnique : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PseudoFace {
    std::vector<int> cycle;     // ccw vertex cycle
    std::vector<int> corners;   // convex vertices of the cycle, exactly 3 when valid
    std::vector<std::vector<int>> reflex_chains;  // corner-to-corner runs, inclusive
};

struct Pseudotriangulation {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // i < j, includes every bar
    std::vector<char> edge_is_bar;
    std::vector<PseudoFace> faces;           // interior faces only
    int find_edge(int i, int j) const;
};

// Greedy construction: bars plus convex hull edges, then repeatedly the
// shortest non-crossing diagonal that keeps every vertex pointed, until
// 2n - 3 edges. Requires general position (no collinear triple).
Pseudotriangulation build_pointed_pseudotriangulation(
    const std::vector<Point2>& pos, const std::vector<std::pair<int, int>>& bars);

struct PtReport {
    bool edge_count_ok = false;
    bool pointed_ok = false;
    bool faces_ok = false;
    bool all_ok() const { return edge_count_ok && pointed_ok && faces_ok; }
};

PtReport verify_pseudotriangulation(const std::vector<Point2>& pos,
                                    const Pseudotriangulation& pt);

struct Mechanism {
    Pseudotriangulation pt;
    int removed_edge = -1;           // pt edge id, a non-bar hull edge
    std::pair<int, int> pin{-1, -1}; // fixed vertex, direction partner
};

// Removes the lowest-index non-bar hull edge (selectable) and pins the
// gauge at the first bar. The gauge-fixed rigidity nullspace must be
// exactly one-dimensional.
Mechanism make_mechanism(const Pseudotriangulation& pt, const std::vector<Point2>& pos,
                         int hull_edge_override = -1);

// Unit-norm generator of the mechanism's motion, signed so the removed
// hull edge expands.
std::vector<Point2> mechanism_velocity(const std::vector<Point2>& pos,
                                       const Mechanism& mech);

struct AlignmentEvent {
    double t_event = 0.0;
    int vertex = -1;
    int edge_a = -1;  // pt edge ids bounding the reflex gap that closed
    int edge_b = -1;
    std::vector<Point2> config_at_event;
    std::vector<Point2> config_past_event;
};

struct SectionFlow {
    std::vector<std::vector<Point2>> states;  // sampled, including the last
    std::vector<double> times;
    std::optional<AlignmentEvent> event;      // nullopt: terminated by predicate
    double t_end = 0.0;
    int steps = 0;
};

using StatePredicate = std::function<bool(const std::vector<Point2>&)>;

// Integrates the mechanism (RK4 + edge-length projection) watching every
// vertex's reflex gap; bisects the first gap that closes to pi down to
// event_tol. The termination predicate is checked first at every step.
SectionFlow flow_to_alignment(const std::vector<Point2>& pos, const Mechanism& mech,
                              const FlowParams& fp, double event_tol,
                              const StatePredicate& terminated,
                              const StatePredicate& state_ok = {});

// The combinatorial flip at an alignment event: drops the edge the event
// invalidated and inserts the unique diagonal that restores a pointed
// pseudotriangulation just past the event.
Pseudotriangulation local_revise(const Pseudotriangulation& pt, const AlignmentEvent& ev);

// Every (removal, insertion) pair that yields a valid pointed
// pseudotriangulation just past the event, in deterministic order. Near a
// degenerate alignment more than one can verify; the unfolding driver
// keeps the one whose mechanism still moves expansively.
std::vector<Pseudotriangulation> local_revise_candidates(const Pseudotriangulation& pt,
                                                         const AlignmentEvent& ev);

struct StreinuParams {
    FlowParams flow;
    double event_tol = 1e-10;
    int hull_edge_override = -1;
};

struct StreinuTrace {
    MotionTrace trace;
    int sections = 0;
};

// Sectioned unfolding: build / revise the pseudotriangulation, remove a
// hull edge, follow the mechanism to the next alignment, revise, repeat.
// Chain vertices that straighten are carried rigidly on their segment from
// then on (an aligned bar pair can never unbend under expansion).
StreinuTrace run_streinu_unfold(const Linkage& l, const StreinuParams& params);

}  // namespace unlock

#endif
