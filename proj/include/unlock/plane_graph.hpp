#ifndef UNLOCK_PLANE_GRAPH_HPP
#define UNLOCK_PLANE_GRAPH_HPP

#include <utility>
#include <vector>

#include "unlock/geometry.hpp"

namespace unlock {

// Combinatorial faces of a connected plane graph, extracted by the usual
// half-edge traversal with angular ordering around each vertex. Face
// cycles are vertex sequences; interior faces come out counterclockwise.
struct PlaneFaces {
    std::vector<std::vector<int>> face_vertices;   // cycles
    std::vector<std::vector<int>> face_edges;      // edge id under each cycle step
    int outer_face = -1;                           // negative signed area
};

PlaneFaces trace_faces(const std::vector<Point2>& pos,
                       const std::vector<std::pair<int, int>>& edges);

// Signed area of the closed vertex cycle.
double cycle_signed_area(const std::vector<Point2>& pos, const std::vector<int>& cycle);

}  // namespace unlock

#endif
