#include "unlock/plane_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace unlock {

double cycle_signed_area(const std::vector<Point2>& pos, const std::vector<int>& cycle) {
    double a = 0.0;
    int k = static_cast<int>(cycle.size());
    for (int i = 0; i < k; ++i) {
        const Point2& p = pos[cycle[i]];
        const Point2& q = pos[cycle[(i + 1) % k]];
        a += p.cross(q);
    }
    return 0.5 * a;
}

PlaneFaces trace_faces(const std::vector<Point2>& pos,
                       const std::vector<std::pair<int, int>>& edges) {
    const int ne = static_cast<int>(edges.size());
    // half-edge h = 2*e (i->j) or 2*e+1 (j->i)
    auto origin = [&](int h) { return h % 2 == 0 ? edges[h / 2].first : edges[h / 2].second; };
    auto target = [&](int h) { return h % 2 == 0 ? edges[h / 2].second : edges[h / 2].first; };

    // outgoing half-edges per vertex, sorted by direction angle
    std::map<int, std::vector<int>> out;
    for (int h = 0; h < 2 * ne; ++h) out[origin(h)].push_back(h);
    for (auto& [v, hs] : out) {
        std::sort(hs.begin(), hs.end(), [&](int a, int b) {
            Point2 da = pos[target(a)] - pos[origin(a)];
            Point2 db = pos[target(b)] - pos[origin(b)];
            double aa = std::atan2(da.y, da.x), ab = std::atan2(db.y, db.x);
            if (aa != ab) return aa < ab;
            return a < b;
        });
    }

    // next half-edge in face traversal: from twin(h), rotate clockwise
    auto next_in_face = [&](int h) {
        int tw = h ^ 1;
        const auto& hs = out.at(origin(tw));
        auto it = std::find(hs.begin(), hs.end(), tw);
        int idx = static_cast<int>(it - hs.begin());
        int prev = (idx + static_cast<int>(hs.size()) - 1) % static_cast<int>(hs.size());
        return hs[prev];
    };

    PlaneFaces out_faces;
    std::vector<int> face_of(2 * ne, -1);
    for (int h0 = 0; h0 < 2 * ne; ++h0) {
        if (face_of[h0] >= 0) continue;
        std::vector<int> verts, eids;
        int h = h0;
        int guard = 0;
        do {
            face_of[h] = static_cast<int>(out_faces.face_vertices.size());
            verts.push_back(origin(h));
            eids.push_back(h / 2);
            h = next_in_face(h);
            if (++guard > 4 * ne + 8)
                throw std::runtime_error("trace_faces: traversal did not close");
        } while (h != h0);
        out_faces.face_vertices.push_back(std::move(verts));
        out_faces.face_edges.push_back(std::move(eids));
    }

    // outer face: most negative signed area; a cycle-free graph has one
    // face of area zero and that is the outer one
    int outer = 0;
    double lowest = std::numeric_limits<double>::max();
    for (size_t f = 0; f < out_faces.face_vertices.size(); ++f) {
        double a = cycle_signed_area(pos, out_faces.face_vertices[f]);
        if (a < lowest) {
            lowest = a;
            outer = static_cast<int>(f);
        }
    }
    if (out_faces.face_vertices.size() > 1 && lowest >= 0.0)
        throw std::runtime_error("trace_faces: no outer face found");
    out_faces.outer_face = outer;
    return out_faces;
}

}  // namespace unlock
