#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "test_support.hpp"
#include "unlock/pseudotri.hpp"

using namespace unlock;
using namespace unlock::testing;

namespace {

std::vector<std::pair<int, int>> bars_of(const Linkage& l) {
    auto b = chain_edges(l);
    for (auto& [i, j] : b)
        if (i > j) std::swap(i, j);
    return b;
}

}  // namespace

TEST_CASE("triangle pseudotriangulation") {
    std::vector<Point2> pos{{0, 0}, {4, 0}, {2, 3}};
    auto pt = build_pointed_pseudotriangulation(pos, {{0, 1}, {1, 2}});
    CHECK(pt.edges.size() == 3);
    CHECK(pt.faces.size() == 1);
    CHECK(verify_pseudotriangulation(pos, pt).all_ok());
}

TEST_CASE("four points in convex position") {
    std::vector<Point2> pos{{0, 0}, {3, 0.2}, {3.1, 2.9}, {-0.2, 2.6}};
    auto pt = build_pointed_pseudotriangulation(pos, {});
    CHECK(pt.edges.size() == 5);
    REQUIRE(pt.faces.size() == 2);
    for (const auto& f : pt.faces) {
        CHECK(f.cycle.size() == 3);  // both faces are triangles
        CHECK(f.corners.size() == 3);
    }
    // exactly one diagonal: brute-force confirms only (0,2) or (1,3) qualifies
    int diagonals = 0;
    for (const auto& e : pt.edges)
        if ((e == std::pair<int, int>{0, 2}) || (e == std::pair<int, int>{1, 3})) ++diagonals;
    CHECK(diagonals == 1);
}

TEST_CASE("four points with one interior") {
    std::vector<Point2> pos{{0, 0}, {4, 0.1}, {2.1, 3.2}, {1.9, 1.1}};
    auto pt = build_pointed_pseudotriangulation(pos, {});
    CHECK(pt.edges.size() == 5);
    CHECK(verify_pseudotriangulation(pos, pt).all_ok());
    // the interior vertex is pointed, so one of its three potential spokes
    // is missing
    int spokes = 0;
    for (const auto& e : pt.edges)
        if (e.first == 3 || e.second == 3) ++spokes;
    CHECK(spokes == 2);
}

TEST_CASE("degenerate input is rejected") {
    std::vector<Point2> collinear{{0, 0}, {1, 0}, {2, 0}, {1, 1}};
    CHECK_THROWS_AS(build_pointed_pseudotriangulation(collinear, {}), DegeneratePosition);
}

TEST_CASE("verification flags a full triangulation") {
    // 4 hull points + 1 interior, fully triangulated: 8 edges, interior
    // vertex surrounded (not pointed)
    std::vector<Point2> pos{{0, 0}, {4, 0.1}, {4.2, 4.0}, {-0.3, 3.7}, {2, 1.9}};
    Pseudotriangulation tri;
    tri.n = 5;
    tri.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {1, 4}, {2, 4}, {3, 4}};
    tri.edge_is_bar.assign(8, 0);
    auto rep = verify_pseudotriangulation(pos, tri);
    CHECK(!rep.edge_count_ok);  // 8 != 2*5-3
    CHECK(!rep.pointed_ok);
}

TEST_CASE("verification flags a missing edge") {
    std::vector<Point2> pos{{0, 0}, {4, 0}, {2, 3}};
    auto pt = build_pointed_pseudotriangulation(pos, {{0, 1}, {1, 2}});
    pt.edges.pop_back();
    pt.edge_is_bar.pop_back();
    CHECK(!verify_pseudotriangulation(pos, pt).edge_count_ok);
}

TEST_CASE("triangle minus a hull edge is a one-dof mechanism") {
    std::vector<Point2> pos{{0, 0}, {1, 0}, {1, 1}};
    auto pt = build_pointed_pseudotriangulation(pos, {{0, 1}, {1, 2}});
    Mechanism mech = make_mechanism(pt, pos);
    CHECK(!mech.pt.edge_is_bar[mech.removed_edge]);
    CHECK(mech.pt.edges[mech.removed_edge] == std::pair<int, int>{0, 2});
    CHECK(mech.pin == std::pair<int, int>{0, 1});
    auto v = mechanism_velocity(pos, mech);
    // pinned vertex does not move; removed edge expands
    CHECK(v[0].norm() <= 1e-12);
    Point2 d = pos[0] - pos[2];
    CHECK(d.dot(v[0] - v[2]) > 0.0);
}

TEST_CASE("mechanism velocity annihilates every remaining edge") {
    std::mt19937 rng(41);
    for (int inst = 0; inst < 12; ++inst) {
        Linkage l = random_open_chain(5 + static_cast<int>(rng() % 3), rng);
        auto pos = all_vertices(l);
        auto pt = build_pointed_pseudotriangulation(pos, bars_of(l));
        Mechanism mech = make_mechanism(pt, pos);
        auto v = mechanism_velocity(pos, mech);
        for (size_t e = 0; e < pt.edges.size(); ++e) {
            if (static_cast<int>(e) == mech.removed_edge) continue;
            auto [i, j] = pt.edges[e];
            Point2 d = pos[i] - pos[j];
            CHECK(std::abs(d.dot(v[i] - v[j])) <= 1e-10);
        }
    }
}

TEST_CASE("negating the field shrinks the removed edge") {
    std::vector<Point2> pos{{0, 0}, {1, 0}, {1, 1}};
    auto pt = build_pointed_pseudotriangulation(pos, {{0, 1}, {1, 2}});
    Mechanism mech = make_mechanism(pt, pos);
    auto v = mechanism_velocity(pos, mech);
    auto [hi, hj] = mech.pt.edges[mech.removed_edge];
    Point2 d = pos[hi] - pos[hj];
    Point2 neg = (v[hj] - v[hi]);  // negated relative velocity
    CHECK(d.dot(neg) < 0.0);
}

TEST_CASE("gauge choice changes the field only by a rigid motion") {
    std::mt19937 rng(43);
    Linkage l = random_open_chain(6, rng);
    auto pos = all_vertices(l);
    auto pt = build_pointed_pseudotriangulation(pos, bars_of(l));
    Mechanism m1 = make_mechanism(pt, pos);
    Mechanism m2 = m1;
    m2.pin = {pt.edges.back().first, pt.edges.back().second};
    auto v1 = mechanism_velocity(pos, m1);
    auto v2 = mechanism_velocity(pos, m2);
    // compare induced length derivatives on all vertex pairs, after
    // normalizing both fields by the removed edge's expansion rate
    auto [hi, hj] = m1.pt.edges[m1.removed_edge];
    auto rate = [&](const std::vector<Point2>& v) {
        return (pos[hi] - pos[hj]).dot(v[hi] - v[hj]);
    };
    double r1 = rate(v1), r2 = rate(v2);
    REQUIRE(r1 > 0);
    REQUIRE(r2 > 0);
    for (size_t i = 0; i < pos.size(); ++i)
        for (size_t j = i + 1; j < pos.size(); ++j) {
            Point2 d = pos[i] - pos[j];
            double d1 = d.dot(v1[i] - v1[j]) / r1;
            double d2 = d.dot(v2[i] - v2[j]) / r2;
            CHECK(d1 == doctest::Approx(d2).epsilon(1e-8));
        }
}

TEST_CASE("rank of the gauge-fixed mechanism matrix is 2n-4 plus gauge") {
    std::mt19937 rng(47);
    for (int inst = 0; inst < 8; ++inst) {
        Linkage l = random_open_chain(5 + static_cast<int>(rng() % 4), rng);
        auto pos = all_vertices(l);
        auto pt = build_pointed_pseudotriangulation(pos, bars_of(l));
        Mechanism mech = make_mechanism(pt, pos);  // throws unless nullity is 1
        CHECK(mech.removed_edge >= 0);
    }
}

TEST_CASE("right-angle mechanism flows to bar alignment") {
    std::vector<Point2> pos{{0, 0}, {1, 0}, {1, 1}};
    auto pt = build_pointed_pseudotriangulation(pos, {{0, 1}, {1, 2}});
    Mechanism mech = make_mechanism(pt, pos);
    FlowParams fp;
    fp.snapshot_every = 1000000;
    auto sf = flow_to_alignment(pos, mech, fp, 1e-10, {});
    REQUIRE(sf.event.has_value());
    CHECK(sf.event->vertex == 1);
    // at the event the two bars are aligned: the free vertex reached the
    // far side of its circle around vertex 1
    const auto& at = sf.event->config_at_event;
    const double pi = std::acos(-1.0);
    CHECK(interior_angle(at[0], at[1], at[2]) == doctest::Approx(pi).epsilon(1e-8));
    // endpoint distance grew to |b1| + |b2| = 2
    CHECK((at[0] - at[2]).norm() == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("already aligned start fires an immediate event") {
    // vertex 1 exactly straight, vertex 2 bent: general position holds for
    // the pt build via the bent corner, so construct the pt by hand
    std::vector<Point2> pos{{0, 0}, {1, 0}, {1, 1}, {0.2, 1.4}};
    auto pt = build_pointed_pseudotriangulation(pos, {{0, 1}, {1, 2}, {2, 3}});
    Mechanism mech = make_mechanism(pt, pos);
    // flow once to get any aligned state, then restart from it
    FlowParams fp;
    fp.snapshot_every = 1000000;
    auto sf = flow_to_alignment(pos, mech, fp, 1e-10, {});
    REQUIRE(sf.event.has_value());
    auto sf2 = flow_to_alignment(sf.event->config_at_event, mech, fp, 1e-10, {});
    REQUIRE(sf2.event.has_value());
    CHECK(sf2.event->t_event == 0.0);
    CHECK(sf2.event->vertex == sf.event->vertex);
}

TEST_CASE("termination predicate wins over the alignment event") {
    std::vector<Point2> pos{{0, 0}, {1, 0}, {1, 1}};
    auto pt = build_pointed_pseudotriangulation(pos, {{0, 1}, {1, 2}});
    Mechanism mech = make_mechanism(pt, pos);
    FlowParams fp;
    const double pi = std::acos(-1.0);
    auto nearly_straight = [&](const std::vector<Point2>& s) {
        return std::abs(pi - interior_angle(s[0], s[1], s[2])) <= 1e-3;
    };
    auto sf = flow_to_alignment(pos, mech, fp, 1e-10, nearly_straight);
    CHECK(!sf.event.has_value());  // Terminated
}

TEST_CASE("quadrilateral diagonal flip") {
    // convex quad with diagonal (0,2); drive vertex 1 toward the diagonal by
    // flexing: at collinearity of 0,1,2 the diagonal is replaced by (1,3)
    std::vector<Point2> pos{{0, 0}, {1.2, 0.9}, {2.4, 0}, {1.2, 2.6}};
    Pseudotriangulation pt;
    pt.n = 4;
    pt.edges = {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {0, 3}};
    pt.edge_is_bar = {1, 1, 0, 0, 0};
    REQUIRE(verify_pseudotriangulation(pos, pt).all_ok());

    // fabricate the event: vertex 1 aligned between 0 and 2
    AlignmentEvent ev;
    ev.vertex = 1;
    ev.edge_a = 0;  // (0,1)
    ev.edge_b = 1;  // (1,2)
    // past-event config: vertex 1 pushed slightly through the diagonal
    ev.config_past_event = {{0, 0}, {1.2, -1e-5}, {2.4, 0}, {1.2, 2.6}};
    ev.config_at_event = {{0, 0}, {1.2, 0}, {2.4, 0}, {1.2, 2.6}};

    Pseudotriangulation revised = local_revise(pt, ev);
    CHECK(revised.edges.size() == pt.edges.size());
    CHECK(revised.find_edge(0, 2) == -1);
    CHECK(revised.find_edge(1, 3) >= 0);
    CHECK(verify_pseudotriangulation(ev.config_past_event, revised).all_ok());

    // involution: the reverse crossing restores the original diagonal
    AlignmentEvent back;
    back.vertex = 1;
    back.edge_a = revised.find_edge(0, 1);
    back.edge_b = revised.find_edge(1, 2);
    back.config_past_event = pos;  // pre-event side
    back.config_at_event = ev.config_at_event;
    Pseudotriangulation restored = local_revise(revised, back);
    CHECK(restored.find_edge(0, 2) >= 0);
    CHECK(restored.find_edge(1, 3) == -1);
    CHECK(restored.edges.size() == pt.edges.size());
}

TEST_CASE("streinu unfolds the L-chain in one section") {
    Linkage l{{Chain{{{0, 0}, {1, 0}, {1, 1}}, false}}};
    StreinuParams sp;
    auto st = run_streinu_unfold(l, sp);
    CHECK(st.trace.outcome == Outcome::Unfolded);
    CHECK(st.sections == 1);
    CHECK(is_straightened(st.trace.frames.back().config.chains[0], sp.flow.straight_tol));
}

TEST_CASE("streinu on an already unfolded input takes zero sections") {
    Linkage l{{Chain{{{0, 0}, {1, 0}, {2, 0.0005}}, false}}};
    StreinuParams sp;
    auto st = run_streinu_unfold(l, sp);
    CHECK(st.trace.outcome == Outcome::Unfolded);
    CHECK(st.sections == 0);
}

TEST_CASE("streinu unfolds random chains with expansive traces") {
    std::mt19937 rng(53);
    for (int inst = 0; inst < 3; ++inst) {
        Linkage l = random_open_chain(5, rng);
        StreinuParams sp;
        auto st = run_streinu_unfold(l, sp);
        REQUIRE(st.trace.outcome == Outcome::Unfolded);
        CHECK(st.sections >= 1);
        for (const auto& f : st.trace.frames) CHECK(is_simple(f.config));
        auto rep = check_monotone_expansion(st.trace, 1e-6);
        CHECK(rep.max_violation <= 1e-6);
    }
}
