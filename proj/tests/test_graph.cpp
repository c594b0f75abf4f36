#include "fluent_track/error.hpp"
#include "fluent_track/graph.hpp"

#include <doctest.h>

using namespace fluent_track;
using VS = VisibilityState;

namespace {

CameraModel test_camera() { return CameraModel(Eigen::Vector3d(0.02, 0.02, 1.0).asDiagonal().toDenseMatrix(), 10.0); }

struct Scene {
    std::vector<Detection> detections;
    std::vector<Tracklet> tracklets;
};

/// Adds a person tracklet that moves along x, with one detection per frame.
void add_tracklet(Scene& s, int start, int length, Point2 origin, double step) {
    Tracklet t;
    t.id = static_cast<int>(s.tracklets.size());
    t.start_frame = start;
    for (int i = 0; i < length; ++i) {
        const Point2 g = origin + Point2(step * i, 0.0);
        Detection d;
        d.frame = start + i;
        d.score = 0.9;
        d.bbox = {g.x() * 50.0 - 5.0, g.y() * 50.0 - 20.0, 10.0, 20.0};
        d.descriptor = Eigen::VectorXd::Unit(4, 0);
        t.positions.push_back(g);
        t.boxes.push_back(d.bbox);
        t.scores.push_back(d.score);
        t.detections.push_back(static_cast<int>(s.detections.size()));
        s.detections.push_back(d);
    }
    t.pooled_descriptor = Eigen::VectorXd::Unit(4, 0);
    s.tracklets.push_back(t);
}

ContainerTrack parked_vehicle(int id, Point2 where, int first, int last) {
    ContainerTrack c;
    c.trajectory.object_id = id;
    c.trajectory.cls = ObjectClass::Vehicle;
    for (int f = first; f <= last; ++f) {
        TrackPoint p;
        p.frame = f;
        p.location = where;
        c.trajectory.points.push_back(p);
        c.scores.push_back(0.9);
        c.fluents.push_back(Eigen::VectorXd::Constant(4, 0.1));
    }
    return c;
}

}  // namespace

TEST_CASE("graph bookkeeping") {
    TransitionGraph g;
    GraphNode a;
    a.first_frame = a.last_frame = 0;
    a.locations = {Point2::Zero()};
    GraphNode b = a;
    b.first_frame = b.last_frame = 1;
    const int ia = g.add_node(a);
    const int ib = g.add_node(b);
    CHECK(g.add_edge(ia, ib, {}, 0, -1.0) == 0);
    CHECK_THROWS_AS(g.add_edge(ib, ia, {}, 0, 0.0), InputError);
    CHECK_THROWS_AS(g.add_edge(ia, ia, {}, 0, 0.0), InputError);
    GraphNode bad = a;
    bad.last_frame = 3;
    CHECK_THROWS_AS(g.add_node(bad), InputError);
    CHECK(g.frame_span() == 2);
    CHECK(g.max_nodes_per_frame() == 1);
    CHECK(g.topological_order() == std::vector<int>{0, 1});
    CHECK_NOTHROW(g.check_acyclic());
}

TEST_CASE("without containers or gaps only visible nodes appear") {
    Scene s;
    add_tracklet(s, 0, 5, {1, 1}, 0.1);
    add_tracklet(s, 5, 5, {1.5, 1}, 0.1);
    add_tracklet(s, 2, 6, {8, 8}, 0.1);
    const auto g = build_graph(s.detections, s.tracklets, {}, {}, test_camera(), default_parameters());
    CHECK(g.nodes().size() == 3);
    for (const auto& n : g.nodes()) CHECK(n.state == VS::Visible);
    for (const auto& e : g.edges()) {
        CHECK(g.node(e.from).state == VS::Visible);
        CHECK(g.node(e.to).state == VS::Visible);
    }
}

TEST_CASE("one container yields one contained node per frame") {
    Scene s;
    add_tracklet(s, 0, 4, {1, 1}, 0.1);
    const std::vector<ContainerTrack> cs = {parked_vehicle(0, {2, 1}, 0, 9)};
    const auto g = build_graph(s.detections, s.tracklets, {}, cs, test_camera(), default_parameters());
    int contained = 0;
    for (const auto& n : g.nodes()) {
        if (n.state != VS::Contained) continue;
        ++contained;
        CHECK(n.container == 0);
        CHECK((n.locations[0] - Point2(2, 1)).norm() == 0.0);
        CHECK_FALSE(n.can_enter);
    }
    CHECK(contained == 10);
}

TEST_CASE("containment distance gates the edges") {
    auto params = default_parameters();
    REQUIRE(params.tau_c == 3.0);
    for (double dist : {5.0, 1.0}) {
        Scene s;
        add_tracklet(s, 0, 4, {1, 1}, 0.0);
        const std::vector<ContainerTrack> cs = {parked_vehicle(0, {1 + dist, 1}, 0, 9)};
        const auto g = build_graph(s.detections, s.tracklets, {}, cs, test_camera(), params);
        bool linked = false;
        for (const auto& e : g.edges()) {
            if (g.node(e.from).kind == NodeKind::Track || g.node(e.to).kind == NodeKind::Track) linked = true;
        }
        CAPTURE(dist);
        CHECK(linked == (dist < params.tau_c));
    }
}

TEST_CASE("edges respect the grammar") {
    Scene s;
    add_tracklet(s, 0, 5, {1, 1}, 0.1);
    add_tracklet(s, 12, 5, {2.5, 1}, 0.1);
    add_tracklet(s, 30, 5, {2, 1.5}, 0.0);
    const auto params = default_parameters();
    const auto links = propose_gap_links(s.tracklets, params, 10.0);
    const std::vector<ContainerTrack> cs = {parked_vehicle(0, {2, 2}, 3, 40)};
    const auto g = build_graph(s.detections, s.tracklets, links, cs, test_camera(), params);
    CHECK_NOTHROW(g.check_acyclic());
    for (const auto& e : g.edges()) {
        const auto& a = g.node(e.from);
        const auto& b = g.node(e.to);
        CHECK(b.first_frame > a.last_frame);
        CHECK(params.caog.is_legal(a.state, e.action, b.state));
        CHECK(params.caog.applies_to(e.action, a.cls));
        CHECK(std::abs(e.energy.total - (e.energy.displacement + e.energy.transition + e.energy.visibility +
                                         e.energy.action)) < 1e-9);
        if (b.state == VS::Contained) CHECK((b.locations[0] - cs[0].location(b.first_frame)).norm() < params.tau_c);
    }
}

TEST_CASE("frame inconsistencies are rejected") {
    Scene s;
    add_tracklet(s, 0, 3, {1, 1}, 0.1);
    s.tracklets[0].start_frame = 1;
    CHECK_THROWS_AS(build_graph(s.detections, s.tracklets, {}, {}, test_camera(), default_parameters()), InputError);
}
