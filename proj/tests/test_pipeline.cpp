#include "fluent_track/metrics.hpp"
#include "fluent_track/pipeline.hpp"
#include "fluent_track/simulator.hpp"

#include <doctest.h>

#include <map>

using namespace fluent_track;
using VS = VisibilityState;

namespace {

NoiseProfile quiet() {
    NoiseProfile n;
    n.miss_probability = 0.0;
    n.false_positives_per_frame = 0.0;
    return n;
}

}  // namespace

TEST_CASE("an empty scene yields nothing") {
    const auto r = joint_solve(std::vector<Detection>{}, simulation_camera(), default_parameters());
    CHECK(r.trajectories.empty());
    CHECK(r.parse_graphs.empty());
    CHECK(r.flow.objective == 0.0);
}

TEST_CASE("a passenger is tracked through the vehicle") {
    const auto sim = simulate(find_scenario("enter_exit"), quiet(), 8);
    const auto r = joint_solve(sim.detections, sim.camera, default_parameters());
    std::map<int, const ContainerTrack*> vehicles;
    for (const auto& c : r.containers.tracks) vehicles[c.trajectory.object_id] = &c;

    int contained = 0;
    for (const auto& t : r.trajectories) {
        if (t.cls == ObjectClass::Vehicle) continue;
        for (const auto& p : t.points) {
            if (p.state != VS::Contained) continue;
            ++contained;
            REQUIRE(p.container_id.has_value());
            const auto& vehicle = *vehicles.at(*p.container_id);
            CHECK((vehicle.location(p.frame) - p.location).norm() < 1e-9);
        }
    }
    // Ground truth has 89 contained frames (61 to 149).
    CHECK(contained >= 85);

    const auto m = match_frames(frame_table(sim.ground_truth), frame_table(r.trajectories));
    CHECK(m.ids == 0);
}

TEST_CASE("a pillar occlusion keeps one identity") {
    const auto sim = simulate(find_scenario("pillar_occlusion"), quiet(), 5);
    const auto r = joint_solve(sim.detections, sim.camera, default_parameters());
    int people = 0;
    for (const auto& t : r.trajectories) {
        if (t.cls != ObjectClass::Person || t.points.size() < 100) continue;
        ++people;
        std::vector<VS> runs;
        for (const auto& p : t.points) {
            if (runs.empty() || runs.back() != p.state) runs.push_back(p.state);
        }
        CHECK(runs == std::vector<VS>{VS::Visible, VS::Occluded, VS::Visible});
    }
    CHECK(people == 1);
}

TEST_CASE("at most five objects share a vehicle") {
    const auto params = default_parameters();
    REQUIRE(params.max_contained == 5);
    const auto sim = simulate(find_scenario("capacity_stress"), quiet(), 2);
    const auto r = joint_solve(sim.detections, sim.camera, params);
    std::map<std::pair<int, int>, int> inside;
    for (const auto& t : r.trajectories) {
        for (const auto& p : t.points) {
            if (p.state == VS::Contained) ++inside[{*p.container_id, p.frame}];
        }
    }
    int most = 0;
    for (const auto& [key, n] : inside) most = std::max(most, n);
    CHECK(most <= 5);
    CHECK(most >= 4);
}

TEST_CASE("visible-only tracking never hides objects") {
    const auto sim = simulate(find_scenario("pickup_return"), NoiseProfile{}, 3);
    TrackerOptions opts;
    opts.hidden_states = false;
    const auto r = joint_solve(sim.detections, sim.camera, default_parameters(), opts);
    CHECK_FALSE(r.trajectories.empty());
    for (const auto& t : r.trajectories) {
        for (const auto& p : t.points) CHECK(p.state == VS::Visible);
    }
}

TEST_CASE("parse graphs agree with trajectories") {
    const auto sim = simulate(find_scenario("luggage_unload"), NoiseProfile{}, 6);
    const auto params = default_parameters();
    const auto r = joint_solve(sim.detections, sim.camera, params);
    std::map<std::pair<int, int>, const TrackPoint*> points;
    for (const auto& t : r.trajectories) {
        for (const auto& p : t.points) points[{t.object_id, p.frame}] = &p;
    }
    std::size_t entries = 0;
    for (const auto& pg : r.parse_graphs) {
        for (const auto& e : pg.entries) {
            ++entries;
            const auto* p = points.at({e.object_id, pg.frame});
            CHECK(p->state == e.state);
            CHECK(p->action == e.action);
            CHECK(e.action >= 0);
            CHECK(e.action < params.caog.action_count());
        }
    }
    CHECK(entries == points.size());
}
