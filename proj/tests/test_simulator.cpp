#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"
#include "fluent_track/io.hpp"
#include "fluent_track/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace fluent_track;
using VS = VisibilityState;

namespace {

NoiseProfile silent() {
    NoiseProfile n;
    n.position_sigma = 0.0;
    n.miss_probability = 0.0;
    n.false_positives_per_frame = 0.0;
    n.descriptor_noise = 0.0;
    n.feature_noise = 0.0;
    return n;
}

Point2 ground_of(const Detection& d, const CameraModel& cam) { return project_to_ground(cam, d.bbox); }

ScenarioScript ride_script() {
    ScenarioScript s;
    s.name = "ride";
    s.frames = 100;
    s.objects = {{10, ObjectClass::Vehicle, {{0, Point2(20, 20)}, {99, Point2(20, 20)}}},
                 {1, ObjectClass::Person, {{0, Point2(10, 15)}, {49, Point2(19, 19)}, {80, Point2(25, 15)}}}};
    s.rides = {{1, 10, 50, 60}};
    return s;
}

}  // namespace

TEST_CASE("noise-free detections sit on the scripted path") {
    ScenarioScript s;
    s.name = "line";
    s.frames = 30;
    s.objects = {{1, ObjectClass::Person, {{0, Point2(2, 5)}, {10, Point2(4, 5)}, {29, Point2(4, 9)}}}};
    const auto sim = simulate(s, silent(), 3);
    REQUIRE(sim.detections.size() == 30);
    for (const auto& d : sim.detections) {
        Point2 expected;
        if (d.frame <= 10) expected = Point2(2 + 0.2 * d.frame, 5);
        else expected = Point2(4, 5 + 4.0 * (d.frame - 10) / 19.0);
        CHECK((ground_of(d, sim.camera) - expected).norm() < 1e-9);
        CHECK(d.pose_feature.has_value());
    }
    REQUIRE(sim.ground_truth.size() == 1);
    CHECK(sim.ground_truth[0].points.size() == 30);
}

TEST_CASE("a ride hides the passenger") {
    const auto sim = simulate(ride_script(), silent(), 1);
    const Trajectory* person = nullptr;
    for (const auto& t : sim.ground_truth) {
        if (t.object_id == 1) person = &t;
    }
    REQUIRE(person != nullptr);
    for (const auto& p : person->points) {
        CAPTURE(p.frame);
        if (p.frame == 50 || p.frame == 60) {
            CHECK(p.state == VS::Occluded);
        } else if (p.frame > 50 && p.frame < 60) {
            CHECK(p.state == VS::Contained);
            CHECK(p.container_id == 10);
            CHECK((p.location - Point2(20, 20)).norm() == 0.0);
        } else {
            CHECK(p.state == VS::Visible);
            CHECK_FALSE(p.container_id.has_value());
        }
    }
    int person_dets_inside = 0;
    for (const auto& d : sim.detections) {
        if (d.cls == ObjectClass::Person && d.frame >= 50 && d.frame <= 60) ++person_dets_inside;
    }
    CHECK(person_dets_inside == 0);

    // The vehicle's fluent signal lights up around the entry.
    bool door_open = false;
    for (const auto& d : sim.detections) {
        if (d.cls == ObjectClass::Vehicle && d.frame == 49) door_open = (*d.vehicle_fluent_feature)[0] == 1.0;
    }
    CHECK(door_open);
}

TEST_CASE("standard suite") {
    const auto suite = standard_suite();
    CHECK(suite.size() == 20);
    std::set<std::string> names;
    for (const auto& s : suite) {
        names.insert(s.name);
        const auto sim = simulate(s, NoiseProfile{}, 11);
        CHECK_FALSE(sim.ground_truth.empty());
        for (std::size_t i = 1; i < sim.detections.size(); ++i) {
            CHECK(sim.detections[i - 1].frame <= sim.detections[i].frame);
        }
    }
    CHECK(names.size() == 20);

    const auto stress = find_scenario("capacity_stress");
    CHECK(stress.rides.size() == 6);
    const auto sim = simulate(stress, NoiseProfile{}, 4);
    std::map<int, int> inside;
    for (const auto& t : sim.ground_truth) {
        for (const auto& p : t.points) inside[p.frame] += p.state == VS::Contained;
    }
    int most = 0;
    for (const auto& [f, n] : inside) most = std::max(most, n);
    CHECK(most == 6);

    CHECK_THROWS_AS(find_scenario("nope"), InputError);
}

TEST_CASE("scripts are validated") {
    auto s = ride_script();
    s.rides[0].vehicle = 1;
    CHECK_THROWS_AS(simulate(s, silent(), 0), InputError);
    s = ride_script();
    s.rides[0].exit = 51;
    CHECK_THROWS_AS(simulate(s, silent(), 0), InputError);
    s = ride_script();
    s.objects[1].path[1].frame = 0;
    CHECK_THROWS_AS(simulate(s, silent(), 0), InputError);
    NoiseProfile bad;
    bad.miss_probability = 1.5;
    CHECK_THROWS_AS(simulate(ride_script(), bad, 0), InputError);
}

TEST_CASE("same seed, same bytes") {
    const auto s = find_scenario("parking_lot_mix");
    const auto serialize = [&](std::uint64_t seed) {
        const auto sim = simulate(s, NoiseProfile{}, seed);
        std::ostringstream out;
        write_detections(out, sim.detections);
        write_trajectories(out, sim.ground_truth, default_caog());
        return out.str();
    };
    CHECK(serialize(99) == serialize(99));
    CHECK(serialize(99) != serialize(100));
}

TEST_CASE("miss and false-positive rates follow the profile") {
    // One always-visible person for 200 frames; pooled over seeds the counts
    // should pass a chi-square test at the 1% level (one degree of freedom).
    ScenarioScript s;
    s.name = "rates";
    s.frames = 200;
    s.objects = {{1, ObjectClass::Person, {{0, Point2(5, 5)}, {199, Point2(30, 5)}}}};
    NoiseProfile noise;
    noise.miss_probability = 0.2;
    noise.false_positives_per_frame = 0.5;
    int hits = 0;
    int false_positives = 0;
    const int seeds = 1000;
    for (int seed = 0; seed < seeds; ++seed) {
        const auto sim = simulate(s, noise, static_cast<std::uint64_t>(seed));
        for (const auto& d : sim.detections) {
            if (d.score >= 0.8) ++hits;
            else ++false_positives;
        }
    }
    const double trials = 200.0 * seeds;
    const double expect_hits = trials * 0.8;
    const double expect_miss = trials * 0.2;
    const double misses = trials - hits;
    const double chi2 = (hits - expect_hits) * (hits - expect_hits) / expect_hits +
                        (misses - expect_miss) * (misses - expect_miss) / expect_miss;
    CHECK(chi2 < 6.635);
    // Poisson total over all frames: mean and variance both trials * 0.5.
    const double mean = trials * 0.5;
    const double z = (false_positives - mean) / std::sqrt(mean);
    CHECK(std::abs(z) < 2.576);
}
