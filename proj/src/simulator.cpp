#include "fluent_track/simulator.hpp"

#include "fluent_track/caog.hpp"
#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"
#include "fluent_track/params.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace fluent_track {

namespace {

constexpr double kPixelsPerMeter = 50.0;
constexpr int kDescriptorDim = 32;
constexpr int kFluentDim = 4;
const Point2 kCameraPoint(20.0, 0.0);
constexpr double kBodyRadius = 0.3;

struct ClassShape {
    double width;
    double height;
};

ClassShape shape(ObjectClass cls) {
    switch (cls) {
        case ObjectClass::Person: return {0.6, 1.8};
        case ObjectClass::Vehicle: return {4.5, 1.6};
        case ObjectClass::Suitcase: return {0.5, 0.6};
    }
    return {1.0, 1.0};
}

struct FrameState {
    bool present = false;
    Point2 location = Point2::Zero();
    VisibilityState state = VisibilityState::Visible;
    int action = action_id::kWalking;
    int pose_action = action_id::kWalking;
    std::optional<int> container;
    bool scripted_hidden = false;
};

Point2 interpolate(const std::vector<Waypoint>& path, int frame) {
    if (frame <= path.front().frame) return path.front().location;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (frame <= path[i].frame) {
            const auto& a = path[i - 1];
            const auto& b = path[i];
            const double t = static_cast<double>(frame - a.frame) / (b.frame - a.frame);
            return a.location + t * (b.location - a.location);
        }
    }
    return path.back().location;
}

bool segment_hits_box(const Point2& p, const Point2& q, const Occluder& box) {
    double t0 = 0.0;
    double t1 = 1.0;
    const Point2 d = q - p;
    for (int k = 0; k < 2; ++k) {
        if (std::abs(d[k]) < 1e-12) {
            if (p[k] < box.min[k] || p[k] > box.max[k]) return false;
            continue;
        }
        double a = (box.min[k] - p[k]) / d[k];
        double b = (box.max[k] - p[k]) / d[k];
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        if (t0 > t1) return false;
    }
    return true;
}

double point_segment_distance(const Point2& x, const Point2& p, const Point2& q) {
    const Point2 d = q - p;
    const double t = std::clamp((x - p).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (x - (p + t * d)).norm();
}

Eigen::VectorXd unit_gaussian(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = n(rng);
    return v.normalized();
}

Eigen::VectorXd jitter(const Eigen::VectorXd& v, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    Eigen::VectorXd out = v;
    for (int i = 0; i < out.size(); ++i) out[i] += n(rng);
    return out;
}

Eigen::VectorXd random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 2.5);
    Eigen::VectorXd v(4);
    for (int i = 0; i < 4; ++i) v[i] = u(rng);
    return v;
}

BBox box_at(const Point2& ground, ObjectClass cls) {
    const auto s = shape(cls);
    const double w = s.width * kPixelsPerMeter;
    const double h = s.height * kPixelsPerMeter;
    const double u = ground.x() * kPixelsPerMeter;
    const double v = ground.y() * kPixelsPerMeter;
    return {u - w / 2.0, v - h, w, h};
}

}  // namespace

void ScenarioScript::validate() const {
    if (frames < 1) throw InputError("scenario '" + name + "' needs at least one frame");
    if (frame_rate <= 0.0) throw InputError("scenario '" + name + "' needs a positive frame rate");
    std::map<int, const ScriptedObject*> ids;
    for (const auto& o : objects) {
        if (!ids.emplace(o.id, &o).second) throw InputError("duplicate scripted object id " + std::to_string(o.id));
        if (o.path.empty()) throw InputError("scripted object " + std::to_string(o.id) + " has no path");
        for (std::size_t i = 1; i < o.path.size(); ++i) {
            if (o.path[i].frame <= o.path[i - 1].frame) {
                throw InputError("scripted object " + std::to_string(o.id) + " path frames must increase");
            }
        }
        if (o.path.front().frame < 0 || o.path.back().frame >= frames) {
            throw InputError("scripted object " + std::to_string(o.id) + " leaves the frame range");
        }
    }
    for (const auto& r : rides) {
        auto o = ids.find(r.object);
        auto v = ids.find(r.vehicle);
        if (o == ids.end() || v == ids.end()) throw InputError("ride references an unknown object");
        if (v->second->cls != ObjectClass::Vehicle) throw InputError("ride target is not a vehicle");
        if (o->second->cls == ObjectClass::Vehicle) throw InputError("vehicles cannot ride vehicles");
        const auto& vp = v->second->path;
        const int last = r.exit.value_or(vp.back().frame);
        if (r.enter < vp.front().frame || last > vp.back().frame || (r.exit && *r.exit <= r.enter + 1)) {
            throw InputError("ride of object " + std::to_string(r.object) + " is outside the vehicle lifetime");
        }
        if (r.exit && *r.exit >= o->second->path.back().frame) {
            throw InputError("object " + std::to_string(r.object) + " must reappear after its exit");
        }
    }
    for (const auto& occ : occluders) {
        if (occ.min.x() > occ.max.x() || occ.min.y() > occ.max.y()) throw InputError("occluder box is inverted");
    }
}

CameraModel simulation_camera(double frame_rate) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    h(0, 0) = 1.0 / kPixelsPerMeter;
    h(1, 1) = 1.0 / kPixelsPerMeter;
    return CameraModel(h, frame_rate);
}

Simulation simulate(const ScenarioScript& script, const NoiseProfile& noise, std::uint64_t seed) {
    script.validate();
    if (noise.position_sigma < 0 || noise.miss_probability < 0 || noise.miss_probability > 1 ||
        noise.false_positives_per_frame < 0 || noise.descriptor_noise < 0 || noise.feature_noise < 0) {
        throw InputError("noise profile values must be non-negative probabilities and scales");
    }
    std::mt19937_64 rng(seed);
    const int frames = script.frames;
    const auto models = default_action_models(default_caog());
    std::map<int, const ScriptedObject*> by_id;
    for (const auto& o : script.objects) by_id[o.id] = &o;

    std::map<int, std::vector<FrameState>> timeline;
    for (const auto& o : script.objects) {
        auto& tl = timeline[o.id];
        tl.resize(static_cast<std::size_t>(frames));
        for (int f = o.path.front().frame; f <= o.path.back().frame; ++f) {
            tl[f].present = true;
            tl[f].location = interpolate(o.path, f);
        }
    }

    // Vehicle fluent signal per vehicle and frame: door, trunk, ingress, egress.
    std::map<int, std::vector<Eigen::Vector4d>> fluent;
    for (const auto& o : script.objects) {
        if (o.cls == ObjectClass::Vehicle) fluent[o.id].assign(static_cast<std::size_t>(frames), Eigen::Vector4d::Zero());
    }
    const auto mark = [&](int vehicle, int from, int to, int channel) {
        for (int f = std::max(0, from); f <= std::min(frames - 1, to); ++f) fluent[vehicle][f][channel] = 1.0;
    };

    for (const auto& r : script.rides) {
        auto& tl = timeline[r.object];
        const auto& veh = timeline[r.vehicle];
        const int vehicle_end = by_id[r.vehicle]->path.back().frame;
        const int end = r.exit.value_or(vehicle_end);
        const bool person = by_id[r.object]->cls == ObjectClass::Person;
        const int opening = person ? action_id::kOpenVehicleDoor : action_id::kOpenTrunk;
        const int entering = person ? action_id::kEnterVehicle : action_id::kLoadBaggage;
        const int exiting = person ? action_id::kExitVehicle : action_id::kUnloadBaggage;
        const int closing = person ? action_id::kCloseVehicleDoor : action_id::kCloseTrunk;
        const int access = person ? 0 : 1;

        for (int f = r.enter; f <= end; ++f) {
            auto& s = tl[f];
            s.present = true;
            s.scripted_hidden = true;
            s.location = veh[f].location;
            s.state = VisibilityState::Contained;
            s.container = r.vehicle;
        }
        tl[r.enter].state = VisibilityState::Occluded;
        tl[r.enter].container.reset();
        tl[r.enter].action = entering;
        if (!r.exit) {
            for (int f = end + 1; f < frames; ++f) tl[f].present = false;
        } else {
            tl[end].state = VisibilityState::Occluded;
            tl[end].container.reset();
            tl[end].action = exiting;
            tl[end - 1].action = exiting;
            for (int f = end + 1; f <= std::min(frames - 1, end + 2); ++f) tl[f].pose_action = closing;
            mark(r.vehicle, end - 1, end + 2, access);
            mark(r.vehicle, end - 1, end + 1, 3);
        }
        if (r.enter - 1 >= 0) {
            tl[r.enter - 1].action = entering;
            tl[r.enter - 1].pose_action = entering;
        }
        for (int f = std::max(0, r.enter - 4); f <= r.enter - 2; ++f) {
            if (!tl[f].present || tl[f].scripted_hidden) continue;
            tl[f].action = opening;
            tl[f].pose_action = opening;
        }
        mark(r.vehicle, r.enter - 3, r.enter + 1, access);
        mark(r.vehicle, r.enter - 1, r.enter + 1, 2);
    }

    // Line-of-sight occlusion by obstacles and by other people or luggage.
    for (int f = 0; f < frames; ++f) {
        for (const auto& o : script.objects) {
            auto& s = timeline[o.id][f];
            if (!s.present || s.scripted_hidden || o.cls == ObjectClass::Vehicle) continue;
            bool blocked = false;
            for (const auto& occ : script.occluders) blocked = blocked || segment_hits_box(kCameraPoint, s.location, occ);
            const double my_range = ground_distance(kCameraPoint, s.location);
            for (const auto& other : script.objects) {
                if (blocked || other.id == o.id || other.cls == ObjectClass::Vehicle) continue;
                const auto& t = timeline[other.id][f];
                if (!t.present || t.scripted_hidden) continue;
                if (ground_distance(kCameraPoint, t.location) < my_range - 2.0 * kBodyRadius &&
                    point_segment_distance(t.location, kCameraPoint, s.location) < kBodyRadius) {
                    blocked = true;
                }
            }
            if (blocked) s.state = VisibilityState::Occluded;
        }
    }

    Simulation sim{simulation_camera(script.frame_rate), {}, {}};
    for (const auto& o : script.objects) {
        Trajectory t;
        t.object_id = o.id;
        t.cls = o.cls;
        for (int f = 0; f < frames; ++f) {
            const auto& s = timeline[o.id][f];
            if (!s.present) continue;
            t.points.push_back({f, s.location, s.state, s.action, s.container});
        }
        sim.ground_truth.push_back(std::move(t));
    }

    std::map<int, Eigen::VectorXd> appearance;
    for (const auto& o : script.objects) appearance[o.id] = unit_gaussian(rng, kDescriptorDim);
    std::vector<Eigen::VectorXd> clutter_appearance;
    for (std::size_t i = 0; i < script.clutter.size(); ++i) {
        clutter_appearance.push_back(unit_gaussian(rng, kDescriptorDim));
    }

    std::normal_distribution<double> pos(0.0, noise.position_sigma);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> true_score(0.8, 0.99);
    std::uniform_real_distribution<double> fp_score(0.3, 0.7);
    std::uniform_real_distribution<double> scene_x(0.0, 40.0);
    std::uniform_real_distribution<double> scene_y(0.0, 30.0);
    std::poisson_distribution<int> fp_count(noise.false_positives_per_frame);
    std::normal_distribution<double> clutter_score(0.0, 0.03);

    const auto emit = [&](int frame, const Point2& ground, ObjectClass cls, double score,
                          const Eigen::VectorXd& descriptor) -> Detection& {
        Detection d;
        d.frame = frame;
        const Point2 noisy(ground.x() + pos(rng), ground.y() + pos(rng));
        d.bbox = box_at(noisy, cls);
        d.cls = cls;
        d.score = score;
        d.descriptor = jitter(descriptor, noise.descriptor_noise, rng).normalized();
        sim.detections.push_back(std::move(d));
        return sim.detections.back();
    };

    for (int f = 0; f < frames; ++f) {
        for (const auto& o : script.objects) {
            const auto& s = timeline[o.id][f];
            if (!s.present || s.state != VisibilityState::Visible) continue;
            if (unit(rng) < noise.miss_probability) continue;
            auto& d = emit(f, s.location, o.cls, true_score(rng), appearance[o.id]);
            if (o.cls == ObjectClass::Person) {
                d.pose_feature = jitter(models[static_cast<std::size_t>(s.pose_action)].pose->mean(),
                                        noise.feature_noise, rng);
            } else if (o.cls == ObjectClass::Vehicle) {
                Eigen::VectorXd v = fluent[o.id][f];
                d.vehicle_fluent_feature = jitter(v, noise.feature_noise, rng);
            }
        }
        for (std::size_t c = 0; c < script.clutter.size(); ++c) {
            const auto& src = script.clutter[c];
            if (unit(rng) < noise.miss_probability) continue;
            const double score = std::clamp(src.score + clutter_score(rng), 0.01, 0.99);
            auto& d = emit(f, src.location, src.cls, score, clutter_appearance[c]);
            if (src.cls == ObjectClass::Person) d.pose_feature = random_pose(rng);
            if (src.cls == ObjectClass::Vehicle) d.vehicle_fluent_feature = Eigen::VectorXd::Zero(kFluentDim);
        }
        const int n_fp = fp_count(rng);
        for (int k = 0; k < n_fp; ++k) {
            const Point2 where(scene_x(rng), scene_y(rng));
            auto& d = emit(f, where, ObjectClass::Person, fp_score(rng), unit_gaussian(rng, kDescriptorDim));
            d.pose_feature = random_pose(rng);
        }
    }
    return sim;
}

namespace {

ScriptedObject obj(int id, ObjectClass cls, std::vector<Waypoint> path) { return {id, cls, std::move(path)}; }
ScriptedObject person(int id, std::vector<Waypoint> path) { return obj(id, ObjectClass::Person, std::move(path)); }
ScriptedObject suitcase(int id, std::vector<Waypoint> path) { return obj(id, ObjectClass::Suitcase, std::move(path)); }
ScriptedObject vehicle(int id, std::vector<Waypoint> path) { return obj(id, ObjectClass::Vehicle, std::move(path)); }
ScriptedObject parked(int id, Point2 at, int from = 0, int to = 199) { return vehicle(id, {{from, at}, {to, at}}); }
Waypoint wp(int f, double x, double y) { return {f, Point2(x, y)}; }
ClutterSource clutter(double x, double y) { return {Point2(x, y), ObjectClass::Person, 0.65}; }

ScenarioScript make(std::string name) {
    ScenarioScript s;
    s.name = std::move(name);
    return s;
}

}  // namespace

std::vector<ScenarioScript> standard_suite() {
    std::vector<ScenarioScript> suite;

    auto s = make("walk_single");
    s.objects = {person(1, {wp(0, 2, 12), wp(199, 30, 14)})};
    s.clutter = {clutter(10, 22)};
    suite.push_back(s);

    s = make("walk_pair");
    s.objects = {person(1, {wp(0, 2, 10), wp(199, 30, 10)}), person(2, {wp(20, 36, 16), wp(199, 8, 18)})};
    s.clutter = {clutter(25, 25)};
    suite.push_back(s);

    s = make("walk_crowd");
    s.objects = {person(1, {wp(0, 2, 8), wp(190, 28, 9)}),      person(2, {wp(10, 38, 12), wp(199, 12, 13)}),
                 person(3, {wp(0, 5, 20), wp(180, 30, 24)}),    person(4, {wp(15, 35, 27), wp(199, 10, 22)}),
                 person(5, {wp(30, 24, 28), wp(199, 26, 5)}),   person(6, {wp(40, 3, 15), wp(199, 18, 28)})};
    suite.push_back(s);

    s = make("crossing_occlusion");
    s.objects = {person(1, {wp(0, 5, 10), wp(199, 35, 10)}), person(2, {wp(0, 35, 14), wp(199, 5, 14)})};
    s.clutter = {clutter(30, 25)};
    suite.push_back(s);

    s = make("pillar_occlusion");
    s.objects = {person(1, {wp(0, 3, 13), wp(199, 37, 13)})};
    s.occluders = {{Point2(19, 7), Point2(21, 8)}};
    s.clutter = {clutter(8, 24)};
    suite.push_back(s);

    s = make("pillar_two_persons");
    s.objects = {person(1, {wp(0, 3, 12), wp(199, 37, 12)}), person(2, {wp(30, 37, 18), wp(199, 8, 17)})};
    s.occluders = {{Point2(18, 6), Point2(22, 7)}};
    s.clutter = {clutter(6, 26)};
    suite.push_back(s);

    s = make("enter_exit");
    s.objects = {vehicle(10, {wp(0, 20, 20), wp(80, 20, 20), wp(120, 30, 20), wp(199, 30, 20)}),
                 person(1, {wp(0, 8, 17), wp(59, 19, 18.5), wp(150, 29.5, 18.8), wp(199, 36, 13)})};
    s.rides = {{1, 10, 60, 150}};
    suite.push_back(s);

    s = make("enter_depart");
    s.objects = {vehicle(10, {wp(0, 25, 18), wp(100, 25, 18), wp(170, 40, 18)}),
                 person(1, {wp(0, 10, 24), wp(79, 24, 19.5)})};
    s.rides = {{1, 10, 80, std::nullopt}};
    s.clutter = {clutter(8, 8)};
    suite.push_back(s);

    s = make("pickup_return");
    s.objects = {parked(10, Point2(12, 22)),
                 person(1, {wp(0, 6, 14), wp(49, 11.5, 20.5), wp(120, 12.5, 20.5), wp(199, 22, 10)})};
    s.rides = {{1, 10, 50, 120}};
    s.clutter = {clutter(30, 12)};
    suite.push_back(s);

    s = make("luggage_trunk");
    s.objects = {vehicle(10, {wp(0, 26, 20), wp(110, 26, 20), wp(170, 40, 24)}),
                 person(1, {wp(0, 12, 15), wp(69, 24.5, 19), wp(79, 24.5, 19)}),
                 suitcase(2, {wp(0, 12.5, 15), wp(67, 25, 19)})};
    s.rides = {{2, 10, 68, std::nullopt}, {1, 10, 80, std::nullopt}};
    suite.push_back(s);

    s = make("luggage_unload");
    s.objects = {parked(10, Point2(15, 22)),
                 person(1, {wp(0, 8, 15), wp(49, 14, 20), wp(130, 14, 20), wp(199, 25, 14)}),
                 suitcase(2, {wp(0, 8.5, 15.5), wp(48, 14.5, 20.5), wp(120, 15.5, 20.5), wp(199, 25.5, 14.5)})};
    s.rides = {{2, 10, 50, 120}};
    suite.push_back(s);

    s = make("capacity_stress");
    s.objects = {parked(10, Point2(20, 20)),
                 person(1, {wp(0, 13, 14), wp(39, 18.5, 19)}),  person(2, {wp(0, 28, 12), wp(49, 21.5, 19)}),
                 person(3, {wp(0, 8, 26), wp(59, 18.5, 21)}),   person(4, {wp(0, 32, 27), wp(69, 21.5, 21)}),
                 person(5, {wp(20, 14, 9), wp(79, 19, 18.5)}),  person(6, {wp(30, 26, 9), wp(89, 21, 18.5)})};
    s.rides = {{1, 10, 40, std::nullopt}, {2, 10, 50, std::nullopt}, {3, 10, 60, std::nullopt},
               {4, 10, 70, std::nullopt}, {5, 10, 80, std::nullopt}, {6, 10, 90, std::nullopt}};
    suite.push_back(s);

    s = make("vehicle_swap");
    s.objects = {vehicle(10, {wp(0, 10, 15), wp(60, 10, 15), wp(120, 30, 15), wp(199, 30, 15)}),
                 vehicle(11, {wp(0, 30, 25), wp(60, 30, 25), wp(120, 10, 25), wp(199, 10, 25)}),
                 person(1, {wp(0, 5, 9), wp(39, 9.5, 13.5), wp(150, 30.5, 13.5), wp(199, 35, 8)}),
                 person(2, {wp(0, 38, 29), wp(44, 30.5, 26.5), wp(155, 9.5, 26.5), wp(199, 3, 29)})};
    s.rides = {{1, 10, 40, 150}, {2, 11, 45, 155}};
    suite.push_back(s);

    s = make("parking_lot_mix");
    s.objects = {parked(10, Point2(8, 20)), parked(11, Point2(20, 20)), parked(12, Point2(32, 20)),
                 person(1, {wp(0, 2, 14), wp(199, 38, 14)}),   person(2, {wp(10, 38, 26), wp(199, 4, 26)}),
                 person(3, {wp(0, 26, 8), wp(69, 20.5, 18.5), wp(140, 20.5, 18.5), wp(199, 25, 10)}),
                 person(4, {wp(50, 2, 28), wp(199, 31, 29)})};
    s.rides = {{3, 11, 70, 140}};
    s.clutter = {clutter(14, 8)};
    suite.push_back(s);

    s = make("distractor_walk");
    s.objects = {person(1, {wp(0, 3, 9), wp(199, 33, 11)}), person(2, {wp(30, 36, 20), wp(199, 10, 24)})};
    s.clutter = {clutter(12, 16), clutter(26, 6), clutter(32, 27)};
    suite.push_back(s);

    s = make("distractor_vehicle");
    s.objects = {parked(10, Point2(15, 20)),
                 person(1, {wp(0, 24, 12), wp(59, 16, 18.5), wp(140, 16, 18.5), wp(199, 25, 24)})};
    s.rides = {{1, 10, 60, 140}};
    s.clutter = {clutter(19, 24), clutter(10, 25)};
    suite.push_back(s);

    s = make("long_occlusion");
    s.objects = {person(1, {wp(0, 2, 14), wp(199, 38, 14)})};
    s.occluders = {{Point2(16, 6), Point2(24, 7.5)}};
    suite.push_back(s);

    s = make("pass_by_vehicle");
    s.objects = {parked(10, Point2(20, 18)), person(1, {wp(0, 3, 15), wp(199, 37, 15)}),
                 person(2, {wp(20, 37, 22), wp(199, 5, 22)})};
    s.clutter = {clutter(6, 5)};
    suite.push_back(s);

    s = make("two_vehicles_two_riders");
    s.objects = {vehicle(10, {wp(0, 10, 20), wp(100, 10, 20), wp(160, 2, 28)}),
                 vehicle(11, {wp(0, 30, 20), wp(100, 30, 20), wp(160, 38, 28)}),
                 person(1, {wp(0, 6, 8), wp(69, 11, 18.5)}), person(2, {wp(0, 37, 5), wp(79, 29, 18.5)})};
    s.rides = {{1, 10, 70, std::nullopt}, {2, 11, 80, std::nullopt}};
    suite.push_back(s);

    s = make("drive_through");
    s.objects = {vehicle(10, {wp(20, 0, 20), wp(180, 40, 20)}), person(1, {wp(0, 5, 10), wp(199, 35, 12)}),
                 person(2, {wp(40, 30, 27), wp(199, 6, 26)})};
    s.clutter = {clutter(34, 5)};
    suite.push_back(s);

    for (const auto& sc : suite) sc.validate();
    return suite;
}

ScenarioScript find_scenario(const std::string& name) {
    for (auto& s : standard_suite()) {
        if (s.name == name) return s;
    }
    throw InputError("unknown scenario '" + name + "'");
}

}  // namespace fluent_track
