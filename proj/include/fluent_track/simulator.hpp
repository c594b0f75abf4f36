#pragma once

#include "fluent_track/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fluent_track {

struct Waypoint {
    int frame = 0;
    Point2 location = Point2::Zero();
};

/// An object moving linearly between waypoints; it exists from the first to the last waypoint frame.
struct ScriptedObject {
    int id = 0;
    ObjectClass cls = ObjectClass::Person;
    std::vector<Waypoint> path;
};

/**
 * An object getting into and optionally out of a vehicle.
 *
 * At `enter` the object is occluded at the vehicle, then contained until
 * `exit - 1`, occluded again at `exit` and visible afterwards. Without an exit
 * the object stays contained until the vehicle disappears.
 */
struct RideEvent {
    int object = 0;
    int vehicle = 0;
    int enter = 0;
    std::optional<int> exit;
};

/// Axis-aligned static obstacle on the ground plane.
struct Occluder {
    Point2 min = Point2::Zero();
    Point2 max = Point2::Zero();
};

/// Static clutter that fires detections with mid-range scores and random pose features every frame.
struct ClutterSource {
    Point2 location = Point2::Zero();
    ObjectClass cls = ObjectClass::Person;
    double score = 0.65;
};

struct ScenarioScript {
    std::string name;
    int frames = 200;
    double frame_rate = 10.0;
    std::vector<ScriptedObject> objects;
    std::vector<RideEvent> rides;
    std::vector<Occluder> occluders;
    std::vector<ClutterSource> clutter;

    /// Throws InputError on unknown references or malformed paths.
    void validate() const;
};

struct NoiseProfile {
    double position_sigma = 0.05;  ///< meters
    double miss_probability = 0.05;
    double false_positives_per_frame = 0.1;
    double descriptor_noise = 0.05;
    double feature_noise = 0.1;
};

struct Simulation {
    CameraModel camera;
    std::vector<Detection> detections;  ///< sorted by frame
    std::vector<Trajectory> ground_truth;
};

/// Camera with 50 pixels per meter, image origin at ground origin.
CameraModel simulation_camera(double frame_rate = 10.0);

Simulation simulate(const ScenarioScript& script, const NoiseProfile& noise, std::uint64_t seed);

/// The 20 named evaluation scenarios.
std::vector<ScenarioScript> standard_suite();

/// Throws InputError for an unknown name.
ScenarioScript find_scenario(const std::string& name);

}  // namespace fluent_track
