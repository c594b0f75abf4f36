#pragma once

#include "fluent_track/graph.hpp"
#include "fluent_track/params.hpp"
#include "fluent_track/solver.hpp"
#include "fluent_track/types.hpp"

#include <span>
#include <vector>

namespace fluent_track {

struct TrackerOptions {
    /// When false only visible detections are tracked (no occluded or contained states).
    bool hidden_states = true;
    /// Run verify_solution on the object flow.
    bool verify = true;
};

struct TrackingResult {
    /// Vehicles first, then the remaining objects, ids ascending.
    std::vector<Trajectory> trajectories;
    std::vector<CausalParseGraph> parse_graphs;
    ContainerSolution containers;
    TransitionGraph graph;
    FlowSolution flow;
};

/// Containers, then tracklets and gap links, then the object flow and its parse graphs.
TrackingResult joint_solve(std::span<const Detection> detections, const CameraModel& camera,
                           const ModelParameters& params, const TrackerOptions& options = {});

}  // namespace fluent_track
