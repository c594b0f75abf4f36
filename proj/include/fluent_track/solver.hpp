#pragma once

#include "fluent_track/graph.hpp"
#include "fluent_track/params.hpp"
#include "fluent_track/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fluent_track {

/// Vehicles solved ahead of the objects that may ride in them.
struct ContainerSolution {
    std::vector<ContainerTrack> tracks;
    /// Sum of (score - 1) over observed vehicle frames.
    double objective = 0.0;
};

/// Links vehicle detections into container tracks. Object ids count up from `first_object_id`.
ContainerSolution solve_containers(std::span<const Detection> detections, const CameraModel& camera,
                                   const ModelParameters& params, int first_object_id = 0);

struct ObjectPath {
    std::vector<int> nodes;
    /// edges[i] joins nodes[i] and nodes[i + 1].
    std::vector<int> edges;
    double cost = 0.0;
};

struct FlowSolution {
    std::vector<ObjectPath> paths;
    std::vector<int> node_flow;
    std::vector<int> edge_flow;
    int source_flow = 0;
    int sink_flow = 0;
    /// Negated total path cost; larger is better and an empty solution scores 0.
    double objective = 0.0;
};

struct SolveOptions {
    /// Shared bound on contained objects per container and frame.
    int max_contained = 5;
    /// Stop after this many paths; negative means unbounded.
    int max_objects = -1;
};

/// Cost of a node sequence, or +inf if it is not a legal source-to-sink path.
double path_cost(const TransitionGraph& graph, std::span<const int> nodes, std::vector<int>* edges = nullptr);

/**
 * Extracts object paths one at a time.
 *
 * Each round runs a shortest-path DP over the DAG restricted to nodes with
 * spare capacity and accepts the cheapest path while its cost is negative.
 * Ties go to the path ending at, then arriving from, the lowest node id. With
 * a single admissible path per connected component the result is optimal.
 */
FlowSolution solve_objects(const TransitionGraph& graph, const SolveOptions& options = {});

/// Turns paths into per-frame trajectories with ids from `first_object_id`.
std::vector<Trajectory> decode_paths(const TransitionGraph& graph, const FlowSolution& solution,
                                     int first_object_id = 0);

/// Throws InvariantViolation when flow conservation, capacities or CAOG legality fail.
void verify_solution(const TransitionGraph& graph, const FlowSolution& solution, const ModelParameters& params,
                     const SolveOptions& options = {});

enum class InstanceKind {
    SingleObject,         ///< one entry node, so at most one path
    MultiNonInteracting,  ///< disjoint components, each with one entry node
    BindingCapacity,      ///< shared nodes where greedy extraction may be suboptimal
};

struct InstanceSpec {
    InstanceKind kind = InstanceKind::SingleObject;
    int max_frames = 10;
    int max_nodes_per_frame = 12;
};

/// Random Generic-node graph with costs in a range that makes both empty and long paths plausible.
TransitionGraph random_instance(std::uint64_t seed, const InstanceSpec& spec);

struct OracleLimits {
    int max_frames = 10;
    int max_nodes_per_frame = 12;
    int max_objects = 4;
    std::int64_t max_paths = 2'000'000;
};

struct OracleResult {
    double objective = 0.0;
    std::vector<ObjectPath> paths;
    std::int64_t enumerated_paths = 0;
};

/// Exhaustive search over path sets; throws LimitExceeded outside `limits`.
OracleResult brute_force_oracle(const TransitionGraph& graph, const SolveOptions& options = {},
                                const OracleLimits& limits = {});

}  // namespace fluent_track
