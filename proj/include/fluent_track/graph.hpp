#pragma once

#include "fluent_track/energy.hpp"
#include "fluent_track/params.hpp"
#include "fluent_track/tracklets.hpp"
#include "fluent_track/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace fluent_track {

/// A solved container (vehicle) track with the evidence the object stage needs.
struct ContainerTrack {
    Trajectory trajectory;
    /// Detection score per frame; virtual frames carry the track's mean score.
    std::vector<double> scores;
    std::vector<std::optional<Eigen::VectorXd>> fluents;

    bool active(int frame) const;
    const Point2& location(int frame) const;
    double score(int frame) const;
    const Eigen::VectorXd* fluent(int frame) const;
};

enum class NodeKind {
    Track,              ///< a tracklet, contracted into one node
    GapPoint,           ///< one virtual-path frame of a gap link
    ContainerOccluded,  ///< hidden next to a container
    Contained,          ///< inside a container
    Generic,            ///< hand-built instances (tests, oracle benchmarks)
};

struct GraphNode {
    int id = -1;
    NodeKind kind = NodeKind::Generic;
    VisibilityState state = VisibilityState::Visible;
    ObjectClass cls = ObjectClass::Person;
    int first_frame = 0;
    int last_frame = 0;
    /// One location per frame of the span.
    std::vector<Point2> locations;
    int tracklet = -1;
    int gap_link = -1;
    /// Object id of the container for container-side nodes.
    int container = -1;
    int capacity = 1;
    bool can_enter = true;
    bool can_exit = true;

    /// Net cost of the contracted steps inside the span.
    double interior_cost = 0.0;
    EnergyBreakdown interior_energy;
    std::vector<int> interior_actions;
    /// Net cost of the last frame's likelihood when the path ends here.
    double terminal_cost = 0.0;
    EnergyBreakdown terminal_energy;
    int terminal_action = 0;

    int span() const { return last_frame - first_frame + 1; }
};

struct GraphEdge {
    int from = -1;
    int to = -1;
    EnergyBreakdown energy;
    int action = 0;
    /// Energy net of the source node's presence reward.
    double cost = 0.0;
};

/**
 * State-augmented transition DAG.
 *
 * Every edge goes strictly forward in time, so ordering nodes by first frame
 * is a topological order. A path costs
 *   entry + sum(interior) + sum(edge) + terminal(last) + exit
 * and the objective of a set of paths is the negated sum of their costs.
 */
class TransitionGraph {
public:
    int add_node(GraphNode node);
    int add_edge(int from, int to, const EnergyBreakdown& energy, int action, double cost);

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    const GraphNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    const std::vector<int>& in_edges(int node) const { return in_.at(static_cast<std::size_t>(node)); }
    const std::vector<int>& out_edges(int node) const { return out_.at(static_cast<std::size_t>(node)); }

    double entry_cost = 2.0;
    double exit_cost = 2.0;

    /// Node ids sorted by (first_frame, id).
    std::vector<int> topological_order() const;
    /// Throws InputError if some edge does not move forward in time.
    void check_acyclic() const;

    int frame_span() const;
    int max_nodes_per_frame() const;

private:
    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<int>> in_;
    std::vector<std::vector<int>> out_;
};

struct GraphBuildOptions {
    /// When false only Visible tracklet nodes are created.
    bool hidden_states = true;
};

/**
 * Builds the transition graph over object (non-vehicle) tracklets.
 *
 * Visible nodes are contracted tracklets; occluded nodes come from gap-link
 * virtual paths and from the neighborhood of containers; contained nodes sit
 * on container positions, one per container, frame and object class.
 */
TransitionGraph build_graph(std::span<const Detection> detections, std::span<const Tracklet> tracklets,
                            std::span<const GapLink> gap_links, std::span<const ContainerTrack> containers,
                            const CameraModel& camera, const ModelParameters& params,
                            const GraphBuildOptions& options = {});

}  // namespace fluent_track
