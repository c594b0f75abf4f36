#include "fluent_track/solver.hpp"

#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"
#include "fluent_track/tracklets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <tuple>

namespace fluent_track {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAcceptTolerance = 1e-12;

}  // namespace

ContainerSolution solve_containers(std::span<const Detection> detections, const CameraModel& camera,
                                   const ModelParameters& params, int first_object_id) {
    std::vector<Detection> vehicles;
    for (const auto& d : detections) {
        if (d.cls == ObjectClass::Vehicle) vehicles.push_back(d);
    }
    const auto tracklets = generate_tracklets(vehicles, camera, params);
    auto candidates = find_gap_candidates(tracklets, params, camera.frame_rate());
    std::sort(candidates.begin(), candidates.end(), [](const GapLink& a, const GapLink& b) {
        return std::tie(a.gap_frames, b.similarity, a.before, a.after) <
               std::tie(b.gap_frames, a.similarity, b.before, b.after);
    });
    std::map<int, int> next;
    std::map<int, int> prev;
    for (const auto& c : candidates) {
        if (next.count(c.before) || prev.count(c.after)) continue;
        next[c.before] = c.after;
        prev[c.after] = c.before;
    }

    ContainerSolution out;
    for (const auto& head : tracklets) {
        if (prev.count(head.id)) continue;
        ContainerTrack track;
        track.trajectory.object_id = first_object_id + static_cast<int>(out.tracks.size());
        track.trajectory.cls = ObjectClass::Vehicle;
        std::vector<std::size_t> virtual_frames;
        double score_sum = 0.0;
        int observed = 0;
        const Tracklet* cur = &head;
        while (true) {
            for (int i = 0; i < cur->length(); ++i) {
                const auto& det = vehicles[static_cast<std::size_t>(cur->detections[i])];
                track.trajectory.points.push_back(
                    {cur->start_frame + i, cur->positions[i], VisibilityState::Visible, 0, std::nullopt});
                track.scores.push_back(det.score);
                track.fluents.push_back(det.vehicle_fluent_feature);
                score_sum += det.score;
                out.objective += det.score - 1.0;
                ++observed;
            }
            auto it = next.find(cur->id);
            if (it == next.end()) break;
            const Tracklet* nxt = &tracklets[static_cast<std::size_t>(it->second)];
            for (const auto& [frame, loc] : bspline_fill(*cur, *nxt)) {
                virtual_frames.push_back(track.trajectory.points.size());
                track.trajectory.points.push_back({frame, loc, VisibilityState::Visible, 0, std::nullopt});
                track.scores.push_back(0.0);
                track.fluents.push_back(std::nullopt);
            }
            cur = nxt;
        }
        for (auto i : virtual_frames) track.scores[i] = score_sum / observed;
        out.tracks.push_back(std::move(track));
    }
    return out;
}

double path_cost(const TransitionGraph& graph, std::span<const int> nodes, std::vector<int>* edges) {
    if (nodes.empty()) return kInf;
    const auto& first = graph.node(nodes.front());
    const auto& last = graph.node(nodes.back());
    if (!first.can_enter || !last.can_exit) return kInf;
    double cost = graph.entry_cost + graph.exit_cost + last.terminal_cost;
    if (edges) edges->clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        cost += graph.node(nodes[i]).interior_cost;
        if (i + 1 == nodes.size()) break;
        int chosen = -1;
        for (int e : graph.out_edges(nodes[i])) {
            const auto& edge = graph.edges()[static_cast<std::size_t>(e)];
            if (edge.to != nodes[i + 1]) continue;
            if (chosen < 0 || edge.cost < graph.edges()[static_cast<std::size_t>(chosen)].cost) chosen = e;
        }
        if (chosen < 0) return kInf;
        cost += graph.edges()[static_cast<std::size_t>(chosen)].cost;
        if (edges) edges->push_back(chosen);
    }
    return cost;
}

namespace {

using LedgerKey = std::pair<int, int>;  // (container, frame)

class CapacityState {
public:
    CapacityState(const TransitionGraph& graph, int max_contained)
        : graph_(graph), flow_(graph.nodes().size(), 0), max_contained_(max_contained) {}

    bool available(int v) const {
        const auto& n = graph_.node(v);
        if (flow_[static_cast<std::size_t>(v)] >= n.capacity) return false;
        if (n.kind == NodeKind::Contained) {
            auto it = ledger_.find({n.container, n.first_frame});
            if (it != ledger_.end() && it->second >= max_contained_) return false;
        }
        return true;
    }

    void take(int v) {
        ++flow_[static_cast<std::size_t>(v)];
        const auto& n = graph_.node(v);
        if (n.kind == NodeKind::Contained) ++ledger_[{n.container, n.first_frame}];
    }

    void release(int v) {
        --flow_[static_cast<std::size_t>(v)];
        const auto& n = graph_.node(v);
        if (n.kind == NodeKind::Contained) --ledger_[{n.container, n.first_frame}];
    }

    const std::vector<int>& flow() const { return flow_; }

private:
    const TransitionGraph& graph_;
    std::vector<int> flow_;
    std::map<LedgerKey, int> ledger_;
    int max_contained_;
};

void record_path(FlowSolution& sol, ObjectPath path) {
    for (int e : path.edges) ++sol.edge_flow[static_cast<std::size_t>(e)];
    for (int v : path.nodes) ++sol.node_flow[static_cast<std::size_t>(v)];
    ++sol.source_flow;
    ++sol.sink_flow;
    sol.objective -= path.cost;
    sol.paths.push_back(std::move(path));
}

}  // namespace

FlowSolution solve_objects(const TransitionGraph& graph, const SolveOptions& options) {
    graph.check_acyclic();
    const std::size_t n = graph.nodes().size();
    FlowSolution sol;
    sol.node_flow.assign(n, 0);
    sol.edge_flow.assign(graph.edges().size(), 0);
    CapacityState cap(graph, options.max_contained);
    const auto order = graph.topological_order();

    std::vector<double> best(n);
    std::vector<int> pred(n);
    while (options.max_objects < 0 || static_cast<int>(sol.paths.size()) < options.max_objects) {
        std::fill(best.begin(), best.end(), kInf);
        std::fill(pred.begin(), pred.end(), -1);
        for (int v : order) {
            if (!cap.available(v)) continue;
            const auto& node = graph.node(v);
            const auto vi = static_cast<std::size_t>(v);
            if (node.can_enter) best[vi] = graph.entry_cost + node.interior_cost;
            for (int e : graph.in_edges(v)) {
                const auto& edge = graph.edges()[static_cast<std::size_t>(e)];
                const double from = best[static_cast<std::size_t>(edge.from)];
                if (from == kInf) continue;
                const double c = from + edge.cost + node.interior_cost;
                if (c < best[vi]) {
                    best[vi] = c;
                    pred[vi] = e;
                }
            }
        }
        int end = -1;
        double end_cost = kInf;
        for (std::size_t v = 0; v < n; ++v) {
            const auto& node = graph.nodes()[v];
            if (best[v] == kInf || !node.can_exit) continue;
            const double c = best[v] + node.terminal_cost + graph.exit_cost;
            if (c < end_cost) {
                end_cost = c;
                end = static_cast<int>(v);
            }
        }
        if (end < 0 || end_cost >= -kAcceptTolerance) break;

        ObjectPath path;
        path.cost = end_cost;
        for (int v = end;;) {
            path.nodes.push_back(v);
            const int e = pred[static_cast<std::size_t>(v)];
            if (e < 0) break;
            path.edges.push_back(e);
            v = graph.edges()[static_cast<std::size_t>(e)].from;
        }
        std::reverse(path.nodes.begin(), path.nodes.end());
        std::reverse(path.edges.begin(), path.edges.end());
        for (int v : path.nodes) cap.take(v);
        record_path(sol, std::move(path));
    }
    return sol;
}

std::vector<Trajectory> decode_paths(const TransitionGraph& graph, const FlowSolution& solution,
                                     int first_object_id) {
    std::vector<Trajectory> out;
    for (std::size_t p = 0; p < solution.paths.size(); ++p) {
        const auto& path = solution.paths[p];
        Trajectory t;
        t.object_id = first_object_id + static_cast<int>(p);
        t.cls = graph.node(path.nodes.front()).cls;
        for (std::size_t i = 0; i < path.nodes.size(); ++i) {
            const auto& node = graph.node(path.nodes[i]);
            for (int f = node.first_frame; f <= node.last_frame; ++f) {
                TrackPoint pt;
                pt.frame = f;
                pt.location = node.locations[static_cast<std::size_t>(f - node.first_frame)];
                pt.state = node.state;
                if (f < node.last_frame) {
                    const auto k = static_cast<std::size_t>(f - node.first_frame);
                    pt.action = k < node.interior_actions.size() ? node.interior_actions[k] : 0;
                } else if (i < path.edges.size()) {
                    pt.action = graph.edges()[static_cast<std::size_t>(path.edges[i])].action;
                } else {
                    pt.action = node.terminal_action;
                }
                if (node.state == VisibilityState::Contained) pt.container_id = node.container;
                t.points.push_back(std::move(pt));
            }
        }
        out.push_back(std::move(t));
    }
    return out;
}

void verify_solution(const TransitionGraph& graph, const FlowSolution& solution, const ModelParameters& params,
                     const SolveOptions& options) {
    const std::size_t n = graph.nodes().size();
    if (solution.node_flow.size() != n || solution.edge_flow.size() != graph.edges().size()) {
        throw InvariantViolation("flow vectors do not match the graph");
    }
    std::vector<int> node_flow(n, 0);
    std::vector<int> edge_flow(graph.edges().size(), 0);
    std::vector<int> starts(n, 0);
    std::vector<int> ends(n, 0);
    std::map<LedgerKey, int> ledger;
    const auto& caog = params.caog;
    double total = 0.0;
    for (const auto& path : solution.paths) {
        if (path.nodes.empty() || path.edges.size() + 1 != path.nodes.size()) {
            throw InvariantViolation("malformed path");
        }
        ++starts[static_cast<std::size_t>(path.nodes.front())];
        ++ends[static_cast<std::size_t>(path.nodes.back())];
        for (std::size_t i = 0; i < path.nodes.size(); ++i) {
            const auto& node = graph.node(path.nodes[i]);
            ++node_flow[static_cast<std::size_t>(node.id)];
            if (node.kind == NodeKind::Contained) ++ledger[{node.container, node.first_frame}];
            for (int a : node.interior_actions) {
                if (!caog.is_legal(node.state, a, node.state) || !caog.applies_to(a, node.cls)) {
                    throw InvariantViolation("illegal action inside node " + std::to_string(node.id));
                }
            }
            if (i < path.edges.size()) {
                const auto& e = graph.edges()[static_cast<std::size_t>(path.edges[i])];
                if (e.from != path.nodes[i] || e.to != path.nodes[i + 1]) {
                    throw InvariantViolation("path edge does not join its nodes");
                }
                ++edge_flow[static_cast<std::size_t>(path.edges[i])];
                const auto& to = graph.node(e.to);
                if (!caog.is_legal(node.state, e.action, to.state) || !caog.applies_to(e.action, node.cls)) {
                    throw InvariantViolation("illegal transition on edge " + std::to_string(path.edges[i]));
                }
            } else if (!caog.is_legal(node.state, node.terminal_action, node.state)) {
                throw InvariantViolation("illegal terminal action at node " + std::to_string(node.id));
            }
        }
        const double c = path_cost(graph, path.nodes);
        if (!std::isfinite(c) || std::abs(c - path.cost) > 1e-9) {
            throw InvariantViolation("path cost does not match its nodes");
        }
        total += c;
    }
    for (std::size_t v = 0; v < n; ++v) {
        int in = starts[v];
        int out = ends[v];
        for (int e : graph.in_edges(static_cast<int>(v))) in += edge_flow[static_cast<std::size_t>(e)];
        for (int e : graph.out_edges(static_cast<int>(v))) out += edge_flow[static_cast<std::size_t>(e)];
        if (in != node_flow[v] || out != node_flow[v]) {
            throw InvariantViolation("flow not conserved at node " + std::to_string(v));
        }
        if (node_flow[v] != solution.node_flow[v]) throw InvariantViolation("recorded node flow is stale");
        const auto& node = graph.nodes()[v];
        const int unit = (node.kind == NodeKind::Track || node.kind == NodeKind::GapPoint) ? 1 : node.capacity;
        if (node_flow[v] > std::min(unit, node.capacity)) {
            throw InvariantViolation("capacity exceeded at node " + std::to_string(v));
        }
    }
    if (edge_flow != solution.edge_flow) throw InvariantViolation("recorded edge flow is stale");
    for (const auto& [key, count] : ledger) {
        if (count > options.max_contained) {
            throw InvariantViolation("container " + std::to_string(key.first) + " holds " + std::to_string(count) +
                                     " objects at frame " + std::to_string(key.second));
        }
    }
    const int np = static_cast<int>(solution.paths.size());
    if (solution.source_flow != np || solution.sink_flow != np) {
        throw InvariantViolation("source and sink flow differ from the path count");
    }
    if (std::abs(-total - solution.objective) > 1e-9) throw InvariantViolation("objective does not match paths");
}

namespace {

GraphNode generic_node(int frame, int slot, std::mt19937_64& rng, int capacity) {
    std::uniform_real_distribution<double> interior(-1.5, 1.0);
    std::uniform_real_distribution<double> terminal(-0.5, 0.5);
    GraphNode n;
    n.kind = NodeKind::Generic;
    n.first_frame = n.last_frame = frame;
    n.locations = {Point2(frame, slot)};
    n.capacity = capacity;
    n.interior_cost = interior(rng);
    n.terminal_cost = terminal(rng);
    n.can_enter = false;
    n.can_exit = false;
    return n;
}

/// Adds one layered component and returns its node ids per frame.
std::vector<std::vector<int>> add_component(TransitionGraph& g, std::mt19937_64& rng, int first_frame,
                                            int frames, int max_per_frame, int entries, int max_out,
                                            int capacity) {
    std::uniform_int_distribution<int> width(1, max_per_frame);
    std::uniform_real_distribution<double> edge_cost(-1.0, 1.0);
    std::bernoulli_distribution exit_flag(0.4);
    std::vector<std::vector<int>> layers(static_cast<std::size_t>(frames));
    for (int f = 0; f < frames; ++f) {
        const int k = width(rng);
        for (int s = 0; s < k; ++s) {
            auto node = generic_node(first_frame + f, s, rng, capacity);
            node.can_exit = f == frames - 1 || exit_flag(rng);
            node.can_enter = f == 0 && s < entries;
            layers[static_cast<std::size_t>(f)].push_back(g.add_node(std::move(node)));
        }
    }
    for (int f = 0; f + 1 < frames; ++f) {
        const auto& next = layers[static_cast<std::size_t>(f + 1)];
        for (int v : layers[static_cast<std::size_t>(f)]) {
            std::vector<int> targets = next;
            std::shuffle(targets.begin(), targets.end(), rng);
            std::uniform_int_distribution<int> degree(1, std::min<int>(max_out, static_cast<int>(targets.size())));
            const int d = degree(rng);
            std::sort(targets.begin(), targets.begin() + d);
            for (int i = 0; i < d; ++i) g.add_edge(v, targets[static_cast<std::size_t>(i)], {}, 0, edge_cost(rng));
        }
    }
    return layers;
}

}  // namespace

TransitionGraph random_instance(std::uint64_t seed, const InstanceSpec& spec) {
    if (spec.max_frames < 1 || spec.max_nodes_per_frame < 1) throw InputError("instance spec must be positive");
    std::mt19937_64 rng(seed);
    TransitionGraph g;
    g.entry_cost = 2.0;
    g.exit_cost = 2.0;
    std::uniform_int_distribution<int> frames_dist(1, spec.max_frames);
    switch (spec.kind) {
        case InstanceKind::SingleObject:
            add_component(g, rng, 0, frames_dist(rng), spec.max_nodes_per_frame, 1, 2, 1);
            break;
        case InstanceKind::MultiNonInteracting: {
            const int comps = std::uniform_int_distribution<int>(2, 4)(rng);
            const int per = std::max(1, std::min(3, spec.max_nodes_per_frame / comps));
            for (int c = 0; c < comps; ++c) {
                const int frames = frames_dist(rng);
                const int start = std::uniform_int_distribution<int>(0, spec.max_frames - frames)(rng);
                add_component(g, rng, start, frames, per, 1, 2, 1);
            }
            break;
        }
        case InstanceKind::BindingCapacity: {
            const int frames = std::min(spec.max_frames, std::uniform_int_distribution<int>(2, 6)(rng));
            const int width = std::min(spec.max_nodes_per_frame, 4);
            add_component(g, rng, 0, frames, width, width, 3, 1);
            break;
        }
    }
    return g;
}

}  // namespace fluent_track
