#include "fluent_track/graph.hpp"

#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

namespace fluent_track {

bool ContainerTrack::active(int frame) const {
    return !trajectory.points.empty() && trajectory.birth() <= frame && frame <= trajectory.death();
}

const Point2& ContainerTrack::location(int frame) const {
    if (!active(frame)) throw InputError("container not active at frame " + std::to_string(frame));
    return trajectory.points[static_cast<std::size_t>(frame - trajectory.birth())].location;
}

double ContainerTrack::score(int frame) const {
    if (!active(frame)) throw InputError("container not active at frame " + std::to_string(frame));
    return scores.at(static_cast<std::size_t>(frame - trajectory.birth()));
}

const Eigen::VectorXd* ContainerTrack::fluent(int frame) const {
    if (!active(frame)) return nullptr;
    const auto& f = fluents.at(static_cast<std::size_t>(frame - trajectory.birth()));
    return f ? &*f : nullptr;
}

int TransitionGraph::add_node(GraphNode node) {
    if (node.last_frame < node.first_frame) throw InputError("node span is empty");
    if (static_cast<int>(node.locations.size()) != node.span()) {
        throw InputError("node needs one location per frame of its span");
    }
    node.id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(node));
    in_.emplace_back();
    out_.emplace_back();
    return nodes_.back().id;
}

int TransitionGraph::add_edge(int from, int to, const EnergyBreakdown& energy, int action, double cost) {
    const int n = static_cast<int>(nodes_.size());
    if (from < 0 || from >= n || to < 0 || to >= n) throw InputError("edge endpoint out of range");
    if (nodes_[to].first_frame <= nodes_[from].last_frame) {
        throw InputError("edge must move forward in time");
    }
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({from, to, energy, action, cost});
    out_[from].push_back(id);
    in_[to].push_back(id);
    return id;
}

std::vector<int> TransitionGraph::topological_order() const {
    std::vector<int> order(nodes_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return nodes_[a].first_frame < nodes_[b].first_frame; });
    return order;
}

void TransitionGraph::check_acyclic() const {
    for (const auto& e : edges_) {
        if (nodes_[e.to].first_frame <= nodes_[e.from].last_frame) {
            throw InputError("transition graph has an edge backwards in time (cycle)");
        }
    }
}

int TransitionGraph::frame_span() const {
    if (nodes_.empty()) return 0;
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::min();
    for (const auto& n : nodes_) {
        lo = std::min(lo, n.first_frame);
        hi = std::max(hi, n.last_frame);
    }
    return hi - lo + 1;
}

int TransitionGraph::max_nodes_per_frame() const {
    std::map<int, int> count;
    for (const auto& n : nodes_) {
        for (int f = n.first_frame; f <= n.last_frame; ++f) ++count[f];
    }
    int best = 0;
    for (const auto& [f, c] : count) best = std::max(best, c);
    return best;
}

namespace {

struct StepChoice {
    EnergyBreakdown energy;
    int action = -1;
};

class GraphBuilder {
public:
    GraphBuilder(std::span<const Detection> detections, std::span<const Tracklet> tracklets,
                 std::span<const GapLink> links, std::span<const ContainerTrack> containers,
                 const CameraModel& camera, const ModelParameters& params)
        : detections_(detections),
          tracklets_(tracklets),
          links_(links),
          containers_(containers),
          params_(params),
          fps_(camera.frame_rate()) {
        for (std::size_t i = 0; i < containers_.size(); ++i) {
            container_index_[containers_[i].trajectory.object_id] = static_cast<int>(i);
        }
    }

    TransitionGraph build(const GraphBuildOptions& options) {
        graph_.entry_cost = params_.entry_exit_cost;
        graph_.exit_cost = params_.entry_exit_cost;
        std::map<int, int> track_node;
        for (const auto& t : tracklets_) {
            if (t.cls == ObjectClass::Vehicle) throw InputError("vehicle tracklets belong to the container stage");
            track_node[t.id] = add_track_node(t);
        }
        std::map<int, const Tracklet*> by_id;
        for (const auto& t : tracklets_) by_id[t.id] = &t;

        for (std::size_t li = 0; li < links_.size(); ++li) {
            const auto& link = links_[li];
            const auto& a = *by_id.at(link.before);
            const auto& b = *by_id.at(link.after);
            if (link.virtual_path.empty()) {
                connect(track_node.at(a.id), track_node.at(b.id));
                continue;
            }
            if (!options.hidden_states) continue;
            if (static_cast<int>(link.virtual_path.size()) != link.gap_frames - 1) {
                throw InputError("gap link virtual path does not cover the gap");
            }
            int prev = track_node.at(a.id);
            for (const auto& [frame, loc] : link.virtual_path) {
                GraphNode n;
                n.kind = NodeKind::GapPoint;
                n.state = VisibilityState::Occluded;
                n.cls = a.cls;
                n.first_frame = n.last_frame = frame;
                n.locations = {loc};
                n.gap_link = static_cast<int>(li);
                n.can_enter = n.can_exit = false;
                const int id = add_node(std::move(n));
                connect(prev, id);
                prev = id;
            }
            connect(prev, track_node.at(b.id));
        }

        if (options.hidden_states && !containers_.empty()) add_container_nodes(track_node);
        return std::move(graph_);
    }

private:
    NodeObservation observe(const GraphNode& n, int frame, const ContainerTrack* interacting) const {
        NodeObservation obs;
        obs.location = n.locations.at(static_cast<std::size_t>(frame - n.first_frame));
        obs.state = n.state;
        switch (n.kind) {
            case NodeKind::Track: {
                const auto& t = *tracklet_by_id_.at(n.tracklet);
                const int det = t.detections.at(static_cast<std::size_t>(frame - t.start_frame));
                obs.visibility.detection_score = detections_[det].score;
                if (detections_[det].pose_feature) obs.pose_feature = &*detections_[det].pose_feature;
                break;
            }
            case NodeKind::GapPoint:
                obs.visibility.gap_discrepancy = 1.0 - links_[n.gap_link].similarity;
                break;
            case NodeKind::ContainerOccluded:
                obs.visibility.gap_discrepancy = params_.unpaired_gap_discrepancy;
                break;
            case NodeKind::Contained:
                obs.visibility.container_score = container(n.container).score(frame);
                break;
            case NodeKind::Generic:
                break;
        }
        if (interacting) obs.vehicle_feature = interacting->fluent(frame);
        return obs;
    }

    const ContainerTrack& container(int object_id) const {
        return containers_[static_cast<std::size_t>(container_index_.at(object_id))];
    }

    const ContainerTrack* nearest_container(const Point2& p, int frame) const {
        const ContainerTrack* best = nullptr;
        double best_d = params_.tau_c;
        for (const auto& c : containers_) {
            if (!c.active(frame)) continue;
            const double d = ground_distance(p, c.location(frame));
            if (d < best_d) {
                best_d = d;
                best = &c;
            }
        }
        return best;
    }

    /// Container the object interacts with on a step leaving `from` at `frame` towards `to`.
    const ContainerTrack* interacting(const GraphNode& from, int frame, const GraphNode* to) const {
        if (to && to->container >= 0) return &container(to->container);
        if (from.container >= 0) return &container(from.container);
        return nearest_container(from.locations.at(static_cast<std::size_t>(frame - from.first_frame)), frame);
    }

    StepChoice best_step(const NodeObservation& from, const NodeObservation& to, int dt, ObjectClass cls,
                         bool vehicle_available) const {
        const auto& caog = params_.caog;
        const EnergyContext ctx{params_, fps_, params_.speed_limit(cls)};
        StepChoice best;
        for (int a = 0; a < caog.action_count(); ++a) {
            if (!caog.is_legal(from.state, a, to.state) || !caog.applies_to(a, cls)) continue;
            if (caog.action(a).involves_vehicle && !vehicle_available) continue;
            const auto e = edge_cost(from, to, dt, a, ctx);
            if (best.action < 0 || e.total < best.energy.total) {
                best.energy = e;
                best.action = a;
            }
        }
        return best;
    }

    StepChoice best_terminal(const NodeObservation& obs, ObjectClass cls, bool vehicle_available) const {
        const auto& caog = params_.caog;
        const EnergyContext ctx{params_, fps_, params_.speed_limit(cls)};
        StepChoice best;
        for (int a = 0; a < caog.action_count(); ++a) {
            if (!caog.is_legal(obs.state, a, obs.state) || !caog.applies_to(a, cls)) continue;
            if (caog.action(a).involves_vehicle && !vehicle_available) continue;
            const auto e = likelihood_energy(obs, a, ctx);
            if (best.action < 0 || e.total < best.energy.total) {
                best.energy = e;
                best.action = a;
            }
        }
        if (best.action < 0) throw InvariantViolation("no self-transition for terminal frame");
        return best;
    }

    int add_node(GraphNode n) {
        const auto* inter = interacting(n, n.last_frame, nullptr);
        const auto last = observe(n, n.last_frame, inter);
        const auto term = best_terminal(last, n.cls, inter != nullptr);
        n.terminal_energy = term.energy;
        n.terminal_action = term.action;
        n.terminal_cost = term.energy.total - params_.presence_reward(n.state);
        return graph_.add_node(std::move(n));
    }

    int add_track_node(const Tracklet& t) {
        tracklet_by_id_[t.id] = &t;
        GraphNode n;
        n.kind = NodeKind::Track;
        n.state = VisibilityState::Visible;
        n.cls = t.cls;
        n.first_frame = t.start_frame;
        n.last_frame = t.end_frame();
        n.locations = t.positions;
        n.tracklet = t.id;
        for (int f = n.first_frame; f < n.last_frame; ++f) {
            const auto* inter = interacting(n, f, nullptr);
            const auto step = best_step(observe(n, f, inter), observe(n, f + 1, nullptr), 1, n.cls, inter != nullptr);
            if (step.action < 0) throw InvariantViolation("tracklet interior has no legal action");
            n.interior_energy += step.energy;
            n.interior_cost += step.energy.total - params_.reward_visible;
            n.interior_actions.push_back(step.action);
        }
        return add_node(std::move(n));
    }

    void connect(int from_id, int to_id) {
        const auto& from = graph_.node(from_id);
        const auto& to = graph_.node(to_id);
        if (from.cls != to.cls) return;
        if (!params_.caog.transition_possible(from.state, to.state, from.cls)) return;
        const auto* inter = interacting(from, from.last_frame, &to);
        const auto step = best_step(observe(from, from.last_frame, inter), observe(to, to.first_frame, nullptr),
                                    to.first_frame - from.last_frame, from.cls, inter != nullptr);
        if (step.action < 0) return;
        graph_.add_edge(from_id, to_id, step.energy, step.action,
                        step.energy.total - params_.presence_reward(from.state));
    }

    void add_container_nodes(const std::map<int, int>& track_node) {
        std::set<ObjectClass> classes = {ObjectClass::Person};
        for (const auto& t : tracklets_) classes.insert(t.cls);
        // (container object id, class, frame) -> node ids
        std::map<std::tuple<int, ObjectClass, int>, std::pair<int, int>> side;
        for (const auto& c : containers_) {
            const int cid = c.trajectory.object_id;
            for (auto cls : classes) {
                for (int f = c.trajectory.birth(); f <= c.trajectory.death(); ++f) {
                    GraphNode occ;
                    occ.kind = NodeKind::ContainerOccluded;
                    occ.state = VisibilityState::Occluded;
                    occ.cls = cls;
                    occ.first_frame = occ.last_frame = f;
                    occ.locations = {c.location(f)};
                    occ.container = cid;
                    occ.capacity = params_.max_contained;
                    occ.can_enter = occ.can_exit = false;
                    GraphNode con = occ;
                    con.kind = NodeKind::Contained;
                    con.state = VisibilityState::Contained;
                    con.can_exit = (f == c.trajectory.death());
                    const int o = add_node(std::move(occ));
                    const int k = add_node(std::move(con));
                    side[{cid, cls, f}] = {o, k};
                }
            }
        }
        for (const auto& c : containers_) {
            const int cid = c.trajectory.object_id;
            for (auto cls : classes) {
                for (int f = c.trajectory.birth(); f < c.trajectory.death(); ++f) {
                    const auto [o0, k0] = side.at({cid, cls, f});
                    const auto [o1, k1] = side.at({cid, cls, f + 1});
                    connect(o0, o1);
                    connect(o0, k1);
                    connect(k0, k1);
                    connect(k0, o1);
                }
            }
        }
        for (const auto& t : tracklets_) {
            const int tn = track_node.at(t.id);
            for (const auto& c : containers_) {
                const int cid = c.trajectory.object_id;
                const int after = t.end_frame() + 1;
                if (c.active(after) && ground_distance(t.positions.back(), c.location(after)) < params_.tau_c) {
                    connect(tn, side.at({cid, t.cls, after}).first);
                }
                const int before = t.start_frame - 1;
                if (c.active(before) && ground_distance(c.location(before), t.positions.front()) < params_.tau_c) {
                    connect(side.at({cid, t.cls, before}).first, tn);
                }
            }
        }
    }

    std::span<const Detection> detections_;
    std::span<const Tracklet> tracklets_;
    std::span<const GapLink> links_;
    std::span<const ContainerTrack> containers_;
    const ModelParameters& params_;
    double fps_;
    std::map<int, int> container_index_;
    std::map<int, const Tracklet*> tracklet_by_id_;
    TransitionGraph graph_;
};

}  // namespace

TransitionGraph build_graph(std::span<const Detection> detections, std::span<const Tracklet> tracklets,
                            std::span<const GapLink> gap_links, std::span<const ContainerTrack> containers,
                            const CameraModel& camera, const ModelParameters& params,
                            const GraphBuildOptions& options) {
    for (const auto& t : tracklets) {
        if (t.start_frame < 0 || t.positions.empty()) throw InputError("tracklet has inconsistent frame indexing");
        if (t.detections.size() != t.positions.size()) throw InputError("tracklet detection references missing");
        for (std::size_t i = 0; i < t.detections.size(); ++i) {
            const int d = t.detections[i];
            if (d < 0 || d >= static_cast<int>(detections.size()) ||
                detections[d].frame != t.start_frame + static_cast<int>(i)) {
                throw InputError("tracklet frame does not match its detection");
            }
        }
    }
    for (const auto& c : containers) {
        if (c.scores.size() != c.trajectory.points.size() || c.fluents.size() != c.trajectory.points.size()) {
            throw InputError("container evidence does not cover its trajectory");
        }
        for (std::size_t i = 1; i < c.trajectory.points.size(); ++i) {
            if (c.trajectory.points[i].frame != c.trajectory.points[i - 1].frame + 1) {
                throw InputError("container trajectory has inconsistent frame indexing");
            }
        }
    }
    GraphBuilder builder(detections, tracklets, gap_links, containers, camera, params);
    return builder.build(options);
}

}  // namespace fluent_track
