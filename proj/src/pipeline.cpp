#include "fluent_track/pipeline.hpp"

#include "fluent_track/caog.hpp"
#include "fluent_track/energy.hpp"
#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"
#include "fluent_track/tracklets.hpp"

#include <algorithm>
#include <map>

namespace fluent_track {

namespace {

/// Energy used when an action needs a vehicle that is not nearby.
constexpr double kNoVehicleEnergy = 50.0;

}  // namespace

TrackingResult joint_solve(std::span<const Detection> detections, const CameraModel& camera,
                           const ModelParameters& params, const TrackerOptions& options) {
    params.validate();
    std::vector<Detection> objects;
    for (const auto& d : detections) {
        d.validate();
        if (d.cls != ObjectClass::Vehicle) objects.push_back(d);
    }
    std::stable_sort(objects.begin(), objects.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    std::vector<Detection> sorted(detections.begin(), detections.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });

    TrackingResult result;
    result.containers = solve_containers(sorted, camera, params, 0);

    const auto tracklets = generate_tracklets(objects, camera, params);
    const auto links = drop_skipping_links(propose_gap_links(tracklets, params, camera.frame_rate()));
    GraphBuildOptions build;
    build.hidden_states = options.hidden_states;
    result.graph = build_graph(objects, tracklets, links, result.containers.tracks, camera, params, build);

    SolveOptions solve;
    solve.max_contained = params.max_contained;
    result.flow = solve_objects(result.graph, solve);
    if (options.verify) verify_solution(result.graph, result.flow, params, solve);

    const auto& vehicles = result.containers;
    const int first_object = static_cast<int>(vehicles.tracks.size());
    for (const auto& c : vehicles.tracks) result.trajectories.push_back(c.trajectory);
    auto objects_out = decode_paths(result.graph, result.flow, first_object);

    // Detection behind every visible point, for the action evidence.
    std::map<std::pair<int, int>, int> detection_at;
    for (std::size_t p = 0; p < result.flow.paths.size(); ++p) {
        for (int v : result.flow.paths[p].nodes) {
            const auto& node = result.graph.node(v);
            if (node.kind != NodeKind::Track) continue;
            const auto& t = tracklets[static_cast<std::size_t>(node.tracklet)];
            for (int i = 0; i < t.length(); ++i) {
                detection_at[{first_object + static_cast<int>(p), t.start_frame + i}] = t.detections[i];
            }
        }
    }
    for (auto& t : objects_out) result.trajectories.push_back(std::move(t));

    std::map<int, const ContainerTrack*> container_by_id;
    for (const auto& c : vehicles.tracks) container_by_id[c.trajectory.object_id] = &c;
    const auto nearest = [&](const TrackPoint& pt) -> const ContainerTrack* {
        if (pt.container_id) return container_by_id.at(*pt.container_id);
        const ContainerTrack* best = nullptr;
        double best_d = params.tau_c;
        for (const auto& c : vehicles.tracks) {
            if (!c.active(pt.frame)) continue;
            const double d = ground_distance(pt.location, c.location(pt.frame));
            if (d < best_d) {
                best_d = d;
                best = &c;
            }
        }
        return best;
    };
    const ActionEvidence evidence = [&](const Trajectory& traj, std::size_t index,
                                        int action) -> std::optional<double> {
        if (params.likelihood == LikelihoodMode::PriorOnly || traj.cls == ObjectClass::Vehicle) return std::nullopt;
        const auto& pt = traj.points[index];
        const auto& model = params.action_models.at(static_cast<std::size_t>(action));
        const ContainerTrack* container = nearest(pt);
        if (params.caog.action(action).involves_vehicle && !container) return kNoVehicleEnergy;
        const Eigen::VectorXd* pose = nullptr;
        auto it = detection_at.find({traj.object_id, pt.frame});
        if (it != detection_at.end() && objects[static_cast<std::size_t>(it->second)].pose_feature) {
            pose = &*objects[static_cast<std::size_t>(it->second)].pose_feature;
        }
        const Eigen::VectorXd* vehicle = nullptr;
        if (params.likelihood == LikelihoodMode::Full && model.vehicle_template && container) {
            vehicle = container->fluent(pt.frame);
        }
        if (pose && !model.pose) return std::nullopt;
        return action_likelihood(pose, vehicle, model);
    };
    result.parse_graphs =
        extract_parse_graphs(result.trajectories, params.caog, params.transition_table, evidence);
    return result;
}

}  // namespace fluent_track
