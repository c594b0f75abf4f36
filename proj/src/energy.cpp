#include "fluent_track/energy.hpp"

#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace fluent_track {

EnergyBreakdown EnergyBreakdown::from_parts(double displacement, double transition, double visibility,
                                            double action) {
    if (!std::isfinite(displacement) || !std::isfinite(transition) || !std::isfinite(visibility) ||
        !std::isfinite(action)) {
        throw InputError("energy component is not finite");
    }
    return {displacement, transition, visibility, action, displacement + transition + visibility + action};
}

EnergyBreakdown& EnergyBreakdown::operator+=(const EnergyBreakdown& o) {
    displacement += o.displacement;
    transition += o.transition;
    visibility += o.visibility;
    action += o.action;
    total += o.total;
    return *this;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

int displacement_energy(const Point2& next, const Point2& current, VisibilityState current_state,
                        double speed_limit, double frame_rate, int dt_frames) {
    if (dt_frames < 1) throw InputError("frame gap must be >= 1");
    if (current_state != VisibilityState::Visible) return 1;
    const double bound = speed_limit * static_cast<double>(dt_frames) / frame_rate;
    return ground_distance(next, current) > bound ? 1 : 0;
}

double transition_energy(VisibilityState next, VisibilityState current, int action,
                         const ActionStateTable& table) {
    return -std::log(std::max(table.probability(next, current, action), kProbabilityFloor));
}

double gap_discrepancy(const Tracklet& before, const Tracklet& after) {
    return 1.0 - descriptor_similarity(before.pooled_descriptor, after.pooled_descriptor);
}

double visibility_likelihood(VisibilityState state, const VisibilityEvidence& evidence) {
    switch (state) {
        case VisibilityState::Visible:
            if (!evidence.detection_score) throw InputError("visible hypothesis needs a detection score");
            return 1.0 - *evidence.detection_score;
        case VisibilityState::Occluded:
            if (!evidence.gap_discrepancy) throw InputError("occluded hypothesis needs a tracklet gap");
            return sigmoid(*evidence.gap_discrepancy);
        case VisibilityState::Contained:
            if (!evidence.container_score) throw InputError("contained hypothesis needs a container score");
            return 1.0 - *evidence.container_score;
    }
    return 0.0;
}

double visibility_likelihood(VisibilityState state, std::optional<double> detection_score,
                             std::optional<double> container_score, const Tracklet* before,
                             const Tracklet* after) {
    VisibilityEvidence e{detection_score, container_score, std::nullopt};
    if (before && after) e.gap_discrepancy = gap_discrepancy(*before, *after);
    return visibility_likelihood(state, e);
}

double pose_distance(const Eigen::VectorXd& pose_feature, const GaussianPoseModel& model) {
    return model.neg_log_density(pose_feature);
}

double vehicle_fluent_distance(const Eigen::VectorXd& fluent_feature, const Eigen::VectorXd& tmpl) {
    if (fluent_feature.size() != tmpl.size()) throw InputError("vehicle fluent dimension mismatch");
    return (fluent_feature - tmpl).norm();
}

double action_likelihood(const Eigen::VectorXd* pose_feature, const Eigen::VectorXd* vehicle_feature,
                         const ActionModel& model) {
    double human = 0.5;
    if (pose_feature) {
        if (!model.pose) throw InputError("action '" + model.name + "' has no pose model");
        human = sigmoid(pose_distance(*pose_feature, *model.pose));
    }
    double vehicle = 0.5;
    if (vehicle_feature) {
        if (!model.vehicle_template) throw InputError("action '" + model.name + "' has no vehicle template");
        vehicle = sigmoid(vehicle_fluent_distance(*vehicle_feature, *model.vehicle_template));
    }
    return human + vehicle;
}

EnergyBreakdown likelihood_energy(const NodeObservation& node, int action, const EnergyContext& ctx) {
    const auto& p = ctx.params;
    if (p.likelihood == LikelihoodMode::PriorOnly) return {};
    if (action < 0 || action >= static_cast<int>(p.action_models.size())) {
        throw InputError("no action model for action " + std::to_string(action));
    }
    const auto& model = p.action_models[action];
    const double visibility = visibility_likelihood(node.state, node.visibility);
    const Eigen::VectorXd* vehicle = nullptr;
    if (p.likelihood == LikelihoodMode::Full && model.vehicle_template) vehicle = node.vehicle_feature;
    const double action_term = action_likelihood(node.pose_feature, vehicle, model);
    return EnergyBreakdown::from_parts(0.0, 0.0, visibility, action_term);
}

EnergyBreakdown edge_cost(const NodeObservation& from, const NodeObservation& to, int dt_frames,
                          int action, const EnergyContext& ctx) {
    const double displacement =
        displacement_energy(to.location, from.location, from.state, ctx.speed_limit, ctx.frame_rate, dt_frames);
    const double transition = transition_energy(to.state, from.state, action, ctx.params.transition_table);
    const auto like = likelihood_energy(from, action, ctx);
    return EnergyBreakdown::from_parts(displacement, transition, like.visibility, like.action);
}

}  // namespace fluent_track
