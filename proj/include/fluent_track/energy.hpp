#pragma once

#include "fluent_track/params.hpp"
#include "fluent_track/types.hpp"

#include <optional>

namespace fluent_track {

/// Per-edge decomposition of the objective into prior and likelihood energies.
struct EnergyBreakdown {
    double displacement = 0.0;
    double transition = 0.0;
    double visibility = 0.0;
    double action = 0.0;
    double total = 0.0;

    /// Sums the components; throws InputError if any is NaN or infinite.
    static EnergyBreakdown from_parts(double displacement, double transition, double visibility,
                                      double action);

    EnergyBreakdown& operator+=(const EnergyBreakdown& o);
};

double sigmoid(double x);

/// Speed gate on the ground plane; hidden states always pay 1.
int displacement_energy(const Point2& next, const Point2& current, VisibilityState current_state,
                        double speed_limit, double frame_rate, int dt_frames);

inline constexpr double kProbabilityFloor = 1e-9;

/// -log max(p(next | current, action), 1e-9).
double transition_energy(VisibilityState next, VisibilityState current, int action,
                         const ActionStateTable& table);

struct VisibilityEvidence {
    std::optional<double> detection_score;
    std::optional<double> container_score;
    /// 1 - similarity of the pooled descriptors around an occlusion gap.
    std::optional<double> gap_discrepancy;
};

double gap_discrepancy(const Tracklet& before, const Tracklet& after);

double visibility_likelihood(VisibilityState state, const VisibilityEvidence& evidence);
double visibility_likelihood(VisibilityState state, std::optional<double> detection_score,
                             std::optional<double> container_score, const Tracklet* before,
                             const Tracklet* after);

double pose_distance(const Eigen::VectorXd& pose_feature, const GaussianPoseModel& model);

double vehicle_fluent_distance(const Eigen::VectorXd& fluent_feature, const Eigen::VectorXd& tmpl);

/// sigmoid(pose distance) + sigmoid(fluent distance); a missing feature contributes sigmoid(0) = 0.5.
double action_likelihood(const Eigen::VectorXd* pose_feature, const Eigen::VectorXd* vehicle_feature,
                         const ActionModel& model);

/// Observation attached to one end of a transition.
struct NodeObservation {
    Point2 location = Point2::Zero();
    VisibilityState state = VisibilityState::Visible;
    VisibilityEvidence visibility;
    const Eigen::VectorXd* pose_feature = nullptr;
    /// Fluent feature of the container the object interacts with, if any.
    const Eigen::VectorXd* vehicle_feature = nullptr;
};

struct EnergyContext {
    const ModelParameters& params;
    double frame_rate = 30.0;
    double speed_limit = 4.0;
};

/// Visibility and action energies of an observation under `action`, honoring the likelihood mode.
EnergyBreakdown likelihood_energy(const NodeObservation& node, int action, const EnergyContext& ctx);

/**
 * Energy of moving from `from` to `to` over `dt_frames` frames with `action`
 * performed at `from`. All four terms are evaluated at the source end.
 */
EnergyBreakdown edge_cost(const NodeObservation& from, const NodeObservation& to, int dt_frames,
                          int action, const EnergyContext& ctx);

}  // namespace fluent_track
