#pragma once

#include "fluent_track/caog.hpp"
#include "fluent_track/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fluent_track {

/// Gaussian pose model of one action; the covariance is checked positive definite.
class GaussianPoseModel {
public:
    GaussianPoseModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return covariance_; }
    int dimension() const { return static_cast<int>(mean_.size()); }

    /// -log N(x; mean, covariance).
    double neg_log_density(const Eigen::VectorXd& x) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd covariance_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_det_ = 0.0;
};

struct ActionModel {
    std::string name;
    std::optional<GaussianPoseModel> pose;
    std::optional<Eigen::VectorXd> vehicle_template;
};

/// Which likelihood terms take part in the objective.
enum class LikelihoodMode {
    Full,       ///< prior plus human and vehicle likelihoods
    HumanOnly,  ///< prior plus human likelihoods; vehicle fluent term neutral
    PriorOnly,  ///< prior terms only
};

struct ModelParameters {
    /// Speed threshold for people and baggage (m/s).
    double tau_s = 4.0;
    /// Speed threshold for vehicles (m/s).
    double tau_s_vehicle = 15.0;
    /// Minimum pooled-descriptor similarity for a gap link.
    double tau_sigma = 0.8;
    /// Containment distance (m).
    double tau_c = 3.0;
    int max_contained = 5;
    int max_gap_frames = 150;
    /// Cost of starting or ending a path, shared by tracklet and trajectory stages.
    double entry_exit_cost = 2.0;

    /// Per-frame presence rewards that the energies are weighed against.
    double reward_visible = 1.7;
    double reward_occluded = 2.85;
    double reward_contained = 2.15;
    /// Discrepancy used for occluded hypotheses that have no tracklet pair.
    double unpaired_gap_discrepancy = 1.0;

    LikelihoodMode likelihood = LikelihoodMode::Full;

    CausalAndOrGraph caog = default_caog();
    ActionStateTable transition_table;
    /// Indexed by action id.
    std::vector<ActionModel> action_models;

    double speed_limit(ObjectClass cls) const {
        return cls == ObjectClass::Vehicle ? tau_s_vehicle : tau_s;
    }
    double presence_reward(VisibilityState s) const;

    /// Throws InputError on out-of-range values or inconsistent models.
    void validate() const;
};

/// Action models matching the default grammar (pose dimension 4, fluent dimension 4).
std::vector<ActionModel> default_action_models(const CausalAndOrGraph& caog);

ModelParameters default_parameters();

/// Sample mean and unbiased covariance plus lambda * I, lambda = max(1e-3 * trace / d, 1e-6).
/// Needs at least two samples of equal dimension.
GaussianPoseModel fit_pose_model(std::span<const Eigen::VectorXd> samples);

/// Mean feature; needs at least one sample.
Eigen::VectorXd fit_vehicle_template(std::span<const Eigen::VectorXd> samples);

}  // namespace fluent_track
