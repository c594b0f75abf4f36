#include "fluent_track/params.hpp"

#include "fluent_track/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fluent_track {

GaussianPoseModel::GaussianPoseModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    const auto d = mean_.size();
    if (d == 0) throw InputError("pose model mean must be non-empty");
    if (covariance_.rows() != d || covariance_.cols() != d) {
        throw InputError("pose covariance dimension does not match the mean");
    }
    if (!covariance_.isApprox(covariance_.transpose(), 1e-9)) {
        throw InputError("pose covariance must be symmetric");
    }
    llt_.compute(covariance_);
    if (llt_.info() != Eigen::Success) throw InputError("pose covariance is not positive definite");
    const Eigen::VectorXd diag = llt_.matrixL().toDenseMatrix().diagonal();
    log_det_ = 2.0 * diag.array().log().sum();
}

double GaussianPoseModel::neg_log_density(const Eigen::VectorXd& x) const {
    if (x.size() != mean_.size()) throw InputError("pose feature dimension mismatch");
    const Eigen::VectorXd diff = x - mean_;
    const double mahalanobis = diff.dot(llt_.solve(diff));
    const double d = static_cast<double>(mean_.size());
    return 0.5 * (mahalanobis + log_det_ + d * std::log(2.0 * std::numbers::pi));
}

double ModelParameters::presence_reward(VisibilityState s) const {
    switch (s) {
        case VisibilityState::Visible: return reward_visible;
        case VisibilityState::Occluded: return reward_occluded;
        case VisibilityState::Contained: return reward_contained;
    }
    return reward_visible;
}

void ModelParameters::validate() const {
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be positive");
    };
    positive(tau_s, "tau_s");
    positive(tau_s_vehicle, "tau_s_vehicle");
    positive(tau_sigma, "tau_sigma");
    positive(tau_c, "tau_c");
    if (max_contained < 1) throw InputError("max_contained must be >= 1");
    if (max_gap_frames < 1) throw InputError("max_gap_frames must be >= 1");
    if (!(entry_exit_cost >= 0.0)) throw InputError("entry_exit_cost must be >= 0");
    validate_table(caog, transition_table);
    if (static_cast<int>(action_models.size()) != caog.action_count()) {
        throw InputError("need one action model per action");
    }
    for (int a = 0; a < caog.action_count(); ++a) {
        if (action_models[a].name != caog.action(a).action.name) {
            throw InputError("action model order does not match the action vocabulary");
        }
    }
}

std::vector<ActionModel> default_action_models(const CausalAndOrGraph& caog) {
    const auto vec = [](std::initializer_list<double> v) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
        Eigen::Index i = 0;
        for (double x : v) out(i++) = x;
        return out;
    };
    const Eigen::MatrixXd cov = 0.06 * Eigen::MatrixXd::Identity(4, 4);
    struct Spec {
        Eigen::VectorXd mu;
        std::optional<Eigen::VectorXd> tmpl;
    };
    const std::vector<Spec> specs = {
        {vec({1, 0, 0, 0}), std::nullopt},
        {vec({0, 1, 0, 0}), vec({1, 0, 0, 0})},
        {vec({0, 0, 1, 0}), vec({1, 0, 1, 0})},
        {vec({0, 0, 0, 1}), vec({1, 0, 0, 1})},
        {vec({0, 1, 1, 0}), vec({0.5, 0, 0, 0})},
        {vec({1, 1, 0, 0}), vec({0, 1, 0, 0})},
        {vec({0, 0, 1, 1}), vec({0, 1, 1, 0})},
        {vec({1, 0, 0, 1}), vec({0, 1, 0, 1})},
        {vec({1, 0, 1, 0}), vec({0, 0.5, 0, 0})},
    };
    if (static_cast<int>(specs.size()) != caog.action_count()) {
        throw InputError("default action models only fit the default grammar");
    }
    std::vector<ActionModel> models;
    for (int a = 0; a < caog.action_count(); ++a) {
        models.push_back({caog.action(a).action.name, GaussianPoseModel(specs[a].mu, cov), specs[a].tmpl});
    }
    return models;
}

ModelParameters default_parameters() {
    ModelParameters p;
    p.transition_table = default_transition_table(p.caog);
    p.action_models = default_action_models(p.caog);
    return p;
}

namespace {

void check_dimensions(std::span<const Eigen::VectorXd> samples) {
    for (const auto& x : samples) {
        if (x.size() != samples.front().size() || x.size() == 0) {
            throw InputError("feature samples must share a non-zero dimension");
        }
        if (!x.allFinite()) throw InputError("feature samples must be finite");
    }
}

}  // namespace

GaussianPoseModel fit_pose_model(std::span<const Eigen::VectorXd> samples) {
    if (samples.size() < 2) throw InputError("covariance needs at least two samples");
    check_dimensions(samples);
    const auto d = samples.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : samples) mean += x;
    mean /= static_cast<double>(samples.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& x : samples) cov += (x - mean) * (x - mean).transpose();
    cov /= static_cast<double>(samples.size() - 1);
    const double lambda = std::max(1e-3 * cov.trace() / static_cast<double>(d), 1e-6);
    cov += lambda * Eigen::MatrixXd::Identity(d, d);
    return GaussianPoseModel(std::move(mean), std::move(cov));
}

Eigen::VectorXd fit_vehicle_template(std::span<const Eigen::VectorXd> samples) {
    if (samples.empty()) throw InputError("template needs at least one sample");
    check_dimensions(samples);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(samples.front().size());
    for (const auto& x : samples) mean += x;
    return mean / static_cast<double>(samples.size());
}

}  // namespace fluent_track
