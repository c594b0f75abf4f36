#include "fluent_track/geometry.hpp"

#include "fluent_track/error.hpp"

#include <cmath>
#include <string>

namespace fluent_track {

namespace {
constexpr double kMinHomogeneous = 1e-9;
constexpr double kMinDeterminant = 1e-12;
constexpr double kUnitTolerance = 1e-6;
}  // namespace

std::string_view to_string(ObjectClass c) {
    switch (c) {
        case ObjectClass::Person: return "person";
        case ObjectClass::Vehicle: return "vehicle";
        case ObjectClass::Suitcase: return "suitcase";
    }
    return "person";
}

std::string_view to_string(VisibilityState s) {
    switch (s) {
        case VisibilityState::Visible: return "Visible";
        case VisibilityState::Occluded: return "Occluded";
        case VisibilityState::Contained: return "Contained";
    }
    return "Visible";
}

ObjectClass parse_object_class(std::string_view name) {
    if (name == "person") return ObjectClass::Person;
    if (name == "vehicle") return ObjectClass::Vehicle;
    if (name == "suitcase") return ObjectClass::Suitcase;
    throw InputError("unknown object class '" + std::string(name) + "'");
}

VisibilityState parse_visibility_state(std::string_view name) {
    if (name == "Visible") return VisibilityState::Visible;
    if (name == "Occluded") return VisibilityState::Occluded;
    if (name == "Contained") return VisibilityState::Contained;
    throw InputError("unknown visibility state '" + std::string(name) + "'");
}

CameraModel::CameraModel(const Eigen::Matrix3d& homography, double frame_rate)
    : homography_(homography), inverse_(Eigen::Matrix3d::Identity()), frame_rate_(frame_rate) {
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
        throw InputError("camera frame_rate must be positive");
    }
    if (!homography.allFinite() || std::abs(homography.determinant()) <= kMinDeterminant) {
        throw DegenerateProjection("camera homography is not invertible");
    }
    inverse_ = homography.inverse();
}

void Detection::validate() const {
    if (frame < 0) throw InputError("detection frame must be >= 0");
    if (!(bbox.w > 0.0) || !(bbox.h > 0.0)) throw InputError("detection bbox must have positive extent");
    if (!(score >= 0.0 && score <= 1.0)) throw InputError("detection score must lie in [0, 1]");
    if (descriptor.size() > 0 && std::abs(descriptor.norm() - 1.0) > kUnitTolerance) {
        throw InputError("detection descriptor must be unit norm");
    }
    if (pose_feature && cls != ObjectClass::Person) {
        throw InputError("pose_feature is only allowed on person detections");
    }
    if (vehicle_fluent_feature && cls != ObjectClass::Vehicle) {
        throw InputError("vehicle_fluent_feature is only allowed on vehicle detections");
    }
}

Point2 project_to_ground(const CameraModel& camera, const BBox& bbox) {
    const Eigen::Vector3d foot(bbox.x + bbox.w / 2.0, bbox.y + bbox.h, 1.0);
    const Eigen::Vector3d g = camera.homography() * foot;
    if (std::abs(g.z()) < kMinHomogeneous) {
        throw DegenerateProjection("ground projection has vanishing homogeneous coordinate");
    }
    return {g.x() / g.z(), g.y() / g.z()};
}

Eigen::Vector2d ground_to_image(const CameraModel& camera, const Point2& ground) {
    const Eigen::Vector3d p = camera.inverse() * Eigen::Vector3d(ground.x(), ground.y(), 1.0);
    if (std::abs(p.z()) < kMinHomogeneous) {
        throw DegenerateProjection("image projection has vanishing homogeneous coordinate");
    }
    return {p.x() / p.z(), p.y() / p.z()};
}

double ground_distance(const Point2& p, const Point2& q) { return (p - q).norm(); }

double descriptor_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw InputError("descriptor dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    return a.dot(b);
}

Eigen::VectorXd pool_descriptors(std::span<const Eigen::VectorXd> descriptors) {
    if (descriptors.empty()) throw InputError("cannot pool an empty descriptor list");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(descriptors.front().size());
    for (const auto& d : descriptors) {
        if (d.size() != mean.size()) throw InputError("descriptor dimension mismatch while pooling");
        mean += d;
    }
    mean /= static_cast<double>(descriptors.size());
    const double n = mean.norm();
    if (n < 1e-12) throw InputError("pooled descriptor mean is zero");
    return mean / n;
}

double box_iou(const BBox& a, const BBox& b) {
    const double x0 = std::max(a.x, b.x);
    const double y0 = std::max(a.y, b.y);
    const double x1 = std::min(a.x + a.w, b.x + b.w);
    const double y1 = std::min(a.y + a.h, b.y + b.h);
    const double inter = std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace fluent_track
