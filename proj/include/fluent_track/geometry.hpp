#pragma once

#include "fluent_track/types.hpp"

#include <span>

namespace fluent_track {

/// Maps the bottom-center of `bbox` through the camera homography.
Point2 project_to_ground(const CameraModel& camera, const BBox& bbox);

/// Inverse mapping of a ground point to its image foot point (pixels).
Eigen::Vector2d ground_to_image(const CameraModel& camera, const Point2& ground);

double ground_distance(const Point2& p, const Point2& q);

/// Inner product of two unit-norm descriptors.
double descriptor_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Mean of unit descriptors, renormalized to unit length.
Eigen::VectorXd pool_descriptors(std::span<const Eigen::VectorXd> descriptors);

/// Intersection over union of two pixel boxes.
double box_iou(const BBox& a, const BBox& b);

}  // namespace fluent_track
