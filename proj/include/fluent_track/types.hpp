#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fluent_track {

using Point2 = Eigen::Vector2d;

/// Pixel-space box: top-left corner plus extent.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool operator==(const BBox&) const = default;
};

enum class ObjectClass { Person, Vehicle, Suitcase };

enum class VisibilityState { Visible = 0, Occluded = 1, Contained = 2 };

inline constexpr std::array<VisibilityState, 3> kAllStates = {
    VisibilityState::Visible, VisibilityState::Occluded, VisibilityState::Contained};

inline constexpr int state_index(VisibilityState s) { return static_cast<int>(s); }

std::string_view to_string(ObjectClass c);
std::string_view to_string(VisibilityState s);
ObjectClass parse_object_class(std::string_view name);
VisibilityState parse_visibility_state(std::string_view name);

/// An entry of the action vocabulary. Ids are contiguous from zero.
struct AtomicAction {
    int id = 0;
    std::string name;
};

/// Image-to-ground homography plus frame rate.
class CameraModel {
public:
    CameraModel(const Eigen::Matrix3d& homography, double frame_rate);

    const Eigen::Matrix3d& homography() const { return homography_; }
    const Eigen::Matrix3d& inverse() const { return inverse_; }
    double frame_rate() const { return frame_rate_; }

private:
    Eigen::Matrix3d homography_;
    Eigen::Matrix3d inverse_;
    double frame_rate_;
};

struct Detection {
    int frame = 0;
    BBox bbox;
    ObjectClass cls = ObjectClass::Person;
    double score = 0.0;
    Eigen::VectorXd descriptor;
    std::optional<Eigen::VectorXd> pose_feature;
    std::optional<Eigen::VectorXd> vehicle_fluent_feature;

    /// Throws InputError when a field violates the detection contract.
    void validate() const;
};

/// Short confident trajectory fragment over a contiguous frame range.
struct Tracklet {
    int id = 0;
    ObjectClass cls = ObjectClass::Person;
    int start_frame = 0;
    std::vector<Point2> positions;
    std::vector<BBox> boxes;
    std::vector<double> scores;
    /// Index into the source detection list, one per frame.
    std::vector<int> detections;
    Eigen::VectorXd pooled_descriptor;

    int end_frame() const { return start_frame + static_cast<int>(positions.size()) - 1; }
    int length() const { return static_cast<int>(positions.size()); }
};

struct TrackPoint {
    int frame = 0;
    Point2 location = Point2::Zero();
    VisibilityState state = VisibilityState::Visible;
    int action = 0;
    std::optional<int> container_id;
};

struct Trajectory {
    int object_id = 0;
    ObjectClass cls = ObjectClass::Person;
    std::vector<TrackPoint> points;

    int birth() const { return points.empty() ? -1 : points.front().frame; }
    int death() const { return points.empty() ? -1 : points.back().frame; }
};

struct ParseEntry {
    int object_id = 0;
    Point2 location = Point2::Zero();
    std::optional<BBox> bbox;
    VisibilityState state = VisibilityState::Visible;
    int action = 0;
    std::optional<int> container_id;
};

/// Per-frame selection of location, state and action for every object.
struct CausalParseGraph {
    int frame = 0;
    std::vector<ParseEntry> entries;
};

}  // namespace fluent_track
