#pragma once

#include "fluent_track/params.hpp"
#include "fluent_track/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace fluent_track {

/// A proposed bridge over missed frames between two tracklets.
struct GapLink {
    int before = 0;  ///< tracklet id ending first
    int after = 0;   ///< tracklet id starting later
    /// after.start_frame - before.end_frame
    int gap_frames = 0;
    double similarity = 0.0;
    /// One entry per frame strictly between the two tracklets.
    std::vector<std::pair<int, Point2>> virtual_path;
};

/// Ground-plane foot points of every detection, in input order.
std::vector<Point2> project_detections(std::span<const Detection> detections, const CameraModel& camera);

/// Log-odds reward of a detection score, with the score clamped to [0.01, 0.99].
double detection_reward(double score);

/**
 * Links detections into tracklets with successive shortest paths.
 *
 * Each detection is a unit-capacity node rewarded by its log-odds score.
 * Links join same-class detections in consecutive frames whose distance is
 * within the class speed bound, at cost distance / bound. Paths pay
 * `entry_exit_cost` on both ends. Augmentation stops when no negative path
 * remains, which yields the min-cost flow.
 */
std::vector<Tracklet> generate_tracklets(std::span<const Detection> detections, const CameraModel& camera,
                                         const ModelParameters& params);

/// Same-class ordered pairs passing the gap, appearance and speed gates.
std::vector<GapLink> find_gap_candidates(std::span<const Tracklet> tracklets, const ModelParameters& params,
                                         double frame_rate);

/// Clamped cubic fitted to the last five points of `before` and the first five
/// of `after`, passing exactly through the two points next to the gap, and
/// sampled at each missing frame.
std::vector<std::pair<int, Point2>> bspline_fill(const Tracklet& before, const Tracklet& after);

/// Drops every link A -> B for which links A -> C and C -> B also exist, so a
/// bridge never skips a tracklet that could continue the same object.
std::vector<GapLink> drop_skipping_links(std::vector<GapLink> links);

/// find_gap_candidates followed by bspline_fill on every candidate.
std::vector<GapLink> propose_gap_links(std::span<const Tracklet> tracklets, const ModelParameters& params,
                                       double frame_rate);

}  // namespace fluent_track
