#pragma once

#include "fluent_track/types.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fluent_track {

struct FrameObject {
    int id = 0;
    Point2 location = Point2::Zero();
    std::optional<BBox> box;
    VisibilityState state = VisibilityState::Visible;
};

/// Objects present per frame.
using FrameTable = std::map<int, std::vector<FrameObject>>;

FrameTable frame_table(std::span<const Trajectory> trajectories);

struct MatchOptions {
    /// Ground-plane gate in meters, used when either side has no box.
    double distance_gate = 1.0;
    double iou_threshold = 0.5;
};

struct FrameMatch {
    int frame = 0;
    /// (gt id, pred id)
    std::vector<std::pair<int, int>> pairs;
    /// Overlap in [0, 1] per pair: IoU, or 1 - distance / gate.
    std::vector<double> overlaps;
    int gt_count = 0;
    int pred_count = 0;
};

struct MatchResult {
    std::vector<FrameMatch> frames;
    int gt_count = 0;
    int matches = 0;
    int fp = 0;
    int fn = 0;
    int ids = 0;
    int frag = 0;
    double overlap_sum = 0.0;
};

/// Exact per-frame assignment maximizing matches, then overlap; previously matched pairs win ties.
MatchResult match_frames(const FrameTable& gt, const FrameTable& pred, const MatchOptions& options = {});

struct ClearMetrics {
    double mota = 0.0;
    double motp = 0.0;
    double moda = 0.0;
    double modp = 0.0;
    int fp = 0;
    int fn = 0;
    int ids = 0;
    int frag = 0;
};

ClearMetrics clear_metrics(const MatchResult& match, int gt_count);

/// Counts-only form for hand-built fixtures; MOTP and MODP are zero.
ClearMetrics clear_metrics(int gt_count, int fp, int fn, int ids, int frag = 0);

struct FluentMetrics {
    /// confusion[gt state][pred state] over matched pairs.
    std::array<std::array<int, 3>, 3> confusion{};

    /// Empty when the state was never predicted.
    std::optional<double> precision(VisibilityState s) const;
    /// Empty when the state never occurs in matched ground truth.
    std::optional<double> recall(VisibilityState s) const;
};

FluentMetrics fluent_metrics(const MatchResult& match, const FrameTable& gt, const FrameTable& pred);

}  // namespace fluent_track
