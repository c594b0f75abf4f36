#include "fluent_track/tracklets.hpp"

#include "fluent_track/bspline.hpp"
#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"
#include "fluent_track/min_cost_flow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fluent_track {

std::vector<Point2> project_detections(std::span<const Detection> detections, const CameraModel& camera) {
    std::vector<Point2> out;
    out.reserve(detections.size());
    for (const auto& d : detections) out.push_back(project_to_ground(camera, d.bbox));
    return out;
}

double detection_reward(double score) {
    const double h = std::clamp(score, 0.01, 0.99);
    return std::log(h / (1.0 - h));
}

std::vector<Tracklet> generate_tracklets(std::span<const Detection> detections, const CameraModel& camera,
                                         const ModelParameters& params) {
    if (detections.empty()) return {};
    for (std::size_t i = 1; i < detections.size(); ++i) {
        if (detections[i].frame < detections[i - 1].frame) throw InputError("detections must be sorted by frame");
    }
    const auto points = project_detections(detections, camera);
    const int n = static_cast<int>(detections.size());
    const int source = 2 * n;
    const int sink = 2 * n + 1;
    MinCostFlow flow(2 * n + 2);

    std::map<int, std::vector<int>> by_frame;
    for (int i = 0; i < n; ++i) by_frame[detections[i].frame].push_back(i);

    for (int i = 0; i < n; ++i) {
        flow.add_edge(source, 2 * i, 1, params.entry_exit_cost);
        flow.add_edge(2 * i, 2 * i + 1, 1, -detection_reward(detections[i].score));
        flow.add_edge(2 * i + 1, sink, 1, params.entry_exit_cost);
    }
    const double fps = camera.frame_rate();
    for (int i = 0; i < n; ++i) {
        auto it = by_frame.find(detections[i].frame + 1);
        if (it == by_frame.end()) continue;
        const double bound = params.speed_limit(detections[i].cls) / fps;
        for (int j : it->second) {
            if (detections[j].cls != detections[i].cls) continue;
            const double d = ground_distance(points[i], points[j]);
            if (d > bound) continue;
            flow.add_edge(2 * i + 1, 2 * j, 1, d / bound);
        }
    }
    flow.augment_while_negative(source, sink);

    std::vector<Tracklet> out;
    for (int start : flow.used_successors(source)) {
        Tracklet t;
        int det = start / 2;
        t.cls = detections[det].cls;
        t.start_frame = detections[det].frame;
        while (true) {
            t.positions.push_back(points[det]);
            t.boxes.push_back(detections[det].bbox);
            t.scores.push_back(detections[det].score);
            t.detections.push_back(det);
            const auto next = flow.used_successors(2 * det + 1);
            if (next.size() != 1) throw InvariantViolation("tracklet flow is not a simple path");
            if (next.front() == sink) break;
            det = next.front() / 2;
        }
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(), [](const Tracklet& a, const Tracklet& b) {
        return std::pair(a.start_frame, a.detections.front()) < std::pair(b.start_frame, b.detections.front());
    });
    for (std::size_t k = 0; k < out.size(); ++k) {
        auto& t = out[k];
        t.id = static_cast<int>(k);
        std::vector<Eigen::VectorXd> descs;
        for (int det : t.detections) {
            if (detections[det].descriptor.size() > 0) descs.push_back(detections[det].descriptor);
        }
        if (!descs.empty()) t.pooled_descriptor = pool_descriptors(descs);
    }
    return out;
}

std::vector<GapLink> find_gap_candidates(std::span<const Tracklet> tracklets, const ModelParameters& params,
                                         double frame_rate) {
    std::vector<GapLink> out;
    for (const auto& a : tracklets) {
        for (const auto& b : tracklets) {
            if (a.id == b.id || a.cls != b.cls) continue;
            const int gap = b.start_frame - a.end_frame();
            if (gap < 1 || gap > params.max_gap_frames) continue;
            if (a.pooled_descriptor.size() == 0 || b.pooled_descriptor.size() == 0) continue;
            const double sim = descriptor_similarity(a.pooled_descriptor, b.pooled_descriptor);
            if (sim < params.tau_sigma) continue;
            const double speed = ground_distance(a.positions.back(), b.positions.front()) /
                                 (static_cast<double>(gap) / frame_rate);
            if (speed > 2.0 * params.speed_limit(a.cls)) continue;
            out.push_back({a.id, b.id, gap, sim, {}});
        }
    }
    return out;
}

std::vector<std::pair<int, Point2>> bspline_fill(const Tracklet& before, const Tracklet& after) {
    if (before.positions.empty() || after.positions.empty()) throw InputError("cannot bridge an empty tracklet");
    if (after.start_frame - before.end_frame() < 1) throw InputError("tracklets overlap; nothing to bridge");
    constexpr int kSupport = 5;
    std::vector<double> params;
    std::vector<Point2> pts;
    const int nb = std::min(kSupport, before.length());
    for (int i = before.length() - nb; i < before.length(); ++i) {
        params.push_back(before.start_frame + i);
        pts.push_back(before.positions[i]);
    }
    const int na = std::min(kSupport, after.length());
    for (int i = 0; i < na; ++i) {
        params.push_back(after.start_frame + i);
        pts.push_back(after.positions[i]);
    }
    // Four control points keep a single smooth cubic across long gaps.
    const std::size_t pinned[] = {static_cast<std::size_t>(nb - 1), static_cast<std::size_t>(nb)};
    const auto curve = BSplineCurve::fit(params, pts, std::min<int>(4, static_cast<int>(pts.size())), pinned);
    std::vector<std::pair<int, Point2>> path;
    for (int f = before.end_frame() + 1; f < after.start_frame; ++f) path.emplace_back(f, curve.evaluate(f));
    return path;
}

std::vector<GapLink> drop_skipping_links(std::vector<GapLink> links) {
    std::set<std::pair<int, int>> present;
    std::map<int, std::vector<int>> successors;
    for (const auto& l : links) {
        present.insert({l.before, l.after});
        successors[l.before].push_back(l.after);
    }
    std::vector<GapLink> kept;
    for (auto& l : links) {
        bool skips = false;
        for (int mid : successors[l.before]) {
            if (mid != l.after && present.count({mid, l.after})) {
                skips = true;
                break;
            }
        }
        if (!skips) kept.push_back(std::move(l));
    }
    return kept;
}

std::vector<GapLink> propose_gap_links(std::span<const Tracklet> tracklets, const ModelParameters& params,
                                       double frame_rate) {
    auto links = find_gap_candidates(tracklets, params, frame_rate);
    std::map<int, const Tracklet*> by_id;
    for (const auto& t : tracklets) by_id[t.id] = &t;
    for (auto& l : links) l.virtual_path = bspline_fill(*by_id.at(l.before), *by_id.at(l.after));
    return links;
}

}  // namespace fluent_track
