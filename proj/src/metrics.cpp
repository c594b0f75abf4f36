#include "fluent_track/metrics.hpp"

#include "fluent_track/error.hpp"
#include "fluent_track/geometry.hpp"
#include "fluent_track/hungarian.hpp"

#include <set>

namespace fluent_track {

namespace {

constexpr double kPersistenceBonus = 1e-9;

void check_unique(const std::vector<FrameObject>& objs, int frame, const char* side) {
    std::set<int> seen;
    for (const auto& o : objs) {
        if (!seen.insert(o.id).second) {
            throw InputError(std::string("duplicate ") + side + " id " + std::to_string(o.id) + " in frame " +
                             std::to_string(frame));
        }
    }
}

/// Overlap of a pair, or nothing when the gate rejects it.
std::optional<double> overlap(const FrameObject& g, const FrameObject& p, const MatchOptions& options) {
    if (g.box && p.box) {
        const double iou = box_iou(*g.box, *p.box);
        if (iou < options.iou_threshold) return std::nullopt;
        return iou;
    }
    const double d = ground_distance(g.location, p.location);
    if (d > options.distance_gate) return std::nullopt;
    return 1.0 - d / options.distance_gate;
}

}  // namespace

FrameTable frame_table(std::span<const Trajectory> trajectories) {
    FrameTable out;
    for (const auto& t : trajectories) {
        for (const auto& pt : t.points) out[pt.frame].push_back({t.object_id, pt.location, std::nullopt, pt.state});
    }
    return out;
}

MatchResult match_frames(const FrameTable& gt, const FrameTable& pred, const MatchOptions& options) {
    if (options.distance_gate <= 0.0) throw InputError("distance gate must be positive");
    std::set<int> frames;
    for (const auto& [f, objs] : gt) frames.insert(f);
    for (const auto& [f, objs] : pred) frames.insert(f);

    static const std::vector<FrameObject> kNone;
    std::map<int, int> last_pred;      // gt id -> pred id of its latest match
    std::map<int, bool> last_matched;  // gt id -> matched at its previous present frame
    MatchResult out;
    for (int f : frames) {
        auto gi = gt.find(f);
        auto pi = pred.find(f);
        const auto& g = gi == gt.end() ? kNone : gi->second;
        const auto& p = pi == pred.end() ? kNone : pi->second;
        check_unique(g, f, "ground-truth");
        check_unique(p, f, "prediction");

        FrameMatch fm;
        fm.frame = f;
        fm.gt_count = static_cast<int>(g.size());
        fm.pred_count = static_cast<int>(p.size());
        Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()),
                                                     static_cast<Eigen::Index>(p.size()));
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (auto ov = overlap(g[i], p[j], options)) {
                    auto it = last_pred.find(g[i].id);
                    const bool persists = it != last_pred.end() && it->second == p[j].id;
                    cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        -(1.0 + *ov + (persists ? kPersistenceBonus : 0.0));
                }
            }
        }
        const auto assign = hungarian(cost);
        std::set<int> matched_gt;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const int j = assign[i];
            if (j < 0 || cost(static_cast<Eigen::Index>(i), j) >= 0.0) continue;
            const auto ov = overlap(g[i], p[static_cast<std::size_t>(j)], options);
            fm.pairs.emplace_back(g[i].id, p[static_cast<std::size_t>(j)].id);
            fm.overlaps.push_back(*ov);
            matched_gt.insert(g[i].id);
        }
        for (const auto& obj : g) {
            const bool matched = matched_gt.count(obj.id) > 0;
            auto lm = last_matched.find(obj.id);
            if (matched && lm != last_matched.end() && !lm->second && last_pred.count(obj.id)) ++out.frag;
            last_matched[obj.id] = matched;
        }
        for (std::size_t k = 0; k < fm.pairs.size(); ++k) {
            const auto [gid, pid] = fm.pairs[k];
            auto it = last_pred.find(gid);
            if (it != last_pred.end() && it->second != pid) ++out.ids;
            last_pred[gid] = pid;
            out.overlap_sum += fm.overlaps[k];
        }
        const int m = static_cast<int>(fm.pairs.size());
        out.matches += m;
        out.gt_count += fm.gt_count;
        out.fn += fm.gt_count - m;
        out.fp += fm.pred_count - m;
        out.frames.push_back(std::move(fm));
    }
    return out;
}

ClearMetrics clear_metrics(int gt_count, int fp, int fn, int ids, int frag) {
    if (gt_count <= 0) throw InputError("CLEAR metrics need a positive ground-truth count");
    if (fp < 0 || fn < 0 || ids < 0 || frag < 0) throw InputError("error counts must be non-negative");
    ClearMetrics m;
    const double g = static_cast<double>(gt_count);
    m.fp = fp;
    m.fn = fn;
    m.ids = ids;
    m.frag = frag;
    m.mota = 1.0 - static_cast<double>(fp + fn + ids) / g;
    m.moda = 1.0 - static_cast<double>(fp + fn) / g;
    return m;
}

ClearMetrics clear_metrics(const MatchResult& match, int gt_count) {
    auto m = clear_metrics(gt_count, match.fp, match.fn, match.ids, match.frag);
    if (match.matches > 0) m.motp = match.overlap_sum / match.matches;
    double frame_sum = 0.0;
    int frames = 0;
    for (const auto& f : match.frames) {
        if (f.pairs.empty()) continue;
        double s = 0.0;
        for (double o : f.overlaps) s += o;
        frame_sum += s / static_cast<double>(f.pairs.size());
        ++frames;
    }
    if (frames > 0) m.modp = frame_sum / frames;
    return m;
}

std::optional<double> FluentMetrics::precision(VisibilityState s) const {
    const int k = state_index(s);
    int col = 0;
    for (int g = 0; g < 3; ++g) col += confusion[g][k];
    if (col == 0) return std::nullopt;
    return static_cast<double>(confusion[k][k]) / col;
}

std::optional<double> FluentMetrics::recall(VisibilityState s) const {
    const int k = state_index(s);
    int row = 0;
    for (int p = 0; p < 3; ++p) row += confusion[k][p];
    if (row == 0) return std::nullopt;
    return static_cast<double>(confusion[k][k]) / row;
}

FluentMetrics fluent_metrics(const MatchResult& match, const FrameTable& gt, const FrameTable& pred) {
    FluentMetrics out;
    for (const auto& fm : match.frames) {
        auto gi = gt.find(fm.frame);
        auto pi = pred.find(fm.frame);
        if (fm.pairs.empty()) continue;
        if (gi == gt.end() || pi == pred.end()) throw InputError("match refers to a frame missing from the tables");
        std::map<int, VisibilityState> gs;
        std::map<int, VisibilityState> ps;
        for (const auto& o : gi->second) gs[o.id] = o.state;
        for (const auto& o : pi->second) ps[o.id] = o.state;
        for (const auto& [g, p] : fm.pairs) ++out.confusion[state_index(gs.at(g))][state_index(ps.at(p))];
    }
    return out;
}

}  // namespace fluent_track
