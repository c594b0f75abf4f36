#include "fluent_track/error.hpp"
#include "fluent_track/solver.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace fluent_track {

namespace {

class PathEnumerator {
public:
    PathEnumerator(const TransitionGraph& graph, std::int64_t max_paths) : graph_(graph), max_paths_(max_paths) {}

    void run() {
        for (const auto& n : graph_.nodes()) {
            if (n.can_enter && n.capacity > 0) {
                stack_.assign(1, n.id);
                edges_.clear();
                extend(graph_.entry_cost + n.interior_cost);
            }
        }
    }

    std::vector<ObjectPath> negative;
    std::int64_t count = 0;

private:
    void extend(double cost) {
        const auto& node = graph_.node(stack_.back());
        if (node.can_exit) {
            if (++count > max_paths_) throw LimitExceeded("oracle path enumeration exceeded its limit");
            const double total = cost + node.terminal_cost + graph_.exit_cost;
            if (total < 0.0) negative.push_back({stack_, edges_, total});
        }
        for (int e : graph_.out_edges(node.id)) {
            const auto& edge = graph_.edges()[static_cast<std::size_t>(e)];
            const auto& to = graph_.node(edge.to);
            if (to.capacity <= 0) continue;
            stack_.push_back(to.id);
            edges_.push_back(e);
            extend(cost + edge.cost + to.interior_cost);
            stack_.pop_back();
            edges_.pop_back();
        }
    }

    const TransitionGraph& graph_;
    std::int64_t max_paths_;
    std::vector<int> stack_;
    std::vector<int> edges_;
};

class SubsetSearch {
public:
    SubsetSearch(const TransitionGraph& graph, const std::vector<ObjectPath>& paths, int max_objects,
                 int max_contained)
        : graph_(graph),
          paths_(paths),
          max_objects_(max_objects),
          max_contained_(max_contained),
          flow_(graph.nodes().size(), 0) {}

    void run() { search(0, 0.0, 0); }

    double best_cost = 0.0;
    std::vector<int> best_set;

private:
    bool fits(const ObjectPath& p) const {
        std::map<std::pair<int, int>, int> extra;
        for (int v : p.nodes) {
            const auto& n = graph_.node(v);
            if (flow_[static_cast<std::size_t>(v)] >= n.capacity) return false;
            if (n.kind == NodeKind::Contained) {
                const std::pair<int, int> key{n.container, n.first_frame};
                auto it = ledger_.find(key);
                const int used = (it == ledger_.end() ? 0 : it->second) + ++extra[key];
                if (used > max_contained_) return false;
            }
        }
        return true;
    }

    void apply(const ObjectPath& p, int delta) {
        for (int v : p.nodes) {
            flow_[static_cast<std::size_t>(v)] += delta;
            const auto& n = graph_.node(v);
            if (n.kind == NodeKind::Contained) ledger_[{n.container, n.first_frame}] += delta;
        }
    }

    void search(std::size_t from, double cost, int used) {
        if (cost < best_cost - 1e-15) {
            best_cost = cost;
            best_set = chosen_;
        }
        if (used == max_objects_) return;
        for (std::size_t i = from; i < paths_.size(); ++i) {
            // Paths are sorted by cost, so the next slots can at best add the next costs.
            double bound = cost;
            for (std::size_t k = i; k < paths_.size() && k < i + static_cast<std::size_t>(max_objects_ - used); ++k) {
                bound += paths_[k].cost;
            }
            if (bound >= best_cost - 1e-15) return;
            if (!fits(paths_[i])) continue;
            apply(paths_[i], +1);
            chosen_.push_back(static_cast<int>(i));
            search(i + 1, cost + paths_[i].cost, used + 1);
            chosen_.pop_back();
            apply(paths_[i], -1);
        }
    }

    const TransitionGraph& graph_;
    const std::vector<ObjectPath>& paths_;
    int max_objects_;
    int max_contained_;
    std::vector<int> flow_;
    std::map<std::pair<int, int>, int> ledger_;
    std::vector<int> chosen_;
};

}  // namespace

OracleResult brute_force_oracle(const TransitionGraph& graph, const SolveOptions& options,
                                const OracleLimits& limits) {
    graph.check_acyclic();
    if (graph.frame_span() > limits.max_frames) {
        throw LimitExceeded("oracle supports at most " + std::to_string(limits.max_frames) + " frames");
    }
    if (graph.max_nodes_per_frame() > limits.max_nodes_per_frame) {
        throw LimitExceeded("oracle supports at most " + std::to_string(limits.max_nodes_per_frame) +
                            " nodes per frame");
    }
    PathEnumerator paths(graph, limits.max_paths);
    paths.run();
    auto& candidates = paths.negative;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const ObjectPath& a, const ObjectPath& b) { return a.cost < b.cost; });
    int max_objects = limits.max_objects;
    if (options.max_objects >= 0) max_objects = std::min(max_objects, options.max_objects);
    SubsetSearch search(graph, candidates, max_objects, options.max_contained);
    search.run();

    OracleResult out;
    out.enumerated_paths = paths.count;
    out.objective = -search.best_cost;
    for (int i : search.best_set) out.paths.push_back(candidates[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace fluent_track
