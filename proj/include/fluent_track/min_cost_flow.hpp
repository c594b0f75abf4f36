#pragma once

#include <vector>

namespace fluent_track {

/**
 * Successive-shortest-paths min-cost flow with integer capacities.
 *
 * Initial potentials come from Bellman-Ford, so negative edge costs are fine
 * as long as the input graph has no negative cycle (all tracking graphs here
 * are DAGs). Each augmentation then runs Dijkstra on reduced costs.
 */
class MinCostFlow {
public:
    explicit MinCostFlow(int node_count);

    /// Returns the edge index used by flow().
    int add_edge(int from, int to, int capacity, double cost);

    /// Pushes unit paths from source to sink while the cheapest path has
    /// negative cost. Returns the total cost of the resulting flow.
    double augment_while_negative(int source, int sink);

    int flow(int edge) const;
    int node_count() const { return static_cast<int>(adjacency_.size()); }

    struct Arc {
        int to;
        int capacity;
        double cost;
        int reverse;
    };
    /// Outgoing forward arcs with positive flow, in insertion order.
    std::vector<int> used_successors(int node) const;

private:
    std::vector<std::vector<Arc>> adjacency_;
    std::vector<std::pair<int, int>> edge_refs_;  // (node, slot) of the forward arc
    std::vector<int> initial_capacity_;
};

}  // namespace fluent_track
