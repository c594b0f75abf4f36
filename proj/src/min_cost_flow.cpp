#include "fluent_track/min_cost_flow.hpp"

#include "fluent_track/error.hpp"

#include <functional>
#include <limits>
#include <queue>

namespace fluent_track {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-12;
}  // namespace

MinCostFlow::MinCostFlow(int node_count) : adjacency_(static_cast<std::size_t>(node_count)) {}

int MinCostFlow::add_edge(int from, int to, int capacity, double cost) {
    const int n = node_count();
    if (from == to) throw InputError("flow graph cannot contain self loops");
    if (from < 0 || from >= n || to < 0 || to >= n) throw InputError("flow edge endpoint out of range");
    auto& fwd = adjacency_[from];
    auto& bwd = adjacency_[to];
    fwd.push_back({to, capacity, cost, static_cast<int>(bwd.size())});
    bwd.push_back({from, 0, -cost, static_cast<int>(fwd.size()) - 1});
    edge_refs_.push_back({from, static_cast<int>(fwd.size()) - 1});
    initial_capacity_.push_back(capacity);
    return static_cast<int>(edge_refs_.size()) - 1;
}

int MinCostFlow::flow(int edge) const {
    const auto [node, slot] = edge_refs_.at(static_cast<std::size_t>(edge));
    return initial_capacity_[edge] - adjacency_[node][slot].capacity;
}

std::vector<int> MinCostFlow::used_successors(int node) const {
    std::vector<int> out;
    for (std::size_t e = 0; e < edge_refs_.size(); ++e) {
        if (edge_refs_[e].first == node && flow(static_cast<int>(e)) > 0) {
            out.push_back(adjacency_[node][edge_refs_[e].second].to);
        }
    }
    return out;
}

double MinCostFlow::augment_while_negative(int source, int sink) {
    const int n = node_count();
    // Bellman-Ford (queue based) for initial potentials over positive-capacity arcs.
    std::vector<double> potential(n, kInf);
    potential[source] = 0.0;
    {
        std::vector<char> queued(n, 0);
        std::vector<int> relax_count(n, 0);
        std::queue<int> q;
        q.push(source);
        queued[source] = 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            queued[u] = 0;
            for (const auto& a : adjacency_[u]) {
                if (a.capacity <= 0) continue;
                const double nd = potential[u] + a.cost;
                if (nd < potential[a.to] - kEps) {
                    potential[a.to] = nd;
                    if (!queued[a.to]) {
                        if (++relax_count[a.to] > n) throw InputError("negative cycle in flow graph");
                        queued[a.to] = 1;
                        q.push(a.to);
                    }
                }
            }
        }
    }
    for (auto& p : potential) {
        if (p == kInf) p = 0.0;
    }

    double total = 0.0;
    std::vector<double> dist(n);
    std::vector<int> prev_node(n), prev_slot(n);
    while (true) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(prev_node.begin(), prev_node.end(), -1);
        dist[source] = 0.0;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0.0, source});
        while (!pq.empty()) {
            const auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            for (std::size_t s = 0; s < adjacency_[u].size(); ++s) {
                const auto& a = adjacency_[u][s];
                if (a.capacity <= 0) continue;
                double reduced = a.cost + potential[u] - potential[a.to];
                if (reduced < 0.0) reduced = 0.0;
                const double nd = d + reduced;
                if (nd < dist[a.to] - kEps) {
                    dist[a.to] = nd;
                    prev_node[a.to] = u;
                    prev_slot[a.to] = static_cast<int>(s);
                    pq.push({dist[a.to], a.to});
                }
            }
        }
        if (dist[sink] == kInf) break;
        const double path_cost = dist[sink] + potential[sink] - potential[source];
        if (path_cost >= -kEps) break;
        for (int v = 0; v < n; ++v) {
            if (dist[v] < kInf) potential[v] += dist[v];
        }
        for (int v = sink; v != source; v = prev_node[v]) {
            auto& a = adjacency_[prev_node[v]][prev_slot[v]];
            a.capacity -= 1;
            adjacency_[v][a.reverse].capacity += 1;
        }
        total += path_cost;
    }
    return total;
}

}  // namespace fluent_track
