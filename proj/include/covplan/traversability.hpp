#pragma once

#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "covplan/mesh.hpp"
#include "covplan/vec3.hpp"

namespace covplan {

constexpr double kLethalCost = std::numeric_limits<double>::infinity();

// Mesh-vertex graph with per-vertex traversal cost layers. A vertex is
// traversable when its combined cost is finite and below the caller's
// threshold.
struct TraversabilityGraph {
    std::vector<Vec3> nodes;
    std::vector<std::vector<int>> adjacency; // sorted neighbor lists
    std::vector<double> height_diff;         // layer: local height difference, in [0,1]
    std::vector<double> inflation;           // layer: obstacle inflation, in [0,1] or LETHAL
    std::vector<double> cost;                // combined, in [0,1] or LETHAL

    int size() const { return static_cast<int>(nodes.size()); }
    bool lethal(int v) const { return cost[static_cast<std::size_t>(v)] == kLethalCost; }
    bool traversable(int v, double threshold) const {
        return !lethal(v) && cost[static_cast<std::size_t>(v)] < threshold;
    }

    // Nearest traversable vertex to a point by horizontal distance first,
    // full distance as tie-breaker. Returns -1 if none within max_radius.
    int nearest_traversable(const Vec3& p, double threshold,
                            double max_radius = std::numeric_limits<double>::max()) const {
        int best = -1;
        double best_d = max_radius * max_radius;
        for (int v = 0; v < size(); ++v) {
            if (!traversable(v, threshold)) continue;
            Vec3 d = nodes[static_cast<std::size_t>(v)] - p;
            double d2 = d.x * d.x + d.y * d.y + 0.25 * d.z * d.z;
            if (d2 < best_d) {
                best_d = d2;
                best = v;
            }
        }
        return best;
    }
};

// Builds the traversability layers from the complete model:
//  - height_diff: max 1-ring height difference normalized by max_step,
//    saturating at 1 (vertices at 1 are lethal sources)
//  - inflation: LETHAL within inscribed_radius (geodesic) of a lethal
//    source, tapering linearly to 0 at 2*inscribed_radius
inline TraversabilityGraph build_traversability_graph(const TriangleMesh& mesh, double max_step,
                                                      double inscribed_radius) {
    if (max_step <= 0.0) throw std::runtime_error("traversability: max_step must be positive");
    TraversabilityGraph g;
    g.nodes = mesh.vertices;
    std::size_t n = g.nodes.size();
    std::vector<std::set<int>> adj(n);
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
            adj[static_cast<std::size_t>(a)].insert(b);
            adj[static_cast<std::size_t>(b)].insert(a);
        }
    g.adjacency.resize(n);
    for (std::size_t v = 0; v < n; ++v)
        g.adjacency[v] = std::vector<int>(adj[v].begin(), adj[v].end());

    g.height_diff.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        if (g.adjacency[v].empty()) {
            g.height_diff[v] = 1.0; // isolated vertex
            continue;
        }
        double max_dz = 0.0;
        for (int u : g.adjacency[v])
            max_dz = std::max(max_dz,
                              std::abs(g.nodes[static_cast<std::size_t>(u)].z - g.nodes[v].z));
        g.height_diff[v] = std::min(1.0, max_dz / max_step);
    }

    // multi-source geodesic distance from lethal sources
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    for (std::size_t v = 0; v < n; ++v)
        if (g.height_diff[v] >= 1.0) {
            dist[v] = 0.0;
            pq.push({0.0, static_cast<int>(v)});
        }
    double reach = 2.0 * inscribed_radius;
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(v)]) continue;
        if (d > reach) continue;
        for (int u : g.adjacency[static_cast<std::size_t>(v)]) {
            double nd = d + (g.nodes[static_cast<std::size_t>(u)] -
                             g.nodes[static_cast<std::size_t>(v)]).norm();
            if (nd < dist[static_cast<std::size_t>(u)]) {
                dist[static_cast<std::size_t>(u)] = nd;
                pq.push({nd, u});
            }
        }
    }

    g.inflation.assign(n, 0.0);
    g.cost.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        double d = dist[v];
        if (d <= inscribed_radius)
            g.inflation[v] = kLethalCost;
        else if (d <= reach)
            g.inflation[v] = 1.0 - (d - inscribed_radius) / inscribed_radius;
        else
            g.inflation[v] = 0.0;

        if (g.height_diff[v] >= 1.0 || g.inflation[v] == kLethalCost)
            g.cost[v] = kLethalCost;
        else
            g.cost[v] = std::max(g.height_diff[v], g.inflation[v]);
    }
    return g;
}

// Breadth-first closure over traversable vertices from `start`.
// Returned ids are sorted.
inline std::vector<int> reachable_vertices(const TraversabilityGraph& graph, int start,
                                           double cost_threshold) {
    if (start < 0 || start >= graph.size())
        throw std::runtime_error("reachable_vertices: start vertex out of range");
    if (!graph.traversable(start, cost_threshold))
        throw std::runtime_error("reachable_vertices: start vertex not traversable");
    std::vector<std::uint8_t> seen(graph.nodes.size(), 0);
    std::vector<int> queue = {start}, out;
    seen[static_cast<std::size_t>(start)] = 1;
    while (!queue.empty()) {
        int v = queue.back();
        queue.pop_back();
        out.push_back(v);
        for (int u : graph.adjacency[static_cast<std::size_t>(v)]) {
            if (seen[static_cast<std::size_t>(u)]) continue;
            seen[static_cast<std::size_t>(u)] = 1;
            if (graph.traversable(u, cost_threshold)) queue.push_back(u);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct ShortestPathResult {
    std::vector<double> dist;  // graph-size, infinity where unreachable
    std::vector<int> parent;   // -1 at source / unreachable
};

// Single-source Dijkstra over traversable vertices. Edge weight is the
// Euclidean edge length scaled by (1 + penalty_weight * mean endpoint cost).
inline ShortestPathResult shortest_paths(const TraversabilityGraph& graph, int source,
                                         double cost_threshold, double penalty_weight) {
    std::size_t n = graph.nodes.size();
    ShortestPathResult r;
    r.dist.assign(n, std::numeric_limits<double>::infinity());
    r.parent.assign(n, -1);
    if (!graph.traversable(source, cost_threshold)) return r;
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    r.dist[static_cast<std::size_t>(source)] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > r.dist[static_cast<std::size_t>(v)]) continue;
        for (int u : graph.adjacency[static_cast<std::size_t>(v)]) {
            if (!graph.traversable(u, cost_threshold)) continue;
            double len = (graph.nodes[static_cast<std::size_t>(u)] -
                          graph.nodes[static_cast<std::size_t>(v)]).norm();
            double penalty = 0.5 * (graph.cost[static_cast<std::size_t>(u)] +
                                    graph.cost[static_cast<std::size_t>(v)]);
            double nd = d + len * (1.0 + penalty_weight * penalty);
            if (nd < r.dist[static_cast<std::size_t>(u)]) {
                r.dist[static_cast<std::size_t>(u)] = nd;
                r.parent[static_cast<std::size_t>(u)] = v;
                pq.push({nd, u});
            }
        }
    }
    return r;
}

inline std::vector<int> extract_path(const ShortestPathResult& r, int target) {
    std::vector<int> path;
    for (int v = target; v != -1; v = r.parent[static_cast<std::size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace covplan
