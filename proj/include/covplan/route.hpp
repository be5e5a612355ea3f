#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "covplan/parallel.hpp"
#include "covplan/rng.hpp"
#include "covplan/sensor.hpp"
#include "covplan/traversability.hpp"
#include "covplan/vec3.hpp"

namespace covplan {

struct Waypoint {
    Vec3 base_position;
    double base_yaw = 0.0;
    int source_viewpoint = -1;
    int graph_vertex = -1; // supporting vertex used for path search
};

struct CostMatrix {
    int n = 0;
    std::vector<double> cost;                   // n*n, symmetric, 0 diagonal
    std::vector<std::vector<int>> paths;        // n*n vertex polylines (i->j)

    double at(int i, int j) const { return cost[static_cast<std::size_t>(i * n + j)]; }
    const std::vector<int>& path(int i, int j) const {
        return paths[static_cast<std::size_t>(i * n + j)];
    }
};

struct Tour {
    std::vector<int> order; // permutation of waypoint indices
    double total_cost = 0.0;
    bool closed = false;

    static double cost_of(const std::vector<int>& order, const CostMatrix& costs, bool closed) {
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k)
            total += costs.at(order[k], order[k + 1]);
        if (closed && order.size() > 1) total += costs.at(order.back(), order.front());
        return total;
    }
};

// Base pose from a sensor pose: undo the mount transform. The supporting
// vertex is re-resolved because a horizontal mount offset can shift the
// base onto a different (possibly lethal) vertex.
inline Waypoint viewpoint_to_waypoint(const CandidateViewpoint& viewpoint,
                                      const SensorModel& sensor,
                                      const TraversabilityGraph& graph, double cost_threshold) {
    Waypoint w;
    w.source_viewpoint = viewpoint.id;
    w.base_yaw = wrap_angle_2pi(viewpoint.yaw - sensor.mount_offset.yaw);
    // sensor = base * mount  =>  base = sensor * mount^-1
    w.base_position = viewpoint.position - rotate_z(sensor.mount_offset.translation, w.base_yaw);

    double mount_xy = std::hypot(sensor.mount_offset.translation.x,
                                 sensor.mount_offset.translation.y);
    if (mount_xy < 1e-12) {
        w.graph_vertex = viewpoint.graph_vertex;
    } else {
        w.graph_vertex = graph.nearest_traversable(w.base_position, cost_threshold,
                                                   std::max(1.0, 4.0 * mount_xy));
        if (w.graph_vertex < 0)
            throw std::runtime_error(
                "viewpoint_to_waypoint: base position of viewpoint " +
                std::to_string(viewpoint.id) + " has no traversable support");
    }
    if (!graph.traversable(w.graph_vertex, cost_threshold))
        throw std::runtime_error("viewpoint_to_waypoint: base position over a lethal vertex");
    return w;
}

// Pairwise shortest-path costs between waypoints on the traversability
// graph; one single-source run per waypoint, parallel over sources. The
// matrix is filled from the i<j runs so it is symmetric by construction.
inline CostMatrix pairwise_path_costs(const TraversabilityGraph& graph,
                                      const std::vector<Waypoint>& waypoints,
                                      double cost_threshold, double penalty_weight,
                                      int workers = 0) {
    int n = static_cast<int>(waypoints.size());
    CostMatrix m;
    m.n = n;
    m.cost.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    m.paths.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    if (n < 2) return m;

    std::vector<ShortestPathResult> runs(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
        runs[i] = shortest_paths(graph, waypoints[i].graph_vertex, cost_threshold,
                                 penalty_weight);
    });

    std::string unreachable;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            int tv = waypoints[static_cast<std::size_t>(j)].graph_vertex;
            double d = runs[static_cast<std::size_t>(i)].dist[static_cast<std::size_t>(tv)];
            if (!std::isfinite(d)) {
                unreachable += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
                continue;
            }
            std::vector<int> path = extract_path(runs[static_cast<std::size_t>(i)], tv);
            m.cost[static_cast<std::size_t>(i * n + j)] = d;
            m.cost[static_cast<std::size_t>(j * n + i)] = d;
            std::vector<int> rev(path.rbegin(), path.rend());
            m.paths[static_cast<std::size_t>(i * n + j)] = std::move(path);
            m.paths[static_cast<std::size_t>(j * n + i)] = std::move(rev);
        }
    if (!unreachable.empty())
        throw std::runtime_error("pairwise_path_costs: no path between waypoint pairs" +
                                 unreachable);
    return m;
}

// Open tour from a minimum spanning tree: Prim from the start index, then a
// preorder walk (children in increasing index order).
inline Tour mst_initial_tour(const CostMatrix& costs, int start = 0) {
    int n = costs.n;
    if (n < 2) throw std::runtime_error("mst_initial_tour: need at least 2 waypoints");
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<double> key(static_cast<std::size_t>(n), std::numeric_limits<double>::max());
    std::vector<std::uint8_t> in_tree(static_cast<std::size_t>(n), 0);
    key[static_cast<std::size_t>(start)] = 0.0;
    for (int it = 0; it < n; ++it) {
        int best = -1;
        for (int v = 0; v < n; ++v)
            if (!in_tree[static_cast<std::size_t>(v)] &&
                (best < 0 || key[static_cast<std::size_t>(v)] < key[static_cast<std::size_t>(best)]))
                best = v;
        in_tree[static_cast<std::size_t>(best)] = 1;
        for (int v = 0; v < n; ++v)
            if (!in_tree[static_cast<std::size_t>(v)] &&
                costs.at(best, v) < key[static_cast<std::size_t>(v)]) {
                key[static_cast<std::size_t>(v)] = costs.at(best, v);
                parent[static_cast<std::size_t>(v)] = best;
            }
    }
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
        if (parent[static_cast<std::size_t>(v)] >= 0)
            children[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])].push_back(v);

    Tour tour;
    tour.closed = false;
    std::vector<int> stack = {start};
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        tour.order.push_back(v);
        auto& ch = children[static_cast<std::size_t>(v)];
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    tour.total_cost = Tour::cost_of(tour.order, costs, tour.closed);
    return tour;
}

struct AnnealSchedule {
    double t0 = 0.0;      // 0 = initial cost / n
    double alpha = 0.995; // cooling factor per n iterations
    long iters = 0;       // 0 = 20000 * n
};

// 2-opt simulated annealing. Position 0 of the tour is pinned (open tours
// start at the waypoint nearest the configured start). Returns the best
// tour ever seen, never worse than the input.
inline Tour anneal_tour(const Tour& initial, const CostMatrix& costs,
                        const AnnealSchedule& schedule, std::uint64_t seed) {
    int n = static_cast<int>(initial.order.size());
    if (n != costs.n) throw std::runtime_error("anneal_tour: tour does not match cost matrix");
    Tour best = initial;
    best.total_cost = Tour::cost_of(best.order, costs, best.closed);
    if (n < 4) return best;

    std::vector<int> cur = best.order;
    double cur_cost = best.total_cost;
    bool closed = best.closed;

    double t = schedule.t0 > 0.0 ? schedule.t0 : cur_cost / n;
    long iters = schedule.iters > 0 ? schedule.iters : 20000L * n;
    Rng rng(seed);

    int first_mutable = 1; // index 0 pinned
    int last = n - 1;
    for (long it = 0; it < iters; ++it) {
        // pick 1 <= i < j <= n-1 and reverse cur[i..j]
        int i = first_mutable + static_cast<int>(rng.uniform_index(
                                    static_cast<std::uint64_t>(last - first_mutable)));
        int j = i + 1 + static_cast<int>(rng.uniform_index(
                            static_cast<std::uint64_t>(last - i)));
        int a = cur[static_cast<std::size_t>(i - 1)];
        int b = cur[static_cast<std::size_t>(i)];
        int c = cur[static_cast<std::size_t>(j)];
        double delta = 0.0;
        delta -= costs.at(a, b);
        delta += costs.at(a, c);
        if (j < last) {
            int d = cur[static_cast<std::size_t>(j + 1)];
            delta -= costs.at(c, d);
            delta += costs.at(b, d);
        } else if (closed) {
            int d = cur[0];
            delta -= costs.at(c, d);
            delta += costs.at(b, d);
        }
        // open tour with j == last: the reversed tail just ends at b

        bool accept = delta < 0.0;
        if (!accept && t > 1e-300) accept = rng.uniform() < std::exp(-delta / t);
        if (accept) {
            std::reverse(cur.begin() + i, cur.begin() + j + 1);
            cur_cost += delta;
            if (cur_cost < best.total_cost - 1e-12) {
                best.order = cur;
                best.total_cost = cur_cost;
            }
        }
        if ((it + 1) % n == 0) t *= schedule.alpha;
    }
    // recompute to clear accumulated floating-point drift
    best.total_cost = Tour::cost_of(best.order, costs, best.closed);
    return best;
}

} // namespace covplan
