#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "covplan/traversability.hpp"
#include "covplan/vec3.hpp"
#include "covplan/voxel_grid.hpp"

namespace covplan {

enum class Cell2D : std::uint8_t { Free = 0, Occupied = 1, Unknown = 2 };

struct OccupancyGrid2D {
    Vec2 origin;
    double cell_size = 0.05;
    int nx = 0, ny = 0;
    std::vector<std::uint8_t> state;

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(x);
    }
    bool in_bounds(int x, int y) const { return x >= 0 && x < nx && y >= 0 && y < ny; }
    Cell2D at(int x, int y) const { return static_cast<Cell2D>(state[index(x, y)]); }
    void set(int x, int y, Cell2D s) { state[index(x, y)] = static_cast<std::uint8_t>(s); }
    std::pair<int, int> cell_of(const Vec2& p) const {
        return {static_cast<int>(std::floor((p.x - origin.x) / cell_size)),
                static_cast<int>(std::floor((p.y - origin.y) / cell_size))};
    }
    Vec2 center_of(int x, int y) const {
        return {origin.x + (x + 0.5) * cell_size, origin.y + (y + 0.5) * cell_size};
    }
};

// even-odd test, works for any simple polygon
inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
    bool inside = false;
    std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((poly[i].y > p.y) != (poly[j].y > p.y)) {
            double x = poly[j].x + (p.y - poly[j].y) / (poly[i].y - poly[j].y) *
                                       (poly[i].x - poly[j].x);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

struct FootprintPolygon {
    std::vector<Vec2> vertices; // convex, counter-clockwise, origin inside

    void validate() const {
        if (vertices.size() < 3) throw std::runtime_error("footprint: need >= 3 vertices");
        std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 a = vertices[i], b = vertices[(i + 1) % n], c = vertices[(i + 2) % n];
            if ((b - a).cross(c - b) <= 0.0)
                throw std::runtime_error("footprint: polygon must be convex counter-clockwise");
        }
        if (!point_in_polygon({0.0, 0.0}, vertices))
            throw std::runtime_error("footprint: polygon must contain the origin");
    }

    double circumradius() const {
        double r = 0.0;
        for (const auto& v : vertices) r = std::max(r, v.norm());
        return r;
    }

    std::vector<Vec2> transformed(const Vec2& pos, double yaw) const {
        double c = std::cos(yaw), s = std::sin(yaw);
        std::vector<Vec2> out;
        out.reserve(vertices.size());
        for (const auto& v : vertices)
            out.push_back({pos.x + c * v.x - s * v.y, pos.y + s * v.x + c * v.y});
        return out;
    }
};

// 2D occupancy from the 3D grid: a column is an obstacle when any voxel
// between band_lo and band_hi above the local ground is occupied. Local
// ground comes from the nearest traversable graph vertex; columns with no
// ground nearby stay Unknown.
inline OccupancyGrid2D project_occupancy(const VoxelOccupancyGrid& grid3d,
                                         const TraversabilityGraph& graph,
                                         double cost_threshold, double cell_size,
                                         double band_lo = 0.1, double band_hi = 1.5,
                                         double ground_radius = 0.8) {
    OccupancyGrid2D g;
    g.cell_size = cell_size;
    g.origin = {grid3d.origin.x, grid3d.origin.y};
    g.nx = static_cast<int>(std::ceil(grid3d.dims[0] * grid3d.voxel_size / cell_size));
    g.ny = static_cast<int>(std::ceil(grid3d.dims[1] * grid3d.voxel_size / cell_size));
    g.state.assign(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny),
                   static_cast<std::uint8_t>(Cell2D::Unknown));

    // bucket traversable vertices for the ground lookup
    double bucket = std::max(ground_radius, 0.25);
    int bx = std::max(1, static_cast<int>(std::ceil(g.nx * cell_size / bucket)));
    int by = std::max(1, static_cast<int>(std::ceil(g.ny * cell_size / bucket)));
    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(bx) * by);
    auto bucket_of = [&](double x, double y) {
        int ix = std::clamp(static_cast<int>((x - g.origin.x) / bucket), 0, bx - 1);
        int iy = std::clamp(static_cast<int>((y - g.origin.y) / bucket), 0, by - 1);
        return std::make_pair(ix, iy);
    };
    for (int v = 0; v < graph.size(); ++v) {
        if (!graph.traversable(v, cost_threshold)) continue;
        auto [ix, iy] = bucket_of(graph.nodes[static_cast<std::size_t>(v)].x,
                                  graph.nodes[static_cast<std::size_t>(v)].y);
        buckets[static_cast<std::size_t>(iy) * bx + ix].push_back(v);
    }

    for (int y = 0; y < g.ny; ++y)
        for (int x = 0; x < g.nx; ++x) {
            Vec2 c = g.center_of(x, y);
            auto [ix, iy] = bucket_of(c.x, c.y);
            double best = ground_radius * ground_radius;
            double ground = std::numeric_limits<double>::quiet_NaN();
            for (int oy = std::max(0, iy - 1); oy <= std::min(by - 1, iy + 1); ++oy)
                for (int ox = std::max(0, ix - 1); ox <= std::min(bx - 1, ix + 1); ++ox)
                    for (int v : buckets[static_cast<std::size_t>(oy) * bx + ox]) {
                        const Vec3& p = graph.nodes[static_cast<std::size_t>(v)];
                        double d2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
                        if (d2 < best) {
                            best = d2;
                            ground = p.z;
                        }
                    }
            if (std::isnan(ground)) continue; // Unknown

            bool occ = false;
            double step = grid3d.voxel_size * 0.5;
            for (double z = ground + band_lo; z <= ground + band_hi && !occ; z += step) {
                GridIndex cell = grid3d.cell_of({c.x, c.y, z});
                if (grid3d.in_bounds(cell) && grid3d.is_occupied(cell)) occ = true;
            }
            g.set(x, y, occ ? Cell2D::Occupied : Cell2D::Free);
        }
    return g;
}

inline void stamp_polygon(OccupancyGrid2D& grid, const std::vector<Vec2>& polygon) {
    double lo_x = polygon[0].x, hi_x = polygon[0].x, lo_y = polygon[0].y, hi_y = polygon[0].y;
    for (const auto& p : polygon) {
        lo_x = std::min(lo_x, p.x); hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y); hi_y = std::max(hi_y, p.y);
    }
    auto [x0, y0] = grid.cell_of({lo_x, lo_y});
    auto [x1, y1] = grid.cell_of({hi_x, hi_y});
    for (int y = std::max(0, y0); y <= std::min(grid.ny - 1, y1); ++y)
        for (int x = std::max(0, x0); x <= std::min(grid.nx - 1, x1); ++x)
            if (point_in_polygon(grid.center_of(x, y), polygon)) grid.set(x, y, Cell2D::Occupied);
}

struct PathPose {
    Vec2 position;
    double yaw = 0.0;
    double arclength = 0.0;
    int waypoint = -1; // waypoint index reached at this pose, -1 otherwise
};

// Densifies a polyline into poses spaced every `step` of arc length, with
// yaw following the segment direction.
inline std::vector<PathPose> sample_path(const std::vector<Vec2>& polyline, double step) {
    std::vector<PathPose> out;
    if (polyline.empty()) return out;
    double s = 0.0;
    double carry = 0.0;
    double yaw = 0.0;
    for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
        Vec2 a = polyline[k], b = polyline[k + 1];
        Vec2 d = b - a;
        double len = d.norm();
        if (len < 1e-12) continue;
        yaw = std::atan2(d.y, d.x);
        double t = carry;
        while (t < len) {
            Vec2 p = {a.x + d.x * (t / len), a.y + d.y * (t / len)};
            out.push_back({p, yaw, s + t, -1});
            t += step;
        }
        carry = t - len;
        s += len;
    }
    out.push_back({polyline.back(), yaw, s, -1});
    return out;
}

struct BlockedInterval {
    int first = 0, last = 0;      // inclusive pose index range
    double s_begin = 0.0, s_end = 0.0;
};

// Footprint sweep: a pose is blocked when any cell whose center lies inside
// the transformed footprint is occupied. Contiguous blocked poses merge
// into intervals.
inline std::vector<BlockedInterval> validate_path(const std::vector<PathPose>& poses,
                                                  const OccupancyGrid2D& grid,
                                                  const FootprintPolygon& footprint) {
    std::vector<BlockedInterval> intervals;
    bool open = false;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        auto poly = footprint.transformed(poses[i].position, poses[i].yaw);
        double lo_x = poly[0].x, hi_x = poly[0].x, lo_y = poly[0].y, hi_y = poly[0].y;
        for (const auto& p : poly) {
            lo_x = std::min(lo_x, p.x); hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y); hi_y = std::max(hi_y, p.y);
        }
        bool blocked = false;
        auto [x0, y0] = grid.cell_of({lo_x, lo_y});
        auto [x1, y1] = grid.cell_of({hi_x, hi_y});
        for (int y = std::max(0, y0); y <= std::min(grid.ny - 1, y1) && !blocked; ++y)
            for (int x = std::max(0, x0); x <= std::min(grid.nx - 1, x1) && !blocked; ++x)
                if (grid.at(x, y) == Cell2D::Occupied &&
                    point_in_polygon(grid.center_of(x, y), poly))
                    blocked = true;
        if (blocked) {
            if (!open) {
                intervals.push_back({static_cast<int>(i), static_cast<int>(i),
                                     poses[i].arclength, poses[i].arclength});
                open = true;
            } else {
                intervals.back().last = static_cast<int>(i);
                intervals.back().s_end = poses[i].arclength;
            }
        } else {
            open = false;
        }
    }
    return intervals;
}

namespace detail {

// 8-connected shortest path on free cells with obstacles inflated by the
// footprint circumradius. Deterministic: fixed neighbor order, ties by
// (f, g, cell index).
inline std::optional<std::vector<Vec2>> grid_search(const OccupancyGrid2D& grid,
                                                    const Vec2& from, const Vec2& to,
                                                    double inflate_radius) {
    int r = static_cast<int>(std::ceil(inflate_radius / grid.cell_size));
    std::vector<std::uint8_t> blocked_mask(grid.state.size(), 0);
    std::vector<std::pair<int, int>> disk;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (std::hypot(dx, dy) * grid.cell_size <= inflate_radius + 1e-9)
                disk.emplace_back(dx, dy);
    for (int y = 0; y < grid.ny; ++y)
        for (int x = 0; x < grid.nx; ++x) {
            if (grid.at(x, y) != Cell2D::Occupied) continue;
            for (auto [dx, dy] : disk) {
                int nx_ = x + dx, ny_ = y + dy;
                if (grid.in_bounds(nx_, ny_)) blocked_mask[grid.index(nx_, ny_)] = 1;
            }
        }

    auto [sx, sy] = grid.cell_of(from);
    auto [tx, ty] = grid.cell_of(to);
    if (!grid.in_bounds(sx, sy) || !grid.in_bounds(tx, ty)) return std::nullopt;
    if (blocked_mask[grid.index(sx, sy)] || blocked_mask[grid.index(tx, ty)])
        return std::nullopt;

    const double inf = std::numeric_limits<double>::max();
    std::vector<double> g_cost(grid.state.size(), inf);
    std::vector<int> parent(grid.state.size(), -1);
    struct Node {
        double f, g;
        int idx;
        bool operator>(const Node& o) const {
            if (f != o.f) return f > o.f;
            if (g != o.g) return g > o.g;
            return idx > o.idx;
        }
    };
    std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
    auto heuristic = [&](int x, int y) {
        return std::hypot(x - tx, y - ty) * grid.cell_size;
    };
    std::size_t start = grid.index(sx, sy), goal = grid.index(tx, ty);
    g_cost[start] = 0.0;
    open.push({heuristic(sx, sy), 0.0, static_cast<int>(start)});
    const int nb[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        std::size_t idx = static_cast<std::size_t>(node.idx);
        if (node.g > g_cost[idx]) continue;
        if (idx == goal) break;
        int x = static_cast<int>(idx % static_cast<std::size_t>(grid.nx));
        int y = static_cast<int>(idx / static_cast<std::size_t>(grid.nx));
        for (const auto& d : nb) {
            int nx_ = x + d[0], ny_ = y + d[1];
            if (!grid.in_bounds(nx_, ny_)) continue;
            std::size_t ni = grid.index(nx_, ny_);
            if (blocked_mask[ni]) continue;
            double step = (d[0] != 0 && d[1] != 0) ? grid.cell_size * std::sqrt(2.0)
                                                   : grid.cell_size;
            double ng = node.g + step;
            if (ng < g_cost[ni] - 1e-15) {
                g_cost[ni] = ng;
                parent[ni] = static_cast<int>(idx);
                open.push({ng + heuristic(nx_, ny_), ng, static_cast<int>(ni)});
            }
        }
    }
    if (g_cost[goal] == inf) return std::nullopt;
    std::vector<Vec2> cells;
    for (int i = static_cast<int>(goal); i != -1; i = parent[static_cast<std::size_t>(i)]) {
        int x = static_cast<int>(static_cast<std::size_t>(i) % static_cast<std::size_t>(grid.nx));
        int y = static_cast<int>(static_cast<std::size_t>(i) / static_cast<std::size_t>(grid.nx));
        cells.push_back(grid.center_of(x, y));
    }
    std::reverse(cells.begin(), cells.end());
    return cells;
}

} // namespace detail

struct ReplanStats {
    double old_length = 0.0; // replaced span between the bounding poses
    double new_length = 0.0; // detour length between the same poses
};

// Replans only the blocked intervals: each is replaced by a grid search
// between its bounding free poses. Poses outside the intervals are copied
// bit-identically; arclengths are rebuilt afterwards.
inline std::vector<PathPose> replan_blocked(const std::vector<PathPose>& poses,
                                            const std::vector<BlockedInterval>& blocked,
                                            const OccupancyGrid2D& grid,
                                            const FootprintPolygon& footprint,
                                            std::vector<ReplanStats>* stats = nullptr) {
    if (blocked.empty()) return poses;
    std::vector<PathPose> out;
    out.reserve(poses.size());
    std::size_t cursor = 0;
    for (const auto& interval : blocked) {
        if (interval.first <= 0 || interval.last >= static_cast<int>(poses.size()) - 1)
            throw std::runtime_error("replan_blocked: unreachable interval at path boundary");
        for (int i = interval.first; i <= interval.last; ++i)
            if (poses[static_cast<std::size_t>(i)].waypoint >= 0)
                throw std::runtime_error("replan_blocked: waypoint " +
                                         std::to_string(poses[static_cast<std::size_t>(i)].waypoint) +
                                         " lies inside a blocked interval");
        while (cursor < static_cast<std::size_t>(interval.first))
            out.push_back(poses[cursor++]);
        const PathPose& a = poses[static_cast<std::size_t>(interval.first - 1)];
        const PathPose& b = poses[static_cast<std::size_t>(interval.last + 1)];
        auto detour = detail::grid_search(grid, a.position, b.position,
                                          footprint.circumradius());
        if (!detour)
            throw std::runtime_error(
                "replan_blocked: unreachable interval [" + std::to_string(interval.s_begin) +
                ", " + std::to_string(interval.s_end) + "] m");
        // densify the detour like the original path so validation sees the
        // same pose spacing
        std::vector<Vec2> polyline = {a.position};
        polyline.insert(polyline.end(), detour->begin(), detour->end());
        polyline.push_back(b.position);
        auto detour_poses = sample_path(polyline, grid.cell_size);
        if (stats != nullptr) {
            double old_len = b.arclength - a.arclength;
            double new_len = detour_poses.back().arclength;
            stats->push_back({old_len, new_len});
        }
        // endpoints a and b stay bit-identical originals
        for (std::size_t k = 1; k + 1 < detour_poses.size(); ++k) out.push_back(detour_poses[k]);
        cursor = static_cast<std::size_t>(interval.last + 1);
    }
    while (cursor < poses.size()) out.push_back(poses[cursor++]);

    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i > 0) s += (out[i].position - out[i - 1].position).norm();
        out[i].arclength = s;
    }
    return out;
}

struct ExecutionEvent {
    std::string type;   // waypoint_reached | obstacle_detected | segment_replanned
    double at_driven = 0.0;
    int waypoint = -1;
    double old_length = 0.0, new_length = 0.0;
};

struct ExecutionLog {
    std::vector<ExecutionEvent> events;
    std::vector<Vec2> driven_path;
    double planned_length = 0.0;
    double driven_length = 0.0;
    int waypoints_reached = 0;
    int segments_replanned = 0;
};

struct ObstacleEvent {
    double at_arclength = 0.0; // driven distance at which the obstacle appears
    std::vector<Vec2> polygon;
};

// Event-driven execution: follow the pose sequence, and at each scripted
// obstacle stamp the grid, validate the remaining path and replan the
// blocked intervals. Waypoint order never changes.
inline ExecutionLog simulate_execution(const std::vector<PathPose>& plan_poses,
                                       std::vector<ObstacleEvent> events, OccupancyGrid2D grid,
                                       const FootprintPolygon& footprint) {
    footprint.validate();
    for (std::size_t e = 1; e < events.size(); ++e)
        if (events[e].at_arclength < events[e - 1].at_arclength)
            throw std::runtime_error("simulate_execution: events must be sorted by arclength");

    ExecutionLog log;
    log.planned_length = plan_poses.empty() ? 0.0 : plan_poses.back().arclength;

    // initial validity check
    {
        auto pre = validate_path(plan_poses, grid, footprint);
        if (!pre.empty())
            throw std::runtime_error("simulate_execution: plan blocked before execution");
    }

    std::vector<PathPose> remaining = plan_poses;
    std::size_t next_event = 0;
    std::size_t i = 0;
    double driven = 0.0;
    Vec2 prev;
    bool have_prev = false;

    while (i < remaining.size()) {
        const PathPose& pose = remaining[i];
        if (have_prev) driven += (pose.position - prev).norm();
        prev = pose.position;
        have_prev = true;
        log.driven_path.push_back(pose.position);
        if (pose.waypoint >= 0) {
            log.events.push_back({"waypoint_reached", driven, pose.waypoint, 0.0, 0.0});
            ++log.waypoints_reached;
        }

        while (next_event < events.size() && driven >= events[next_event].at_arclength - 1e-12) {
            stamp_polygon(grid, events[next_event].polygon);
            log.events.push_back({"obstacle_detected", driven, -1, 0.0, 0.0});
            ++next_event;

            std::vector<PathPose> ahead(remaining.begin() + static_cast<long>(i),
                                        remaining.end());
            auto blocked = validate_path(ahead, grid, footprint);
            // drop any interval containing the current pose itself: the
            // robot stands there, it can only replan ahead
            std::vector<BlockedInterval> ahead_blocked;
            for (auto b : blocked) {
                if (b.first == 0)
                    throw std::runtime_error("simulate_execution: obstacle on current pose");
                ahead_blocked.push_back(b);
            }
            if (!ahead_blocked.empty()) {
                std::vector<ReplanStats> stats;
                auto replanned = replan_blocked(ahead, ahead_blocked, grid, footprint, &stats);
                for (const auto& st : stats) {
                    log.events.push_back(
                        {"segment_replanned", driven, -1, st.old_length, st.new_length});
                    ++log.segments_replanned;
                }
                remaining.erase(remaining.begin() + static_cast<long>(i), remaining.end());
                remaining.insert(remaining.end(), replanned.begin(), replanned.end());
            }
        }
        ++i;
    }
    log.driven_length = driven;
    return log;
}

} // namespace covplan
