#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "covplan/rng.hpp"
#include "covplan/traversability.hpp"
#include "covplan/vec3.hpp"

namespace covplan {

struct SensorModel {
    double fov_h = 360.0; // degrees, (0, 360]
    double fov_v = 180.0; // degrees
    double range_min = 0.0;
    double range_max = 15.0;
    YawTransform mount_offset{{0.0, 0.0, 0.8}, 0.0}; // sensor frame in base frame

    void validate() const {
        if (fov_h <= 0.0 || fov_h > 360.0)
            throw std::runtime_error("sensor: fov_h must be in (0, 360]");
        if (fov_v <= 0.0 || fov_v > 180.0)
            throw std::runtime_error("sensor: fov_v must be in (0, 180]");
        if (range_min < 0.0 || range_max <= range_min)
            throw std::runtime_error("sensor: require 0 <= range_min < range_max");
    }
};

struct CandidateViewpoint {
    int id = -1;
    int graph_vertex = -1;
    Vec3 position;     // supporting vertex + sensor height
    double yaw = 0.0;  // sensor yaw, [0, 2*pi)
    int reward = 0;
    std::vector<int> covered_ids; // sorted target ids
};

// Number of equally distributed yaw samples per position. The overlap
// factor n stretches the fan so adjacent sectors overlap; the ceiling keeps
// the union covering the full circle when the ratio is fractional.
inline int orientation_count(double fov_h, int n) {
    if (fov_h <= 0.0 || fov_h > 360.0)
        throw std::runtime_error("orientation_count: fov_h must be in (0, 360]");
    if (n < 1) throw std::runtime_error("orientation_count: overlap factor must be >= 1");
    return static_cast<int>(std::ceil(static_cast<double>(n) * 360.0 / fov_h - 1e-9));
}

// Uniform sample without replacement from the reachable set, deterministic
// per seed. Output sorted by id.
inline std::vector<int> subsample_positions(const std::vector<int>& reachable, int count,
                                            std::uint64_t seed) {
    if (reachable.empty()) throw std::runtime_error("subsample_positions: empty reachable set");
    if (count < 1) throw std::runtime_error("subsample_positions: count must be >= 1");
    std::vector<int> pool = reachable;
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(count), pool.size());
    Rng rng(seed);
    // partial Fisher-Yates
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + rng.uniform_index(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// One candidate per (position, yaw) pair; yaws form an even fan anchored at
// yaw_offset. Rewards start at zero and are filled by the visibility stage.
inline std::vector<CandidateViewpoint> generate_candidates(const std::vector<int>& positions,
                                                           const TraversabilityGraph& graph,
                                                           const SensorModel& sensor,
                                                           double sensor_height, int n,
                                                           double yaw_offset = 0.0) {
    if (positions.empty()) throw std::runtime_error("generate_candidates: no positions");
    sensor.validate();
    int yaw_count = orientation_count(sensor.fov_h, n);
    std::vector<CandidateViewpoint> out;
    out.reserve(positions.size() * static_cast<std::size_t>(yaw_count));
    int id = 0;
    for (int v : positions) {
        Vec3 base = graph.nodes[static_cast<std::size_t>(v)];
        for (int k = 0; k < yaw_count; ++k) {
            CandidateViewpoint c;
            c.id = id++;
            c.graph_vertex = v;
            c.position = base + Vec3{0.0, 0.0, sensor_height};
            c.yaw = wrap_angle_2pi(yaw_offset + k * kTwoPi / yaw_count);
            out.push_back(std::move(c));
        }
    }
    return out;
}

// Range and field-of-view test against a yaw-oriented sensor with zero
// pitch/roll.
inline bool in_frustum(const CandidateViewpoint& candidate, const Vec3& target,
                       const SensorModel& sensor) {
    Vec3 d = target - candidate.position;
    double dist = d.norm();
    if (dist < sensor.range_min || dist > sensor.range_max) return false;
    if (sensor.fov_h < 360.0) {
        double bearing = wrap_angle_pi(std::atan2(d.y, d.x) - candidate.yaw);
        if (std::abs(bearing) > deg_to_rad(sensor.fov_h) * 0.5) return false;
    }
    if (sensor.fov_v < 180.0) {
        double elevation = std::atan2(d.z, std::hypot(d.x, d.y));
        if (std::abs(elevation) > deg_to_rad(sensor.fov_v) * 0.5) return false;
    }
    return true;
}

} // namespace covplan
