#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covplan/body_mask.hpp"
#include "covplan/parallel.hpp"
#include "covplan/sdf.hpp"
#include "covplan/sensor.hpp"
#include "covplan/targets.hpp"
#include "covplan/vec3.hpp"
#include "covplan/voxel_grid.hpp"

namespace covplan {

// Sparse candidate x target visibility. Rows hold sorted target ids.
struct CoverageMatrix {
    int target_count = 0;
    std::vector<std::vector<int>> rows; // rows[c] = sorted visible target ids

    int candidate_count() const { return static_cast<int>(rows.size()); }
    int reward(int c) const { return static_cast<int>(rows[static_cast<std::size_t>(c)].size()); }
};

struct StageCounters {
    std::uint64_t pairs = 0;
    std::uint64_t rejected_frustum = 0;
    std::uint64_t rejected_mask = 0;
    std::uint64_t rejected_sdf = 0;
    std::uint64_t rejected_ray = 0;
    std::uint64_t visible = 0;
};

struct VisibilityOptions {
    bool use_frustum = true;
    bool use_mask = true;
    bool use_sdf = true;
    // occupancy voxel edge length; the back-face probes are scaled by it so
    // the test stays conservative relative to the ray caster's exempt
    // endpoint voxels
    double occupancy_voxel = 0.0; // 0 = derive from the grid
    int workers = 0;
};

// Wall back-face rejection. The cheap paper rule compares the direction to
// the candidate with the SDF gradient at the target: a candidate in the
// half-space the gradient points away from sits behind the wall. On top of
// that, two probe samples along the ray must lie clearly inside material;
// this keeps the stage strictly conservative (it never rejects a pair the
// ray caster would accept), so it acts purely as an accelerator.
inline bool sdf_backface_check(const SignedDistanceField& sdf, const Vec3& candidate_pos,
                               const Vec3& target, double occupancy_voxel = 0.0) {
    if (!sdf.in_bounds(target)) return true;
    GridIndex tc = sdf.cell_of(target);
    double at_target = sdf.value(tc);
    if (std::abs(at_target) >= sdf.truncation - 1e-9) return true; // beyond band: skip

    Vec3 d = candidate_pos - target;
    double len = d.norm();
    if (len < 1e-12) return true;
    Vec3 dir = d / len;
    Vec3 g = sdf.gradient(tc);
    if (g.norm2() < 1e-18) return true;
    if (dir.dot(g) >= 0.0) return true; // candidate on the open side

    double v = occupancy_voxel > 0.0 ? occupancy_voxel : sdf.voxel_size;
    Vec3 q1 = target + dir * (1.25 * v);
    Vec3 q2 = target + dir * (2.5 * v);
    if (2.5 * v >= len) return true; // candidate too close for the probes
    if (!sdf.in_bounds(q1) || !sdf.in_bounds(q2)) return true;
    if (sdf.value(sdf.cell_of(q1)) >= -0.2 * v) return true;
    if (sdf.value(sdf.cell_of(q2)) >= -0.9 * v) return true;
    return false; // ray dives into material straight away: behind the wall
}

// Staged visibility for every candidate/target pair, cheapest test first:
// frustum, self-occlusion mask, SDF back-face, then ray casting. Rows are
// computed independently per candidate, so the result does not depend on
// the worker count.
inline CoverageMatrix compute_rewards(std::vector<CandidateViewpoint>& candidates,
                                      const TargetPointSet& targets, const SensorModel& sensor,
                                      const SelfOcclusionMask* mask,
                                      const SignedDistanceField* sdf,
                                      const VoxelOccupancyGrid& grid,
                                      StageCounters* counters = nullptr,
                                      const VisibilityOptions& opt = {}) {
    CoverageMatrix matrix;
    matrix.target_count = targets.size();
    matrix.rows.resize(candidates.size());

    double occ_voxel = opt.occupancy_voxel > 0.0 ? opt.occupancy_voxel : grid.voxel_size;
    std::vector<StageCounters> local(candidates.size());

    parallel_for(candidates.size(), opt.workers, [&](std::size_t ci) {
        CandidateViewpoint& cand = candidates[ci];
        StageCounters& ctr = local[ci];
        std::vector<int>& row = matrix.rows[ci];
        double base_yaw = cand.yaw - sensor.mount_offset.yaw;
        for (int ti = 0; ti < targets.size(); ++ti) {
            const Vec3& t = targets.points[static_cast<std::size_t>(ti)];
            ++ctr.pairs;
            if (opt.use_frustum && !in_frustum(cand, t, sensor)) {
                ++ctr.rejected_frustum;
                continue;
            }
            if (opt.use_mask && mask != nullptr && mask->size > 0) {
                Vec3 dir_world = t - cand.position;
                if (dir_world.norm2() > 1e-24) {
                    Vec3 dir_base = rotate_z(dir_world, -base_yaw).normalized();
                    if (mask_lookup(*mask, dir_base)) {
                        ++ctr.rejected_mask;
                        continue;
                    }
                }
            }
            if (opt.use_sdf && sdf != nullptr &&
                !sdf_backface_check(*sdf, cand.position, t, occ_voxel)) {
                ++ctr.rejected_sdf;
                continue;
            }
            if (!ray_cast(grid, cand.position, t)) {
                ++ctr.rejected_ray;
                continue;
            }
            ++ctr.visible;
            row.push_back(ti);
        }
        cand.reward = static_cast<int>(row.size());
        cand.covered_ids = row;
    });

    if (counters != nullptr) {
        *counters = StageCounters{};
        for (const auto& c : local) {
            counters->pairs += c.pairs;
            counters->rejected_frustum += c.rejected_frustum;
            counters->rejected_mask += c.rejected_mask;
            counters->rejected_sdf += c.rejected_sdf;
            counters->rejected_ray += c.rejected_ray;
            counters->visible += c.visible;
        }
    }
    return matrix;
}

// Binary coverage-matrix dump: magic, counts, then per candidate a length
// and its sorted target ids.
inline void save_coverage_matrix(const CoverageMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write coverage matrix: " + path);
    const char magic[8] = {'C', 'V', 'P', 'L', 'C', 'M', 'A', 'T'};
    out.write(magic, 8);
    gridio::write_pod(out, static_cast<std::uint32_t>(m.rows.size()));
    gridio::write_pod(out, static_cast<std::uint32_t>(m.target_count));
    for (const auto& row : m.rows) {
        gridio::write_pod(out, static_cast<std::uint32_t>(row.size()));
        for (int id : row) gridio::write_pod(out, static_cast<std::uint32_t>(id));
    }
}

inline CoverageMatrix load_coverage_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open coverage matrix: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "CVPLCMAT", 8) != 0)
        throw std::runtime_error("coverage matrix: bad magic");
    CoverageMatrix m;
    auto n_rows = gridio::read_pod<std::uint32_t>(in);
    m.target_count = static_cast<int>(gridio::read_pod<std::uint32_t>(in));
    m.rows.resize(n_rows);
    for (auto& row : m.rows) {
        auto len = gridio::read_pod<std::uint32_t>(in);
        row.resize(len);
        for (auto& id : row) id = static_cast<int>(gridio::read_pod<std::uint32_t>(in));
    }
    return m;
}

} // namespace covplan
