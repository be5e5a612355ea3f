#pragma once

// Shared scene builders and independent oracles for the test suites. The
// oracles deliberately use different algorithms than the library code they
// check (naive enumeration, exhaustive search, analytic geometry).

#include <algorithm>
#include <cmath>
#include <vector>

#include "covplan/mesh.hpp"
#include "covplan/rng.hpp"
#include "covplan/vec3.hpp"
#include "covplan/visibility.hpp"
#include "covplan/voxel_grid.hpp"

namespace covtest {

using covplan::Aabb;
using covplan::GridIndex;
using covplan::Rng;
using covplan::TriangleMesh;
using covplan::Vec3;
using covplan::VoxelOccupancyGrid;

inline void append_box(std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& tris,
                       const Vec3& lo, const Vec3& hi) {
    int base = static_cast<int>(verts.size());
    verts.push_back({lo.x, lo.y, lo.z}); // 0
    verts.push_back({hi.x, lo.y, lo.z}); // 1
    verts.push_back({hi.x, hi.y, lo.z}); // 2
    verts.push_back({lo.x, hi.y, lo.z}); // 3
    verts.push_back({lo.x, lo.y, hi.z}); // 4
    verts.push_back({hi.x, lo.y, hi.z}); // 5
    verts.push_back({hi.x, hi.y, hi.z}); // 6
    verts.push_back({lo.x, hi.y, hi.z}); // 7
    const int quads[6][4] = {
        {0, 3, 2, 1}, // bottom, -z
        {4, 5, 6, 7}, // top, +z
        {0, 1, 5, 4}, // south, -y
        {2, 3, 7, 6}, // north, +y
        {0, 4, 7, 3}, // west, -x
        {1, 2, 6, 5}, // east, +x
    };
    for (const auto& q : quads) {
        tris.push_back({base + q[0], base + q[1], base + q[2]});
        tris.push_back({base + q[0], base + q[2], base + q[3]});
    }
}

inline TriangleMesh box_mesh(const Vec3& lo, const Vec3& hi) {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    append_box(verts, tris, lo, hi);
    return covplan::finalize_mesh(verts, tris);
}

inline TriangleMesh boxes_mesh(const std::vector<std::pair<Vec3, Vec3>>& boxes) {
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    for (const auto& [lo, hi] : boxes) append_box(verts, tris, lo, hi);
    return covplan::finalize_mesh(verts, tris);
}

// single quad in a plane, two triangles
inline TriangleMesh quad_mesh(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    std::vector<Vec3> verts = {a, b, c, d};
    std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 2, 3}};
    return covplan::finalize_mesh(verts, tris);
}

// Oracle for the lattice-walk ray caster: enumerate every voxel in the
// segment's bounding box and test segment/box overlap directly (slab
// clipping). Endpoint voxels are exempt, mirroring the contract.
inline bool oracle_ray_cast(const VoxelOccupancyGrid& grid, const Vec3& from, const Vec3& to) {
    Vec3 dir = to - from;
    GridIndex c0 = grid.cell_of(from), c1 = grid.cell_of(to);
    GridIndex lo{std::min(c0.x, c1.x), std::min(c0.y, c1.y), std::min(c0.z, c1.z)};
    GridIndex hi{std::max(c0.x, c1.x), std::max(c0.y, c1.y), std::max(c0.z, c1.z)};
    for (int z = lo.z; z <= hi.z; ++z)
        for (int y = lo.y; y <= hi.y; ++y)
            for (int x = lo.x; x <= hi.x; ++x) {
                GridIndex c{x, y, z};
                if (!grid.in_bounds(c) || !grid.is_occupied(c)) continue;
                if (c == c0 || c == c1) continue;
                // slab test of segment against the voxel box
                Vec3 bmin = grid.cell_min(c);
                Vec3 bmax = bmin + Vec3{grid.voxel_size, grid.voxel_size, grid.voxel_size};
                double t0 = 0.0, t1 = 1.0;
                bool miss = false;
                for (int a = 0; a < 3 && !miss; ++a) {
                    double o = from[a], d = dir[a];
                    double mn = a == 0 ? bmin.x : (a == 1 ? bmin.y : bmin.z);
                    double mx = a == 0 ? bmax.x : (a == 1 ? bmax.y : bmax.z);
                    if (std::abs(d) < 1e-15) {
                        if (o < mn || o > mx) miss = true;
                    } else {
                        double ta = (mn - o) / d, tb = (mx - o) / d;
                        if (ta > tb) std::swap(ta, tb);
                        t0 = std::max(t0, ta);
                        t1 = std::min(t1, tb);
                        if (t0 > t1) miss = true;
                    }
                }
                if (!miss) return false; // crossed an occupied voxel
            }
    return true;
}

inline Vec3 random_unit_vector(Rng& rng) {
    for (;;) {
        Vec3 v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        double n2 = v.norm2();
        if (n2 > 1e-6 && n2 <= 1.0) return v / std::sqrt(n2);
    }
}

// Random box scene for the visibility oracles: a floor slab and a handful
// of thick boxes, all clear of each other so endpoint-voxel exemptions stay
// local to one obstacle.
struct BoxScene {
    std::vector<std::pair<Vec3, Vec3>> boxes;
    TriangleMesh mesh;
    Vec3 domain_lo, domain_hi;
};

inline BoxScene random_box_scene(Rng& rng, double voxel, int n_boxes) {
    BoxScene scene;
    double size = 64.0 * voxel * 0.9; // keep within a 64^3 grid after padding
    scene.domain_lo = {0, 0, 0};
    scene.domain_hi = {size, size, size};
    double min_thick = 2.5 * voxel;
    double clearance = 4.0 * voxel;
    for (int b = 0; b < n_boxes; ++b) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            Vec3 lo{rng.uniform(0.0, size * 0.7), rng.uniform(0.0, size * 0.7),
                    rng.uniform(0.0, size * 0.7)};
            Vec3 ext{rng.uniform(min_thick, size * 0.4), rng.uniform(min_thick, size * 0.4),
                     rng.uniform(min_thick, size * 0.4)};
            Vec3 hi = min3(lo + ext, scene.domain_hi);
            if (hi.x - lo.x < min_thick || hi.y - lo.y < min_thick || hi.z - lo.z < min_thick)
                continue;
            bool clear = true;
            for (const auto& [olo, ohi] : scene.boxes) {
                bool separated = lo.x > ohi.x + clearance || olo.x > hi.x + clearance ||
                                 lo.y > ohi.y + clearance || olo.y > hi.y + clearance ||
                                 lo.z > ohi.z + clearance || olo.z > hi.z + clearance;
                if (!separated) { clear = false; break; }
            }
            if (!clear) continue;
            scene.boxes.emplace_back(lo, hi);
            break;
        }
    }
    scene.mesh = boxes_mesh(scene.boxes);
    return scene;
}

inline bool point_in_any_box(const BoxScene& scene, const Vec3& p, double margin) {
    for (const auto& [lo, hi] : scene.boxes)
        if (p.x > lo.x - margin && p.x < hi.x + margin && p.y > lo.y - margin &&
            p.y < hi.y + margin && p.z > lo.z - margin && p.z < hi.z + margin)
            return true;
    return false;
}

// free-space point within [lo, hi], at least `margin` from any box
inline Vec3 random_free_point(const BoxScene& scene, Rng& rng, double margin, const Vec3& lo,
                              const Vec3& hi) {
    for (;;) {
        Vec3 p{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z)};
        if (!point_in_any_box(scene, p, margin)) return p;
    }
}

inline Vec3 random_free_point(const BoxScene& scene, Rng& rng, double margin) {
    return random_free_point(scene, rng, margin, scene.domain_lo, scene.domain_hi);
}

} // namespace covtest
