#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "covplan/mesh.hpp"
#include "covplan/parallel.hpp"
#include "covplan/vec3.hpp"
#include "covplan/voxel_grid.hpp"

namespace covplan {

struct SignedDistanceField {
    Vec3 origin;
    double voxel_size = 0.0;
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<float> distance; // clamped to +-truncation, row-major, x fastest
    double truncation = 0.0;
    int ambiguous_cells = 0; // sign could not be determined geometrically

    std::size_t cell_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims[1]) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(dims[0]) +
               static_cast<std::size_t>(x);
    }
    bool in_bounds(const GridIndex& c) const {
        return c.x >= 0 && c.x < dims[0] && c.y >= 0 && c.y < dims[1] && c.z >= 0 && c.z < dims[2];
    }
    GridIndex cell_of(const Vec3& p) const {
        return {static_cast<int>(std::floor((p.x - origin.x) / voxel_size)),
                static_cast<int>(std::floor((p.y - origin.y) / voxel_size)),
                static_cast<int>(std::floor((p.z - origin.z) / voxel_size))};
    }
    bool in_bounds(const Vec3& p) const { return in_bounds(cell_of(p)); }
    Vec3 cell_center(const GridIndex& c) const {
        return {origin.x + (c.x + 0.5) * voxel_size, origin.y + (c.y + 0.5) * voxel_size,
                origin.z + (c.z + 0.5) * voxel_size};
    }
    double value(const GridIndex& c) const { return distance[index(c.x, c.y, c.z)]; }

    // Central differences with one-sided stencils at lattice borders.
    Vec3 gradient(const GridIndex& c) const {
        auto v = [&](int x, int y, int z) { return static_cast<double>(distance[index(x, y, z)]); };
        auto diff = [&](int lo, int at, int hi, auto&& get) {
            int p = std::min(at + 1, hi), m = std::max(at - 1, lo);
            return p == m ? 0.0 : (get(p) - get(m)) / ((p - m) * voxel_size);
        };
        Vec3 g;
        g.x = diff(0, c.x, dims[0] - 1, [&](int x) { return v(x, c.y, c.z); });
        g.y = diff(0, c.y, dims[1] - 1, [&](int y) { return v(c.x, y, c.z); });
        g.z = diff(0, c.z, dims[2] - 1, [&](int z) { return v(c.x, c.y, z); });
        return g;
    }

    // Trilinear interpolation at a world point; clamps to the valid lattice.
    double sample(const Vec3& p) const {
        double gx = (p.x - origin.x) / voxel_size - 0.5;
        double gy = (p.y - origin.y) / voxel_size - 0.5;
        double gz = (p.z - origin.z) / voxel_size - 0.5;
        gx = std::clamp(gx, 0.0, static_cast<double>(dims[0] - 1));
        gy = std::clamp(gy, 0.0, static_cast<double>(dims[1] - 1));
        gz = std::clamp(gz, 0.0, static_cast<double>(dims[2] - 1));
        int x0 = std::min(static_cast<int>(gx), dims[0] - 1);
        int y0 = std::min(static_cast<int>(gy), dims[1] - 1);
        int z0 = std::min(static_cast<int>(gz), dims[2] - 1);
        int x1 = std::min(x0 + 1, dims[0] - 1);
        int y1 = std::min(y0 + 1, dims[1] - 1);
        int z1 = std::min(z0 + 1, dims[2] - 1);
        double fx = gx - x0, fy = gy - y0, fz = gz - z0;
        auto v = [&](int x, int y, int z) { return static_cast<double>(distance[index(x, y, z)]); };
        double c00 = v(x0, y0, z0) * (1 - fx) + v(x1, y0, z0) * fx;
        double c10 = v(x0, y1, z0) * (1 - fx) + v(x1, y1, z0) * fx;
        double c01 = v(x0, y0, z1) * (1 - fx) + v(x1, y0, z1) * fx;
        double c11 = v(x0, y1, z1) * (1 - fx) + v(x1, y1, z1) * fx;
        double c0 = c00 * (1 - fy) + c10 * fy;
        double c1 = c01 * (1 - fy) + c11 * fy;
        return c0 * (1 - fz) + c1 * fz;
    }
};

namespace detail {

// Per-feature pseudo-normals for sign determination (angle-weighted at
// vertices, face-pair sums at edges).
struct PseudoNormals {
    std::vector<Vec3> face;
    std::vector<Vec3> vertex;
    std::map<std::pair<int, int>, Vec3> edge;

    static std::pair<int, int> edge_key(int a, int b) {
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    }

    explicit PseudoNormals(const TriangleMesh& mesh) {
        face.resize(mesh.triangles.size());
        vertex.assign(mesh.vertices.size(), Vec3{0, 0, 0});
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            const auto& tri = mesh.triangles[t];
            Vec3 p[3] = {mesh.vertices[static_cast<std::size_t>(tri[0])],
                         mesh.vertices[static_cast<std::size_t>(tri[1])],
                         mesh.vertices[static_cast<std::size_t>(tri[2])]};
            Vec3 n = (p[1] - p[0]).cross(p[2] - p[0]).normalized();
            face[t] = n;
            for (int k = 0; k < 3; ++k) {
                Vec3 e1 = (p[(k + 1) % 3] - p[k]).normalized();
                Vec3 e2 = (p[(k + 2) % 3] - p[k]).normalized();
                double angle = std::acos(std::clamp(e1.dot(e2), -1.0, 1.0));
                vertex[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])] += n * angle;
                edge[edge_key(tri[static_cast<std::size_t>(k)],
                              tri[static_cast<std::size_t>((k + 1) % 3)])] += n;
            }
        }
    }
};

struct TriangleBuckets {
    Vec3 origin;
    double cell = 0.0;
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<std::vector<int>> tris;

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims[1]) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(dims[0]) +
               static_cast<std::size_t>(x);
    }

    TriangleBuckets(const TriangleMesh& mesh, const Aabb& box, double bucket_size) {
        cell = bucket_size;
        origin = box.lo;
        Vec3 ext = box.extent();
        for (int a = 0; a < 3; ++a)
            dims[static_cast<std::size_t>(a)] =
                std::max(1, static_cast<int>(std::ceil(ext[a] / cell)) + 1);
        tris.resize(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            Aabb tb;
            for (int k = 0; k < 3; ++k) tb.expand(mesh.triangle_vertex(static_cast<int>(t), k));
            int lo[3], hi[3];
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::clamp(static_cast<int>(std::floor((tb.lo[a] - origin[a]) / cell)), 0,
                                   dims[static_cast<std::size_t>(a)] - 1);
                hi[a] = std::clamp(static_cast<int>(std::floor((tb.hi[a] - origin[a]) / cell)), 0,
                                   dims[static_cast<std::size_t>(a)] - 1);
            }
            for (int z = lo[2]; z <= hi[2]; ++z)
                for (int y = lo[1]; y <= hi[1]; ++y)
                    for (int x = lo[0]; x <= hi[0]; ++x)
                        tris[index(x, y, z)].push_back(static_cast<int>(t));
        }
    }

    // Visits triangles in all buckets within one ring of the point's bucket.
    template <typename Fn>
    void visit_near(const Vec3& p, Fn&& fn) const {
        int bx = std::clamp(static_cast<int>(std::floor((p.x - origin.x) / cell)), 0, dims[0] - 1);
        int by = std::clamp(static_cast<int>(std::floor((p.y - origin.y) / cell)), 0, dims[1] - 1);
        int bz = std::clamp(static_cast<int>(std::floor((p.z - origin.z) / cell)), 0, dims[2] - 1);
        for (int z = std::max(0, bz - 1); z <= std::min(dims[2] - 1, bz + 1); ++z)
            for (int y = std::max(0, by - 1); y <= std::min(dims[1] - 1, by + 1); ++y)
                for (int x = std::max(0, bx - 1); x <= std::min(dims[0] - 1, bx + 1); ++x)
                    for (int t : tris[index(x, y, z)]) fn(t);
    }
};

// Parity sign test along a deterministic set of directions; returns +1/-1, or
// 0 if every direction produced a grazing hit.
inline int parity_sign(const TriangleMesh& mesh, const Vec3& p) {
    static const Vec3 dirs[4] = {{1.0, 0.0, 0.0},
                                 {0.3178362, 0.7613921, 0.5652164},
                                 {-0.6324555, 0.4216370, 0.6498337},
                                 {0.2672612, -0.5345225, 0.8017837}};
    constexpr double edge_eps = 1e-9;
    for (const auto& dir : dirs) {
        int crossings = 0;
        bool grazing = false;
        for (std::size_t t = 0; t < mesh.triangles.size() && !grazing; ++t) {
            Vec3 a = mesh.triangle_vertex(static_cast<int>(t), 0);
            Vec3 b = mesh.triangle_vertex(static_cast<int>(t), 1);
            Vec3 c = mesh.triangle_vertex(static_cast<int>(t), 2);
            Vec3 e1 = b - a, e2 = c - a;
            Vec3 pvec = dir.cross(e2);
            double det = e1.dot(pvec);
            if (std::abs(det) < 1e-12) continue; // parallel: cannot cross transversally
            double inv_det = 1.0 / det;
            Vec3 tvec = p - a;
            double u = tvec.dot(pvec) * inv_det;
            Vec3 qvec = tvec.cross(e1);
            double v = dir.dot(qvec) * inv_det;
            double w = 1.0 - u - v;
            if (u < -edge_eps || v < -edge_eps || w < -edge_eps) continue;
            double tt = e2.dot(qvec) * inv_det;
            if (tt <= 0.0) continue;
            if (u < edge_eps || v < edge_eps || w < edge_eps || tt < edge_eps) {
                grazing = true; // hit on an edge or too close; parity unreliable
                break;
            }
            ++crossings;
        }
        if (!grazing) return (crossings % 2 == 1) ? -1 : +1;
    }
    return 0;
}

} // namespace detail

// Builds a truncated signed distance field on the mesh AABB padded by one
// voxel. Sign comes from the angle-weighted pseudo-normal of the nearest
// feature, with ray-parity as fallback; cells that stay ambiguous are
// counted and marked positive.
inline SignedDistanceField compute_sdf(const TriangleMesh& mesh, double voxel_size,
                                       double truncation, int workers = 0) {
    if (voxel_size <= 0.0) throw std::runtime_error("compute_sdf: voxel_size must be positive");
    if (truncation < 2.0 * voxel_size)
        throw std::runtime_error("compute_sdf: truncation must be at least 2 voxels");
    Aabb box = mesh.bounds();
    if (!box.valid()) throw std::runtime_error("compute_sdf: empty mesh");

    SignedDistanceField sdf;
    sdf.voxel_size = voxel_size;
    sdf.truncation = truncation;
    sdf.origin = box.lo - Vec3{voxel_size, voxel_size, voxel_size};
    Vec3 ext = box.hi + Vec3{voxel_size, voxel_size, voxel_size} - sdf.origin;
    for (int a = 0; a < 3; ++a)
        sdf.dims[static_cast<std::size_t>(a)] =
            std::max(1, static_cast<int>(std::ceil(ext[a] / voxel_size)));

    const float unset = std::numeric_limits<float>::quiet_NaN();
    sdf.distance.assign(sdf.cell_count(), unset);

    detail::PseudoNormals normals(mesh);
    Aabb bucket_box;
    bucket_box.expand(sdf.origin);
    bucket_box.expand(sdf.origin + Vec3{sdf.dims[0] * voxel_size, sdf.dims[1] * voxel_size,
                                        sdf.dims[2] * voxel_size});
    detail::TriangleBuckets buckets(mesh, bucket_box, truncation);

    std::vector<Aabb> tri_boxes(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        for (int k = 0; k < 3; ++k)
            tri_boxes[t].expand(mesh.triangle_vertex(static_cast<int>(t), k));
    auto box_dist2 = [](const Aabb& b, const Vec3& p) {
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            double d = std::max({b.lo[a] - p[a], p[a] - b.hi[a], 0.0});
            d2 += d * d;
        }
        return d2;
    };

    std::vector<int> ambiguous_per_slice(static_cast<std::size_t>(sdf.dims[2]), 0);
    const double feature_eps = 1e-7;

    parallel_for(static_cast<std::size_t>(sdf.dims[2]), workers, [&](std::size_t zi) {
        int z = static_cast<int>(zi);
        for (int y = 0; y < sdf.dims[1]; ++y)
            for (int x = 0; x < sdf.dims[0]; ++x) {
                Vec3 p = sdf.cell_center({x, y, z});
                double best_d2 = truncation * truncation;
                int best_tri = -1;
                Vec3 best_cp;
                buckets.visit_near(p, [&](int t) {
                    if (box_dist2(tri_boxes[static_cast<std::size_t>(t)], p) >= best_d2) return;
                    Vec3 a = mesh.triangle_vertex(t, 0);
                    Vec3 b = mesh.triangle_vertex(t, 1);
                    Vec3 c = mesh.triangle_vertex(t, 2);
                    Vec3 cp = closest_point_on_triangle(p, a, b, c);
                    double d2 = (p - cp).norm2();
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best_tri = t;
                        best_cp = cp;
                    }
                });
                if (best_tri < 0) continue; // beyond the band; sign flooded later

                double d = std::sqrt(best_d2);
                // classify the closest feature to pick the pseudo-normal
                const auto& tri = mesh.triangles[static_cast<std::size_t>(best_tri)];
                Vec3 va = mesh.vertices[static_cast<std::size_t>(tri[0])];
                Vec3 vb = mesh.vertices[static_cast<std::size_t>(tri[1])];
                Vec3 vc = mesh.vertices[static_cast<std::size_t>(tri[2])];
                double da = (best_cp - va).norm(), db = (best_cp - vb).norm(),
                       dc = (best_cp - vc).norm();
                double ea = (best_cp - closest_segment_point(va, vb, best_cp)).norm();
                double eb = (best_cp - closest_segment_point(vb, vc, best_cp)).norm();
                double ec = (best_cp - closest_segment_point(vc, va, best_cp)).norm();
                Vec3 pseudo;
                if (da < feature_eps)
                    pseudo = normals.vertex[static_cast<std::size_t>(tri[0])];
                else if (db < feature_eps)
                    pseudo = normals.vertex[static_cast<std::size_t>(tri[1])];
                else if (dc < feature_eps)
                    pseudo = normals.vertex[static_cast<std::size_t>(tri[2])];
                else if (ea < feature_eps)
                    pseudo = normals.edge.at(detail::PseudoNormals::edge_key(tri[0], tri[1]));
                else if (eb < feature_eps)
                    pseudo = normals.edge.at(detail::PseudoNormals::edge_key(tri[1], tri[2]));
                else if (ec < feature_eps)
                    pseudo = normals.edge.at(detail::PseudoNormals::edge_key(tri[2], tri[0]));
                else
                    pseudo = normals.face[static_cast<std::size_t>(best_tri)];

                double side = (p - best_cp).dot(pseudo);
                int sign;
                double scale = d * pseudo.norm();
                if (d < 1e-12) {
                    sign = +1; // on the surface, magnitude ~0 anyway
                } else if (std::abs(side) > 1e-9 * std::max(scale, 1e-12)) {
                    sign = side > 0.0 ? +1 : -1;
                } else {
                    sign = detail::parity_sign(mesh, p);
                    if (sign == 0) {
                        sign = +1;
                        ++ambiguous_per_slice[zi];
                    }
                }
                double v = std::clamp(sign * d, -truncation, truncation);
                sdf.distance[sdf.index(x, y, z)] = static_cast<float>(v);
            }
    });
    for (int a : ambiguous_per_slice) sdf.ambiguous_cells += a;

    // Sign flood for cells beyond the band, seeded from band cells in index
    // order so the result is deterministic.
    std::deque<std::size_t> queue;
    std::vector<std::uint8_t> assigned(sdf.cell_count(), 0);
    for (std::size_t i = 0; i < sdf.distance.size(); ++i)
        if (!std::isnan(sdf.distance[i])) {
            assigned[i] = 1;
            queue.push_back(i);
        }
    const float pos = static_cast<float>(truncation);
    if (queue.empty()) {
        std::fill(sdf.distance.begin(), sdf.distance.end(), pos);
        return sdf;
    }
    auto decompose = [&](std::size_t i, int& x, int& y, int& z) {
        x = static_cast<int>(i % static_cast<std::size_t>(sdf.dims[0]));
        std::size_t r = i / static_cast<std::size_t>(sdf.dims[0]);
        y = static_cast<int>(r % static_cast<std::size_t>(sdf.dims[1]));
        z = static_cast<int>(r / static_cast<std::size_t>(sdf.dims[1]));
    };
    while (!queue.empty()) {
        std::size_t i = queue.front();
        queue.pop_front();
        int x, y, z;
        decompose(i, x, y, z);
        float fill = sdf.distance[i] < 0.0f ? -pos : pos;
        const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (const auto& d : nb) {
            int nx = x + d[0], ny = y + d[1], nz = z + d[2];
            if (nx < 0 || nx >= sdf.dims[0] || ny < 0 || ny >= sdf.dims[1] || nz < 0 ||
                nz >= sdf.dims[2])
                continue;
            std::size_t ni = sdf.index(nx, ny, nz);
            if (assigned[ni]) continue;
            assigned[ni] = 1;
            sdf.distance[ni] = fill;
            queue.push_back(ni);
        }
    }
    return sdf;
}

inline void save_sdf(const SignedDistanceField& sdf, const std::string& path) {
    gridio::save(path, sdf.origin, sdf.voxel_size, sdf.dims, sdf.distance);
}

inline SignedDistanceField load_sdf(const std::string& path, double truncation) {
    SignedDistanceField sdf;
    gridio::load(path, sdf.origin, sdf.voxel_size, sdf.dims, sdf.distance);
    sdf.truncation = truncation;
    return sdf;
}

} // namespace covplan
