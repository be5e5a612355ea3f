#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covplan/mesh.hpp"
#include "covplan/vec3.hpp"

namespace covplan {

struct GridIndex {
    int x = 0, y = 0, z = 0;
    bool operator==(const GridIndex& o) const { return x == o.x && y == o.y && z == o.z; }
    bool operator!=(const GridIndex& o) const { return !(*this == o); }
};

struct VoxelOccupancyGrid {
    Vec3 origin;
    double voxel_size = 0.0;
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<std::uint8_t> occupied; // row-major, x fastest

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
    bool in_bounds(const Vec3& p) const { return in_bounds(cell_of(p)); }
    bool is_occupied(const GridIndex& c) const { return occupied[index(c.x, c.y, c.z)] != 0; }
    void set_occupied(const GridIndex& c) { occupied[index(c.x, c.y, c.z)] = 1; }

    GridIndex cell_of(const Vec3& p) const {
        return {static_cast<int>(std::floor((p.x - origin.x) / voxel_size)),
                static_cast<int>(std::floor((p.y - origin.y) / voxel_size)),
                static_cast<int>(std::floor((p.z - origin.z) / voxel_size))};
    }
    Vec3 cell_center(const GridIndex& c) const {
        return {origin.x + (c.x + 0.5) * voxel_size, origin.y + (c.y + 0.5) * voxel_size,
                origin.z + (c.z + 0.5) * voxel_size};
    }
    Vec3 cell_min(const GridIndex& c) const {
        return {origin.x + c.x * voxel_size, origin.y + c.y * voxel_size,
                origin.z + c.z * voxel_size};
    }
};

namespace detail {

// Akenine-Moller triangle/box overlap (SAT). Separation requires a strict
// margin so triangles exactly on a cell face register in both cells.
inline bool tri_box_overlap(const Vec3& box_center, const Vec3& box_half, const Vec3& tv0,
                            const Vec3& tv1, const Vec3& tv2) {
    constexpr double eps = 1e-12;
    Vec3 v0 = tv0 - box_center, v1 = tv1 - box_center, v2 = tv2 - box_center;
    Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;

    auto axis_test = [&](double a1, double a2, double p0, double p1, double p2, double h1,
                         double h2) {
        double lo = std::min({p0, p1, p2});
        double hi = std::max({p0, p1, p2});
        double rad = std::abs(a1) * h1 + std::abs(a2) * h2;
        return lo <= rad + eps && hi >= -rad - eps;
    };

    // 9 cross-product axes
    auto edge_tests = [&](const Vec3& e) {
        if (!axis_test(e.z, e.y, e.z * v0.y - e.y * v0.z, e.z * v1.y - e.y * v1.z,
                       e.z * v2.y - e.y * v2.z, box_half.y, box_half.z))
            return false;
        if (!axis_test(e.z, e.x, -(e.z * v0.x - e.x * v0.z), -(e.z * v1.x - e.x * v1.z),
                       -(e.z * v2.x - e.x * v2.z), box_half.x, box_half.z))
            return false;
        if (!axis_test(e.y, e.x, e.y * v0.x - e.x * v0.y, e.y * v1.x - e.x * v1.y,
                       e.y * v2.x - e.x * v2.y, box_half.x, box_half.y))
            return false;
        return true;
    };
    if (!edge_tests(e0) || !edge_tests(e1) || !edge_tests(e2)) return false;

    // box face normals
    auto minmax_overlap = [&](double a, double b, double c, double h) {
        return std::min({a, b, c}) <= h + eps && std::max({a, b, c}) >= -h - eps;
    };
    if (!minmax_overlap(v0.x, v1.x, v2.x, box_half.x)) return false;
    if (!minmax_overlap(v0.y, v1.y, v2.y, box_half.y)) return false;
    if (!minmax_overlap(v0.z, v1.z, v2.z, box_half.z)) return false;

    // triangle plane
    Vec3 n = e0.cross(e1);
    double d = -n.dot(v0);
    double r = box_half.x * std::abs(n.x) + box_half.y * std::abs(n.y) +
               box_half.z * std::abs(n.z);
    return std::abs(d) <= r + eps;
}

} // namespace detail

// Conservative surface voxelization: a cell is occupied iff its box
// intersects any triangle. Bounds are the mesh AABB padded by one voxel.
inline VoxelOccupancyGrid voxelize(const TriangleMesh& mesh, double voxel_size) {
    if (voxel_size <= 0.0) throw std::runtime_error("voxelize: voxel_size must be positive");
    Aabb box = mesh.bounds();
    if (!box.valid()) throw std::runtime_error("voxelize: empty mesh");

    VoxelOccupancyGrid grid;
    grid.voxel_size = voxel_size;
    grid.origin = box.lo - Vec3{voxel_size, voxel_size, voxel_size};
    Vec3 ext = box.hi + Vec3{voxel_size, voxel_size, voxel_size} - grid.origin;
    for (int a = 0; a < 3; ++a) {
        double cells = std::ceil(ext[a] / voxel_size);
        grid.dims[static_cast<std::size_t>(a)] = std::max(1, static_cast<int>(cells));
    }
    double total = static_cast<double>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
    if (total > 2147483647.0) throw std::runtime_error("voxelize: grid too large");
    grid.occupied.assign(grid.cell_count(), 0);

    Vec3 half{voxel_size * 0.5, voxel_size * 0.5, voxel_size * 0.5};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Vec3 a = mesh.triangle_vertex(static_cast<int>(t), 0);
        Vec3 b = mesh.triangle_vertex(static_cast<int>(t), 1);
        Vec3 c = mesh.triangle_vertex(static_cast<int>(t), 2);
        Aabb tb;
        tb.expand(a); tb.expand(b); tb.expand(c);
        GridIndex lo = grid.cell_of(tb.lo - Vec3{1e-9, 1e-9, 1e-9});
        GridIndex hi = grid.cell_of(tb.hi + Vec3{1e-9, 1e-9, 1e-9});
        lo.x = std::max(lo.x, 0); lo.y = std::max(lo.y, 0); lo.z = std::max(lo.z, 0);
        hi.x = std::min(hi.x, grid.dims[0] - 1);
        hi.y = std::min(hi.y, grid.dims[1] - 1);
        hi.z = std::min(hi.z, grid.dims[2] - 1);
        for (int z = lo.z; z <= hi.z; ++z)
            for (int y = lo.y; y <= hi.y; ++y)
                for (int x = lo.x; x <= hi.x; ++x) {
                    GridIndex cell{x, y, z};
                    if (grid.is_occupied(cell)) continue;
                    if (detail::tri_box_overlap(grid.cell_center(cell), half, a, b, c))
                        grid.set_occupied(cell);
                }
    }
    return grid;
}

// Line-of-sight query: walks the voxel lattice from `from` to `to` and
// returns true iff no strictly intermediate occupied voxel is crossed. The
// two endpoint voxels are exempt because targets sit on surfaces, and the
// origin is nudged toward the target to avoid self-hits on shared faces.
inline bool ray_cast(const VoxelOccupancyGrid& grid, const Vec3& from_in, const Vec3& to,
                     const GridIndex* extra_exempt = nullptr) {
    if (!grid.in_bounds(from_in) || !grid.in_bounds(to))
        throw std::runtime_error("ray_cast: endpoint out of bounds");

    Vec3 dir = to - from_in;
    double len = dir.norm();
    if (len < 1e-12) return true;
    Vec3 from = from_in + dir * (1e-4 / len);
    dir = to - from;
    len = dir.norm();
    if (len < 1e-12) return true;

    GridIndex cur = grid.cell_of(from);
    GridIndex end = grid.cell_of(to);
    GridIndex start = cur;

    auto exempt = [&](const GridIndex& c) {
        return c == start || c == end || (extra_exempt != nullptr && c == *extra_exempt);
    };

    // lattice walk: step through cell boundaries in order of crossing
    int step[3];
    double t_max[3], t_delta[3];
    double inv[3] = {dir.x == 0.0 ? 0.0 : 1.0 / dir.x, dir.y == 0.0 ? 0.0 : 1.0 / dir.y,
                     dir.z == 0.0 ? 0.0 : 1.0 / dir.z};
    int cell[3] = {cur.x, cur.y, cur.z};
    int endc[3] = {end.x, end.y, end.z};
    double fromc[3] = {from.x, from.y, from.z};
    double dirc[3] = {dir.x, dir.y, dir.z};
    double orig[3] = {grid.origin.x, grid.origin.y, grid.origin.z};
    for (int a = 0; a < 3; ++a) {
        if (dirc[a] > 0.0) {
            step[a] = 1;
            double boundary = orig[a] + (cell[a] + 1) * grid.voxel_size;
            t_max[a] = (boundary - fromc[a]) * inv[a];
            t_delta[a] = grid.voxel_size * inv[a];
        } else if (dirc[a] < 0.0) {
            step[a] = -1;
            double boundary = orig[a] + cell[a] * grid.voxel_size;
            t_max[a] = (boundary - fromc[a]) * inv[a];
            t_delta[a] = -grid.voxel_size * inv[a];
        } else {
            step[a] = 0;
            t_max[a] = std::numeric_limits<double>::infinity();
            t_delta[a] = std::numeric_limits<double>::infinity();
        }
    }

    int guard = 2 * (grid.dims[0] + grid.dims[1] + grid.dims[2]) + 8;
    while (guard-- > 0) {
        if (cell[0] == endc[0] && cell[1] == endc[1] && cell[2] == endc[2]) break;
        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        if (t_max[axis] > 1.0) break; // segment ends inside current cell
        cell[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        GridIndex c{cell[0], cell[1], cell[2]};
        if (!grid.in_bounds(c)) break;
        if (!exempt(c) && grid.is_occupied(c)) return false;
    }
    return true;
}

// Flat binary grid container shared by the occupancy grid and the SDF.
// Layout: 16-byte magic, origin as 3 float64, voxel_size float64, dims as
// 3 uint32, then the row-major payload (x fastest).
namespace gridio {

inline constexpr char kMagic[16] = {'C', 'V', 'P', 'L', 'G', 'R', 'I', 'D',
                                    0,   0,   0,   0,   0,   0,   0,   1};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("grid file: truncated");
    return v;
}

template <typename Payload>
void save(const std::string& path, const Vec3& origin, double voxel_size,
          const std::array<int, 3>& dims, const std::vector<Payload>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write grid file: " + path);
    out.write(kMagic, 16);
    write_pod(out, origin.x);
    write_pod(out, origin.y);
    write_pod(out, origin.z);
    write_pod(out, voxel_size);
    for (int a = 0; a < 3; ++a) write_pod(out, static_cast<std::uint32_t>(dims[static_cast<std::size_t>(a)]));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(Payload)));
}

template <typename Payload>
void load(const std::string& path, Vec3& origin, double& voxel_size, std::array<int, 3>& dims,
          std::vector<Payload>& payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open grid file: " + path);
    char magic[16];
    in.read(magic, 16);
    if (!in || std::memcmp(magic, kMagic, 16) != 0)
        throw std::runtime_error("grid file: bad magic: " + path);
    origin.x = read_pod<double>(in);
    origin.y = read_pod<double>(in);
    origin.z = read_pod<double>(in);
    voxel_size = read_pod<double>(in);
    std::size_t n = 1;
    for (int a = 0; a < 3; ++a) {
        dims[static_cast<std::size_t>(a)] = static_cast<int>(read_pod<std::uint32_t>(in));
        n *= static_cast<std::size_t>(dims[static_cast<std::size_t>(a)]);
    }
    payload.resize(n);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(n * sizeof(Payload)));
    if (!in) throw std::runtime_error("grid file: truncated payload: " + path);
}

} // namespace gridio

inline void save_grid(const VoxelOccupancyGrid& grid, const std::string& path) {
    gridio::save(path, grid.origin, grid.voxel_size, grid.dims, grid.occupied);
}

inline VoxelOccupancyGrid load_grid(const std::string& path) {
    VoxelOccupancyGrid grid;
    gridio::load(path, grid.origin, grid.voxel_size, grid.dims, grid.occupied);
    return grid;
}

} // namespace covplan
