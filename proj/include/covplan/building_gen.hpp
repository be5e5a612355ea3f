#pragma once

#include <array>
#include <string>
#include <vector>

#include "covplan/mesh.hpp"
#include "covplan/vec3.hpp"

namespace covplan {

// Synthetic test building: rooms with interior walls, doors, a sealed room
// and a ramp up to a raised platform, emitted as a closed heightfield solid
// (top surface + vertical skirts + foundation). The target model keeps the
// faces a ground sensor can be asked to cover: floors, ramp, platform and
// interior wall faces, but not wall tops or exterior surfaces.
//
// Geometry note: the perimeter band width is chosen so that no interior
// wall face lands exactly on a voxel boundary of the default grid sizes;
// boundary-aligned faces voxelize into double-thick shells that over-occlude
// grazing rays.

struct RoomInfo {
    std::string name;
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    bool sealed = false;

    bool contains(double x, double y, double margin = 0.0) const {
        return x >= min_x - margin && x <= max_x + margin && y >= min_y - margin &&
               y <= max_y + margin;
    }
};

struct BuildingModel {
    TriangleMesh complete;
    TriangleMesh target;
    std::vector<RoomInfo> rooms; // includes the ramp area; sealed room flagged
    Vec3 start;
    double wall_height = 2.4;
};

enum class BuildingPreset { TwoRoom, Full };

namespace detail {

enum class Region : std::uint8_t { Floor, Wall, Parapet, Ramp, Platform };

struct BuildingLattice {
    // interior cells [0,nx) x [0,ny), plus a perimeter wall band around them
    int nx = 0, ny = 0;
    double pitch = 0.2;
    double border = 0.2565; // perimeter band width; see geometry note above
    double base_z = -0.043; // foundation bottom
    double wall_height = 2.4;
    std::vector<Region> region; // (nx+2) * (ny+2) cells including the border
    // ramp parameters (cell ranges in interior coordinates)
    int ramp_i0 = 0, ramp_i1 = 0; // slope cells, z falls from platform_z to 0
    double platform_z = 0.5;
    double parapet_z = 0.8;

    int cols() const { return nx + 2; }
    int rows() const { return ny + 2; }
    Region& at(int ci, int cj) {
        return region[static_cast<std::size_t>(cj) * static_cast<std::size_t>(cols()) +
                      static_cast<std::size_t>(ci)];
    }
    Region get(int ci, int cj) const {
        return region[static_cast<std::size_t>(cj) * static_cast<std::size_t>(cols()) +
                      static_cast<std::size_t>(ci)];
    }

    // x coordinate of lattice line ci in [0, cols()]
    double line_x(int ci) const {
        if (ci <= 0) return 0.0;
        if (ci >= cols()) return 2.0 * border + nx * pitch;
        return border + (ci - 1) * pitch;
    }
    double line_y(int cj) const {
        if (cj <= 0) return 0.0;
        if (cj >= rows()) return 2.0 * border + ny * pitch;
        return border + (cj - 1) * pitch;
    }

    // interior-respective position helpers, in meters
    double ix(double interior_cells) const { return border + interior_cells * pitch; }
    double iy(double interior_cells) const { return border + interior_cells * pitch; }

    double height_at(Region r, double x) const {
        switch (r) {
            case Region::Floor: return 0.0;
            case Region::Wall: return wall_height;
            case Region::Parapet: return parapet_z;
            case Region::Platform: return platform_z;
            case Region::Ramp: {
                double x_end = ix(ramp_i1); // slope meets the floor here
                double x_start = ix(ramp_i0);
                double t = (x_end - x) / (x_end - x_start);
                return platform_z * std::clamp(t, 0.0, 1.0);
            }
        }
        return 0.0;
    }
};

inline void fill_rect(BuildingLattice& lat, int i0, int i1, int j0, int j1, Region r) {
    // interior-cell coordinates; +1 offsets skip the border band
    for (int j = j0; j < j1; ++j)
        for (int i = i0; i < i1; ++i) lat.at(i + 1, j + 1) = r;
}

inline BuildingLattice make_lattice(BuildingPreset preset) {
    BuildingLattice lat;
    if (preset == BuildingPreset::TwoRoom) {
        lat.nx = 28;
        lat.ny = 20;
        lat.region.assign(static_cast<std::size_t>(lat.cols()) * lat.rows(), Region::Floor);
        for (int ci = 0; ci < lat.cols(); ++ci) {
            lat.at(ci, 0) = Region::Wall;
            lat.at(ci, lat.rows() - 1) = Region::Wall;
        }
        for (int cj = 0; cj < lat.rows(); ++cj) {
            lat.at(0, cj) = Region::Wall;
            lat.at(lat.cols() - 1, cj) = Region::Wall;
        }
        fill_rect(lat, 14, 15, 0, 20, Region::Wall);
        fill_rect(lat, 14, 15, 7, 13, Region::Floor); // door
        return lat;
    }

    lat.nx = 58;
    lat.ny = 48;
    lat.region.assign(static_cast<std::size_t>(lat.cols()) * lat.rows(), Region::Floor);
    for (int ci = 0; ci < lat.cols(); ++ci) {
        lat.at(ci, 0) = Region::Wall;
        lat.at(ci, lat.rows() - 1) = Region::Wall;
    }
    for (int cj = 0; cj < lat.rows(); ++cj) {
        lat.at(0, cj) = Region::Wall;
        lat.at(lat.cols() - 1, cj) = Region::Wall;
    }

    // dividing wall between the west hall and the east rooms, with a door
    fill_rect(lat, 28, 29, 0, 48, Region::Wall);
    fill_rect(lat, 28, 29, 11, 17, Region::Floor);
    // east zone split into two rooms with a door
    fill_rect(lat, 29, 58, 23, 24, Region::Wall);
    fill_rect(lat, 42, 48, 23, 24, Region::Floor);
    // sealed room: a ring with no door
    fill_rect(lat, 5, 16, 30, 41, Region::Wall);
    fill_rect(lat, 6, 15, 31, 40, Region::Floor);
    // ramp strip along the south side of the west hall, behind a parapet
    lat.ramp_i0 = 4;
    lat.ramp_i1 = 24;
    fill_rect(lat, 4, 24, 0, 8, Region::Ramp);
    fill_rect(lat, 0, 4, 0, 8, Region::Platform);
    fill_rect(lat, 0, 24, 8, 9, Region::Parapet);
    return lat;
}

} // namespace detail

inline BuildingModel generate_building(BuildingPreset preset) {
    detail::BuildingLattice lat = detail::make_lattice(preset);

    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;         // complete model
    std::vector<std::array<int, 3>> target_tris;  // subset
    auto add_vertex = [&](double x, double y, double z) {
        verts.push_back({x, y, z});
        return static_cast<int>(verts.size()) - 1;
    };
    auto add_quad = [&](int a, int b, int c, int d, bool target) {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
        if (target) {
            target_tris.push_back({a, b, c});
            target_tris.push_back({a, c, d});
        }
    };

    // top faces, one quad per cell, counter-clockwise seen from above
    for (int cj = 0; cj < lat.rows(); ++cj)
        for (int ci = 0; ci < lat.cols(); ++ci) {
            detail::Region r = lat.get(ci, cj);
            double x0 = lat.line_x(ci), x1 = lat.line_x(ci + 1);
            double y0 = lat.line_y(cj), y1 = lat.line_y(cj + 1);
            int a = add_vertex(x0, y0, lat.height_at(r, x0));
            int b = add_vertex(x1, y0, lat.height_at(r, x1));
            int c = add_vertex(x1, y1, lat.height_at(r, x1));
            int d = add_vertex(x0, y1, lat.height_at(r, x0));
            bool target = r == detail::Region::Floor || r == detail::Region::Ramp ||
                          r == detail::Region::Platform;
            add_quad(a, b, c, d, target);
        }

    // vertical skirts where adjacent cells disagree in height; the normal
    // faces the lower (open) side
    auto skirt = [&](double ax, double ay, double bx, double by, double z_high_a,
                     double z_high_b, double z_low_a, double z_low_b, bool target) {
        if (z_high_a <= z_low_a + 1e-12 && z_high_b <= z_low_b + 1e-12) return;
        int v0 = add_vertex(ax, ay, z_low_a);
        int v1 = add_vertex(bx, by, z_low_b);
        int v2 = add_vertex(bx, by, z_high_b);
        int v3 = add_vertex(ax, ay, z_high_a);
        add_quad(v0, v1, v2, v3, target);
    };

    for (int cj = 0; cj < lat.rows(); ++cj)
        for (int ci = 0; ci < lat.cols(); ++ci) {
            detail::Region r = lat.get(ci, cj);
            double x0 = lat.line_x(ci), x1 = lat.line_x(ci + 1);
            double y0 = lat.line_y(cj), y1 = lat.line_y(cj + 1);
            // east neighbor
            if (ci + 1 < lat.cols()) {
                detail::Region e = lat.get(ci + 1, cj);
                double za = lat.height_at(r, x1);
                double zb = lat.height_at(e, x1);
                if (za > zb + 1e-12)
                    skirt(x1, y0, x1, y1, za, za, zb, zb, true); // faces +x
                else if (zb > za + 1e-12)
                    skirt(x1, y1, x1, y0, zb, zb, za, za, true); // faces -x
            }
            // north neighbor
            if (cj + 1 < lat.rows()) {
                detail::Region nr = lat.get(ci, cj + 1);
                double za0 = lat.height_at(r, x0), za1 = lat.height_at(r, x1);
                double zb0 = lat.height_at(nr, x0), zb1 = lat.height_at(nr, x1);
                if (za0 > zb0 + 1e-12 || za1 > zb1 + 1e-12)
                    skirt(x1, y1, x0, y1, za1, za0, std::min(za1, zb1), std::min(za0, zb0),
                          true); // faces +y
                else if (zb0 > za0 + 1e-12 || zb1 > za1 + 1e-12)
                    skirt(x0, y1, x1, y1, zb0, zb1, std::min(za0, zb0), std::min(za1, zb1),
                          true); // faces -y
            }
        }

    // exterior: domain boundary skirts down to the foundation, plus bottom
    double W = lat.line_x(lat.cols());
    double H = lat.line_y(lat.rows());
    for (int ci = 0; ci < lat.cols(); ++ci) {
        double x0 = lat.line_x(ci), x1 = lat.line_x(ci + 1);
        double zs = lat.height_at(lat.get(ci, 0), x0);
        double ze = lat.height_at(lat.get(ci, 0), x1);
        skirt(x0, 0.0, x1, 0.0, zs, ze, lat.base_z, lat.base_z, false); // south, faces -y
        zs = lat.height_at(lat.get(ci, lat.rows() - 1), x1);
        ze = lat.height_at(lat.get(ci, lat.rows() - 1), x0);
        skirt(x1, H, x0, H, zs, ze, lat.base_z, lat.base_z, false); // north, faces +y
    }
    for (int cj = 0; cj < lat.rows(); ++cj) {
        double y0 = lat.line_y(cj), y1 = lat.line_y(cj + 1);
        double zw = lat.height_at(lat.get(0, cj), 0.0);
        skirt(0.0, y1, 0.0, y0, zw, zw, lat.base_z, lat.base_z, false); // west, faces -x
        double ze = lat.height_at(lat.get(lat.cols() - 1, cj), W);
        skirt(W, y0, W, y1, ze, ze, lat.base_z, lat.base_z, false); // east, faces +x
    }
    {
        // bottom cap, normal down
        int a = add_vertex(0, 0, lat.base_z);
        int b = add_vertex(0, H, lat.base_z);
        int c = add_vertex(W, H, lat.base_z);
        int d = add_vertex(W, 0, lat.base_z);
        add_quad(a, b, c, d, false);
    }

    BuildingModel model;
    model.complete = finalize_mesh(verts, tris);
    model.target = finalize_mesh(verts, target_tris);
    model.wall_height = lat.wall_height;

    if (preset == BuildingPreset::TwoRoom) {
        model.rooms.push_back({"room_a", lat.ix(0), lat.iy(0), lat.ix(14), lat.iy(20), false});
        model.rooms.push_back({"room_b", lat.ix(15), lat.iy(0), lat.ix(28), lat.iy(20), false});
        model.start = {lat.ix(5), lat.iy(10), 0.0};
    } else {
        model.rooms.push_back(
            {"sealed_room", lat.ix(6), lat.iy(31), lat.ix(15), lat.iy(40), true});
        model.rooms.push_back({"hall", lat.ix(0), lat.iy(9), lat.ix(28), lat.iy(48), false});
        model.rooms.push_back({"room_b", lat.ix(29), lat.iy(0), lat.ix(58), lat.iy(23), false});
        model.rooms.push_back({"room_c", lat.ix(29), lat.iy(24), lat.ix(58), lat.iy(48), false});
        model.rooms.push_back({"ramp_area", lat.ix(0), lat.iy(0), lat.ix(24), lat.iy(8), false});
        model.start = {lat.ix(22), lat.iy(22), 0.0};
    }
    return model;
}

} // namespace covplan
