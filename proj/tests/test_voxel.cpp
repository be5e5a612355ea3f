#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "covplan/voxel_grid.hpp"
#include "test_support.hpp"

using namespace covplan;
using covtest::box_mesh;
using covtest::quad_mesh;

TEST_CASE("voxelize a thin wall produces a one-voxel slab") {
    // unit square wall in the plane x = 0.5, plus a small anchor triangle at
    // x = 0 so the wall plane does not coincide with the mesh AABB corner
    // (an AABB face always lands on a lattice boundary)
    std::vector<Vec3> verts = {{0.5, 0, 0}, {0.5, 1, 0}, {0.5, 1, 1}, {0.5, 0, 1},
                               {0, 0, 0},   {0.05, 0, 0}, {0, 0.05, 0}};
    std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}};
    TriangleMesh wall = finalize_mesh(verts, tris);
    VoxelOccupancyGrid grid = voxelize(wall, 0.075);

    // every occupied cell in the wall's y/z interior lies in one x-slab
    int wall_cell = grid.cell_of({0.5, 0.5, 0.5}).x;
    int occupied = 0;
    for (int z = 0; z < grid.dims[2]; ++z)
        for (int y = 0; y < grid.dims[1]; ++y)
            for (int x = 0; x < grid.dims[0]; ++x) {
                if (!grid.is_occupied({x, y, z})) continue;
                Vec3 center = grid.cell_center({x, y, z});
                if (center.y < 0.2 || center.y > 0.8 || center.z < 0.2 || center.z > 0.8)
                    continue;
                ++occupied;
                CHECK(x == wall_cell);
            }
    CHECK(occupied > 0);

    // cells away from the wall are free
    CHECK(!grid.is_occupied(grid.cell_of({0.2, 0.5, 0.5})));
}

TEST_CASE("triangle exactly on a voxel boundary occupies both neighbors") {
    // grid origin is aabb.lo - voxel; with lo.x = 0 and voxel 0.25 the plane
    // x = 0.75 is a lattice boundary
    std::vector<Vec3> verts = {{0, 0, 0},     {1.5, 0, 0},    {0.75, 0.1, 0.1},
                               {0.75, 0.9, 0.1}, {0.75, 0.9, 0.9}, {0.75, 0.1, 0.9}};
    std::vector<std::array<int, 3>> tris = {{0, 1, 2}, {2, 3, 4}, {2, 4, 5}};
    TriangleMesh mesh = finalize_mesh(verts, tris);
    VoxelOccupancyGrid grid = voxelize(mesh, 0.25);
    // the quad at x=0.75 sits exactly on a boundary: both adjacent cells occupied
    GridIndex left = grid.cell_of({0.75 - 1e-6, 0.5, 0.5});
    GridIndex right = grid.cell_of({0.75 + 1e-6, 0.5, 0.5});
    CHECK(left.x + 1 == right.x);
    CHECK(grid.is_occupied(left));
    CHECK(grid.is_occupied(right));
}

TEST_CASE("voxelize errors") {
    TriangleMesh box = box_mesh({0, 0, 0}, {100, 100, 100});
    CHECK_THROWS_WITH(voxelize(box, 0.002), Catch::Matchers::ContainsSubstring("grid too large"));
    CHECK_THROWS(voxelize(box, 0.0));
}

TEST_CASE("voxelization is conservative for random surface points") {
    covtest::Rng rng(7);
    TriangleMesh mesh = covtest::boxes_mesh(
        {{{0, 0, 0}, {1.0, 0.8, 0.6}}, {{1.4, 0.2, 0.1}, {2.0, 1.0, 0.9}}});
    VoxelOccupancyGrid grid = voxelize(mesh, 0.07);
    std::vector<double> cumulative;
    double total = 0.0;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        total += mesh.triangle_area(t);
        cumulative.push_back(total);
    }
    for (int i = 0; i < 1000; ++i) {
        double pick = rng.uniform() * total;
        int tri = static_cast<int>(std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
                                   cumulative.begin());
        tri = std::min<int>(tri, static_cast<int>(mesh.triangles.size()) - 1);
        double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
        Vec3 p = mesh.triangle_vertex(tri, 0) * (1 - r1) +
                 mesh.triangle_vertex(tri, 1) * (r1 * (1 - r2)) +
                 mesh.triangle_vertex(tri, 2) * (r1 * r2);
        REQUIRE(grid.in_bounds(p));
        CHECK(grid.is_occupied(grid.cell_of(p)));
    }
}

TEST_CASE("ray_cast on an empty grid always passes") {
    VoxelOccupancyGrid grid;
    grid.origin = {0, 0, 0};
    grid.voxel_size = 0.1;
    grid.dims = {32, 32, 32};
    grid.occupied.assign(grid.cell_count(), 0);
    covtest::Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        Vec3 a{rng.uniform(0.05, 3.15), rng.uniform(0.05, 3.15), rng.uniform(0.05, 3.15)};
        Vec3 b{rng.uniform(0.05, 3.15), rng.uniform(0.05, 3.15), rng.uniform(0.05, 3.15)};
        CHECK(ray_cast(grid, a, b));
    }
}

TEST_CASE("ray_cast blocked by a one-voxel wall, endpoint voxels exempt") {
    TriangleMesh wall = quad_mesh({0.5, 0, 0}, {0.5, 1, 0}, {0.5, 1, 1}, {0.5, 0, 1});
    VoxelOccupancyGrid grid = voxelize(wall, 0.075);
    // straight through the wall: blocked
    CHECK(!ray_cast(grid, {0.2, 0.5, 0.5}, {0.9, 0.5, 0.5}));
    // to a point on the wall surface: endpoint voxel exempt, visible
    CHECK(ray_cast(grid, {0.2, 0.5, 0.5}, {0.5 - 1e-4, 0.5, 0.5}));
    // out of bounds endpoints rejected
    CHECK_THROWS_WITH(ray_cast(grid, {0.2, 0.5, 0.5}, {50.0, 0.5, 0.5}),
                      Catch::Matchers::ContainsSubstring("out of bounds"));
}

TEST_CASE("ray_cast agrees with the exact voxel-overlap oracle") {
    covtest::Rng rng(2024);
    int checked = 0;
    for (int scene_i = 0; scene_i < 10; ++scene_i) {
        covtest::BoxScene scene = covtest::random_box_scene(rng, 0.1, 6);
        VoxelOccupancyGrid grid = voxelize(scene.mesh, 0.1);
        for (int i = 0; i < 1000; ++i) {
            Vec3 a = covtest::random_free_point(scene, rng, 0.0);
            Vec3 b = covtest::random_free_point(scene, rng, 0.0);
            if (!grid.in_bounds(a) || !grid.in_bounds(b)) continue;
            bool fast = ray_cast(grid, a, b);
            bool slow = covtest::oracle_ray_cast(grid, a, b);
            if (fast != slow) {
                CAPTURE(scene_i, i, a.x, a.y, a.z, b.x, b.y, b.z);
            }
            REQUIRE(fast == slow);
            ++checked;
        }
    }
    CHECK(checked >= 9000);
}

TEST_CASE("grid binary format round trip and header layout") {
    TriangleMesh box = box_mesh({0, 0, 0}, {0.5, 0.4, 0.3});
    VoxelOccupancyGrid grid = voxelize(box, 0.05);
    save_grid(grid, "voxel_test_grid.bin");

    VoxelOccupancyGrid back = load_grid("voxel_test_grid.bin");
    CHECK(back.dims == grid.dims);
    CHECK(back.voxel_size == grid.voxel_size);
    CHECK(back.occupied == grid.occupied);
    CHECK(back.origin == grid.origin);

    // check the documented header layout byte by byte
    std::ifstream in("voxel_test_grid.bin", std::ios::binary);
    char magic[16];
    in.read(magic, 16);
    CHECK(std::string(magic, 8) == "CVPLGRID");
    CHECK(magic[15] == 1);
    double origin[3], voxel;
    in.read(reinterpret_cast<char*>(origin), 24);
    in.read(reinterpret_cast<char*>(&voxel), 8);
    CHECK(voxel == grid.voxel_size);
    std::uint32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), 12);
    CHECK(static_cast<int>(dims[0]) == grid.dims[0]);
    CHECK(static_cast<int>(dims[2]) == grid.dims[2]);
    std::remove("voxel_test_grid.bin");
}
