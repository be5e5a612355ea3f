#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "covplan/mesh.hpp"
#include "test_support.hpp"

using namespace covplan;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "mesh_test_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

} // namespace

TEST_CASE("load_mesh reads a unit cube OBJ") {
    std::string obj =
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "v 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
        "f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 3 4 8 7\nf 1 5 8 4\nf 2 3 7 6\n";
    auto path = write_temp("cube.obj", obj);
    TriangleMesh mesh = load_mesh(path);
    CHECK(mesh.vertices.size() == 8);
    CHECK(mesh.triangles.size() == 12);
    CHECK(mesh.degenerate_dropped == 0);
    CHECK(mesh.total_area() == Catch::Approx(6.0));
    std::remove(path.c_str());
}

TEST_CASE("load_mesh drops degenerate triangles with a warning count") {
    std::string obj =
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\n"
        "f 1 2 3\n"
        "f 1 2 4\n"; // collinear: zero area
    auto path = write_temp("degen.obj", obj);
    TriangleMesh mesh = load_mesh(path);
    CHECK(mesh.triangles.size() == 1);
    CHECK(mesh.degenerate_dropped == 1);
    std::remove(path.c_str());
}

TEST_CASE("load_mesh rejects dangling vertex indices") {
    auto path = write_temp("dangling.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    CHECK_THROWS_WITH(load_mesh(path), Catch::Matchers::ContainsSubstring("index out of range"));
    std::remove(path.c_str());
}

TEST_CASE("load_mesh rejects unreadable, unsupported and empty inputs") {
    CHECK_THROWS_WITH(load_mesh("does_not_exist.obj"),
                      Catch::Matchers::ContainsSubstring("cannot open"));
    auto bad = write_temp("bad.stl", "solid nope\n");
    CHECK_THROWS_WITH(load_mesh(bad), Catch::Matchers::ContainsSubstring("unsupported"));
    std::remove(bad.c_str());
    auto empty = write_temp("empty.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\n");
    CHECK_THROWS_WITH(load_mesh(empty), Catch::Matchers::ContainsSubstring("empty mesh"));
    std::remove(empty.c_str());
}

TEST_CASE("load_mesh merges duplicate vertices") {
    // two triangles sharing an edge, written with duplicated coordinates
    std::string obj =
        "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        "v 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "f 1 2 3\nf 4 5 6\n";
    auto path = write_temp("dup.obj", obj);
    TriangleMesh mesh = load_mesh(path);
    CHECK(mesh.vertices.size() == 4);
    CHECK(mesh.triangles.size() == 2);
    std::remove(path.c_str());
}

TEST_CASE("binary little-endian PLY round trip") {
    // hand-rolled PLY writer for a single triangle
    std::ostringstream ply;
    ply << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
        << "element face 1\nproperty list uchar int vertex_indices\nend_header\n";
    float coords[9] = {0, 0, 0, 1, 0, 0, 0, 1, 0};
    ply.write(reinterpret_cast<const char*>(coords), sizeof(coords));
    std::uint8_t count = 3;
    std::int32_t idx[3] = {0, 1, 2};
    ply.write(reinterpret_cast<const char*>(&count), 1);
    ply.write(reinterpret_cast<const char*>(idx), sizeof(idx));

    auto path = write_temp("tri.ply", ply.str());
    TriangleMesh mesh = load_mesh(path);
    CHECK(mesh.vertices.size() == 3);
    CHECK(mesh.triangles.size() == 1);
    CHECK(mesh.total_area() == Catch::Approx(0.5));
    std::remove(path.c_str());
}

TEST_CASE("save_obj/load_mesh round trip preserves geometry") {
    TriangleMesh box = covtest::box_mesh({0, 0, 0}, {1.25, 0.5, 2.0});
    save_obj(box, "mesh_test_roundtrip.obj");
    TriangleMesh back = load_mesh("mesh_test_roundtrip.obj");
    REQUIRE(back.vertices.size() == box.vertices.size());
    REQUIRE(back.triangles.size() == box.triangles.size());
    CHECK(back.total_area() == Catch::Approx(box.total_area()));
    std::remove("mesh_test_roundtrip.obj");
}

TEST_CASE("closest_point_on_triangle covers all regions") {
    Vec3 a{0, 0, 0}, b{2, 0, 0}, c{0, 2, 0};
    CHECK((closest_point_on_triangle({0.5, 0.5, 1.0}, a, b, c) - Vec3{0.5, 0.5, 0}).norm() ==
          Catch::Approx(0.0).margin(1e-12));
    CHECK((closest_point_on_triangle({-1, -1, 0}, a, b, c) - a).norm() ==
          Catch::Approx(0.0).margin(1e-12));
    CHECK((closest_point_on_triangle({3, 0.1, 0}, a, b, c) - b).norm() ==
          Catch::Approx(0.0).margin(0.15));
    CHECK((closest_point_on_triangle({1, -1, 0}, a, b, c) - Vec3{1, 0, 0}).norm() ==
          Catch::Approx(0.0).margin(1e-12));
}
