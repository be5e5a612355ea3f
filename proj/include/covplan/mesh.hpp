#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "covplan/vec3.hpp"

namespace covplan {

constexpr double kVertexMergeEps = 1e-9;    // meters
constexpr double kDegenerateAreaEps = 1e-12; // square meters

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    int degenerate_dropped = 0; // warning count from loading/building

    Aabb bounds() const {
        Aabb box;
        for (const auto& v : vertices) box.expand(v);
        return box;
    }

    Vec3 triangle_vertex(int tri, int corner) const {
        return vertices[static_cast<std::size_t>(triangles[static_cast<std::size_t>(tri)]
                                                     [static_cast<std::size_t>(corner)])];
    }

    double triangle_area(int tri) const {
        Vec3 a = triangle_vertex(tri, 0), b = triangle_vertex(tri, 1), c = triangle_vertex(tri, 2);
        return 0.5 * (b - a).cross(c - a).norm();
    }

    Vec3 triangle_normal(int tri) const {
        Vec3 a = triangle_vertex(tri, 0), b = triangle_vertex(tri, 1), c = triangle_vertex(tri, 2);
        return (b - a).cross(c - a).normalized();
    }

    double total_area() const {
        double area = 0.0;
        for (int t = 0; t < static_cast<int>(triangles.size()); ++t) area += triangle_area(t);
        return area;
    }
};

// Closest point on triangle (a,b,c) to p. Ericson's region walk.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return a + ab * v;
    }

    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return a + ac * w;
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return a + ab * v + ac * w;
}

inline Vec3 closest_segment_point(const Vec3& a, const Vec3& b, const Vec3& p) {
    Vec3 ab = b - a;
    double len2 = ab.norm2();
    if (len2 < 1e-24) return a;
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return a + ab * t;
}

// Watertight-enough ray/triangle intersection (Moller-Trumbore), used by the
// sign fallback and in tests. Returns t >= 0 on hit.
inline bool ray_triangle_intersect(const Vec3& orig, const Vec3& dir, const Vec3& a, const Vec3& b,
                                   const Vec3& c, double& t_out) {
    constexpr double eps = 1e-12;
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pvec = dir.cross(e2);
    double det = e1.dot(pvec);
    if (std::abs(det) < eps) return false;
    double inv_det = 1.0 / det;
    Vec3 tvec = orig - a;
    double u = tvec.dot(pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 qvec = tvec.cross(e1);
    double v = dir.dot(qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    double t = e2.dot(qvec) * inv_det;
    if (t < 0.0) return false;
    t_out = t;
    return true;
}

namespace detail {

struct VertexKey {
    std::int64_t x, y, z;
    bool operator<(const VertexKey& o) const {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return z < o.z;
    }
};

inline VertexKey quantize_vertex(const Vec3& v, double eps) {
    auto q = [eps](double d) { return static_cast<std::int64_t>(std::llround(d / eps)); };
    return {q(v.x), q(v.y), q(v.z)};
}

} // namespace detail

// Builds an indexed mesh from raw vertex/triangle lists: merges vertices
// closer than the merge epsilon and drops triangles below the area floor.
inline TriangleMesh finalize_mesh(const std::vector<Vec3>& raw_vertices,
                                  const std::vector<std::array<int, 3>>& raw_triangles) {
    TriangleMesh mesh;
    std::map<detail::VertexKey, int> index_of;
    std::vector<int> remap(raw_vertices.size(), -1);
    for (std::size_t i = 0; i < raw_vertices.size(); ++i) {
        auto key = detail::quantize_vertex(raw_vertices[i], kVertexMergeEps);
        auto it = index_of.find(key);
        if (it == index_of.end()) {
            int id = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(raw_vertices[i]);
            index_of.emplace(key, id);
            remap[i] = id;
        } else {
            remap[i] = it->second;
        }
    }
    for (const auto& t : raw_triangles) {
        for (int k = 0; k < 3; ++k) {
            if (t[static_cast<std::size_t>(k)] < 0 ||
                t[static_cast<std::size_t>(k)] >= static_cast<int>(raw_vertices.size()))
                throw std::runtime_error("mesh: triangle vertex index out of range");
        }
        std::array<int, 3> m = {remap[static_cast<std::size_t>(t[0])],
                                remap[static_cast<std::size_t>(t[1])],
                                remap[static_cast<std::size_t>(t[2])]};
        Vec3 a = mesh.vertices[static_cast<std::size_t>(m[0])];
        Vec3 b = mesh.vertices[static_cast<std::size_t>(m[1])];
        Vec3 c = mesh.vertices[static_cast<std::size_t>(m[2])];
        double area = 0.5 * (b - a).cross(c - a).norm();
        if (area < kDegenerateAreaEps) {
            ++mesh.degenerate_dropped;
            continue;
        }
        mesh.triangles.push_back(m);
    }
    return mesh;
}

namespace detail {

inline TriangleMesh load_obj(std::istream& in) {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::string line;
    while (std::getline(in, line)) {
        if (line.size() >= 2 && line[0] == 'v' && (line[1] == ' ' || line[1] == '\t')) {
            std::istringstream ls(line.substr(2));
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw std::runtime_error("obj: malformed vertex line");
            vertices.push_back(v);
        } else if (line.size() >= 2 && line[0] == 'f' && (line[1] == ' ' || line[1] == '\t')) {
            std::istringstream ls(line.substr(2));
            std::vector<int> face;
            std::string tok;
            while (ls >> tok) {
                // "v", "v/vt", "v//vn", "v/vt/vn" all start with the vertex index
                std::size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int idx = std::stoi(head);
                if (idx < 0) idx = static_cast<int>(vertices.size()) + idx + 1; // negative = relative
                face.push_back(idx - 1);
            }
            if (face.size() < 3) throw std::runtime_error("obj: face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < face.size(); ++k)
                triangles.push_back({face[0], face[k], face[k + 1]}); // fan triangulation
        }
        // everything else (vn, vt, comments, groups) is ignored
    }
    return finalize_mesh(vertices, triangles);
}

template <typename T>
T read_le(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("ply: unexpected end of file");
    return v;
}

inline TriangleMesh load_ply(std::istream& in) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw std::runtime_error("ply: missing magic");

    std::size_t n_vertices = 0, n_faces = 0;
    bool binary_le = false;
    // element currently being described: 0 none, 1 vertex, 2 face, 3 other
    int current = 0;
    struct Prop { char type; }; // 'f' float32, 'd' float64
    std::vector<Prop> vertex_props;
    int xi = -1, yi = -1, zi = -1;
    char face_count_type = 0, face_index_type = 0;

    auto scalar_code = [](const std::string& t) -> char {
        if (t == "float" || t == "float32") return 'f';
        if (t == "double" || t == "float64") return 'd';
        if (t == "char" || t == "int8") return 'b';
        if (t == "uchar" || t == "uint8") return 'B';
        if (t == "short" || t == "int16") return 'h';
        if (t == "ushort" || t == "uint16") return 'H';
        if (t == "int" || t == "int32") return 'i';
        if (t == "uint" || t == "uint32") return 'I';
        throw std::runtime_error("ply: unsupported property type " + t);
    };

    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian") binary_le = true;
            else throw std::runtime_error("ply: only binary_little_endian is supported");
        } else if (word == "element") {
            std::string name;
            std::size_t count;
            ls >> name >> count;
            if (name == "vertex") { current = 1; n_vertices = count; }
            else if (name == "face") { current = 2; n_faces = count; }
            else current = 3;
        } else if (word == "property") {
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, it, name;
                ls >> ct >> it >> name;
                if (current == 2 && (name == "vertex_indices" || name == "vertex_index")) {
                    face_count_type = scalar_code(ct);
                    face_index_type = scalar_code(it);
                } else if (current != 2) {
                    throw std::runtime_error("ply: unexpected list property outside faces");
                }
            } else if (current == 1) {
                std::string name;
                ls >> name;
                if (name == "x") xi = static_cast<int>(vertex_props.size());
                if (name == "y") yi = static_cast<int>(vertex_props.size());
                if (name == "z") zi = static_cast<int>(vertex_props.size());
                vertex_props.push_back({scalar_code(t)});
            }
        } else if (word == "end_header") {
            break;
        }
    }
    if (!binary_le) throw std::runtime_error("ply: missing format line");
    if (xi < 0 || yi < 0 || zi < 0) throw std::runtime_error("ply: vertex x/y/z missing");
    if (n_faces > 0 && face_count_type == 0)
        throw std::runtime_error("ply: face element without vertex_indices");

    auto read_scalar = [&](char code) -> double {
        switch (code) {
            case 'f': return read_le<float>(in);
            case 'd': return read_le<double>(in);
            case 'b': return read_le<std::int8_t>(in);
            case 'B': return read_le<std::uint8_t>(in);
            case 'h': return read_le<std::int16_t>(in);
            case 'H': return read_le<std::uint16_t>(in);
            case 'i': return read_le<std::int32_t>(in);
            case 'I': return read_le<std::uint32_t>(in);
            default: throw std::runtime_error("ply: bad scalar code");
        }
    };

    std::vector<Vec3> vertices;
    vertices.reserve(n_vertices);
    for (std::size_t i = 0; i < n_vertices; ++i) {
        Vec3 v;
        for (std::size_t p = 0; p < vertex_props.size(); ++p) {
            double d = read_scalar(vertex_props[p].type);
            if (static_cast<int>(p) == xi) v.x = d;
            if (static_cast<int>(p) == yi) v.y = d;
            if (static_cast<int>(p) == zi) v.z = d;
        }
        vertices.push_back(v);
    }

    std::vector<std::array<int, 3>> triangles;
    for (std::size_t f = 0; f < n_faces; ++f) {
        int n = static_cast<int>(read_scalar(face_count_type));
        std::vector<int> face(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            face[static_cast<std::size_t>(k)] = static_cast<int>(read_scalar(face_index_type));
        for (std::size_t k = 1; k + 1 < face.size(); ++k)
            triangles.push_back({face[0], face[k], face[k + 1]});
    }
    return finalize_mesh(vertices, triangles);
}

} // namespace detail

// Loads an ASCII OBJ or binary little-endian PLY. Duplicate vertices are
// merged, degenerate triangles dropped (counted in degenerate_dropped).
inline TriangleMesh load_mesh(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open mesh file: " + path);

    TriangleMesh mesh;
    char head[4] = {0, 0, 0, 0};
    in.read(head, 3);
    in.seekg(0);
    if (std::strncmp(head, "ply", 3) == 0) {
        mesh = detail::load_ply(in);
    } else {
        auto dot = path.find_last_of('.');
        std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
        if (ext != "obj" && ext != "OBJ")
            throw std::runtime_error("unsupported mesh format: " + path);
        mesh = detail::load_obj(in);
    }
    if (mesh.triangles.empty()) throw std::runtime_error("empty mesh: " + path);
    return mesh;
}

inline void save_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mesh file: " + path);
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

} // namespace covplan
