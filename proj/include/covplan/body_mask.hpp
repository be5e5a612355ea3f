#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "covplan/vec3.hpp"

namespace covplan {

namespace fib {

inline constexpr double kGoldenRatio = 1.618033988749894848204586834365638118;

inline double madfrac(double a, double b) {
    double x = a * b;
    return x - std::floor(x);
}

// Point i of an n-point spherical Fibonacci set. The azimuth uses
// frac(i * (phi - 1)) so the forward points and the inverse mapping agree
// bit-for-bit.
inline Vec3 point(std::size_t i, std::size_t n) {
    double phi = kTwoPi * madfrac(static_cast<double>(i), kGoldenRatio - 1.0);
    double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

// O(1) nearest-point lookup on the spherical Fibonacci set (the inverse
// mapping of Keinert et al.): locate the local lattice cell from the two
// dominant Fibonacci frequencies and compare the four corner candidates.
inline std::size_t nearest_index(const Vec3& p, std::size_t n_points) {
    const double n = static_cast<double>(n_points);
    const double phi_g = kGoldenRatio;

    double phi = std::min(std::atan2(p.y, p.x), kPi);
    double cos_theta = p.z;

    double arg = n * kPi * std::sqrt(5.0) * std::max(1e-300, 1.0 - cos_theta * cos_theta);
    double k = std::max(2.0, std::floor(std::log(arg) / std::log(phi_g * phi_g)));
    double fk = std::pow(phi_g, k) / std::sqrt(5.0);
    double f0 = std::round(fk), f1 = std::round(fk * phi_g);

    // local lattice basis: columns are the steps of +F0 and +F1 in index
    double b00 = kTwoPi * madfrac(f0 + 1.0, phi_g - 1.0) - kTwoPi * (phi_g - 1.0);
    double b01 = kTwoPi * madfrac(f1 + 1.0, phi_g - 1.0) - kTwoPi * (phi_g - 1.0);
    double b10 = -2.0 * f0 / n;
    double b11 = -2.0 * f1 / n;
    double det = b00 * b11 - b01 * b10;
    double y = cos_theta - (1.0 - 1.0 / n);
    double c0 = std::floor((b11 * phi - b01 * y) / det);
    double c1 = std::floor((-b10 * phi + b00 * y) / det);

    double best_d2 = std::numeric_limits<double>::max();
    std::size_t best_i = 0;
    for (int s = 0; s < 4; ++s) {
        double u0 = c0 + static_cast<double>(s % 2);
        double u1 = c1 + static_cast<double>(s / 2);
        double ct = b10 * u0 + b11 * u1 + (1.0 - 1.0 / n);
        ct = std::clamp(ct, -1.0, 1.0) * 2.0 - ct; // reflect over-shoots back into range
        double i = std::floor(n * 0.5 - ct * n * 0.5);
        if (i < 0.0) i = 0.0;
        if (i >= n) i = n - 1.0;
        Vec3 q = point(static_cast<std::size_t>(i), n_points);
        double d2 = (q - p).norm2();
        if (d2 < best_d2) {
            best_d2 = d2;
            best_i = static_cast<std::size_t>(i);
        }
    }
    return best_i;
}

} // namespace fib

// Convex polytope stored as supporting planes, built incrementally from its
// vertex set.
struct ConvexHullShape {
    std::vector<Vec3> plane_normals; // unit, outward
    std::vector<double> plane_offsets; // n . x <= offset inside

    bool contains(const Vec3& p, double eps = 1e-9) const {
        for (std::size_t f = 0; f < plane_normals.size(); ++f)
            if (plane_normals[f].dot(p) > plane_offsets[f] + eps) return false;
        return true;
    }

    // First positive hit parameter of ray o + t*d, or false if the ray
    // misses. Assumes o outside.
    bool ray_hit(const Vec3& o, const Vec3& d, double& t_hit) const {
        double t_enter = 0.0, t_exit = std::numeric_limits<double>::max();
        for (std::size_t f = 0; f < plane_normals.size(); ++f) {
            double nd = plane_normals[f].dot(d);
            double no = plane_normals[f].dot(o) - plane_offsets[f];
            if (std::abs(nd) < 1e-15) {
                if (no > 0.0) return false;
                continue;
            }
            double t = -no / nd;
            if (nd < 0.0)
                t_enter = std::max(t_enter, t);
            else
                t_exit = std::min(t_exit, t);
            if (t_enter > t_exit) return false;
        }
        if (t_exit < 1e-12) return false;
        t_hit = t_enter;
        return true;
    }
};

namespace detail {

// Incremental convex hull over a small point set. Throws if the points are
// degenerate (fewer than 4 non-coplanar vertices).
inline ConvexHullShape build_convex_hull(const std::vector<Vec3>& pts) {
    if (pts.size() < 4) throw std::runtime_error("convex hull: need at least 4 vertices");

    double scale = 0.0;
    Aabb box;
    for (const auto& p : pts) box.expand(p);
    scale = std::max({box.extent().x, box.extent().y, box.extent().z, 1e-9});
    const double eps = 1e-9 * scale;

    // initial simplex: two extreme points, then max-distance from line/plane
    std::size_t i0 = 0, i1 = 1;
    double best = -1.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            double d = (pts[a] - pts[b]).norm2();
            if (d > best) { best = d; i0 = a; i1 = b; }
        }
    if (best < eps * eps) throw std::runtime_error("convex hull: degenerate vertices");
    std::size_t i2 = 0;
    best = -1.0;
    for (std::size_t a = 0; a < pts.size(); ++a) {
        Vec3 d = (pts[i1] - pts[i0]).cross(pts[a] - pts[i0]);
        if (d.norm2() > best) { best = d.norm2(); i2 = a; }
    }
    if (best < eps * eps) throw std::runtime_error("convex hull: vertices are collinear");
    Vec3 n0 = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
    std::size_t i3 = 0;
    best = -1.0;
    for (std::size_t a = 0; a < pts.size(); ++a) {
        double d = std::abs(n0.dot(pts[a] - pts[i0]));
        if (d > best) { best = d; i3 = a; }
    }
    if (best < eps) throw std::runtime_error("convex hull: vertices are coplanar");

    struct Face {
        std::array<std::size_t, 3> v;
        Vec3 n;
        double off;
        bool alive = true;
    };
    std::vector<Face> faces;
    auto add_face = [&](std::size_t a, std::size_t b, std::size_t c, const Vec3& inside) {
        Face f;
        f.v = {a, b, c};
        f.n = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
        if (f.n.dot(inside - pts[a]) > 0.0) { // wind outward
            std::swap(f.v[1], f.v[2]);
            f.n = -f.n;
        }
        f.off = f.n.dot(pts[f.v[0]]);
        faces.push_back(f);
    };
    Vec3 centroid = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) * 0.25;
    add_face(i0, i1, i2, centroid);
    add_face(i0, i1, i3, centroid);
    add_face(i0, i2, i3, centroid);
    add_face(i1, i2, i3, centroid);

    for (std::size_t p = 0; p < pts.size(); ++p) {
        if (p == i0 || p == i1 || p == i2 || p == i3) continue;
        std::vector<std::size_t> visible;
        for (std::size_t f = 0; f < faces.size(); ++f)
            if (faces[f].alive && faces[f].n.dot(pts[p]) > faces[f].off + eps)
                visible.push_back(f);
        if (visible.empty()) continue;

        // horizon = directed edges of visible faces whose reversal is not on
        // a visible face
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t f : visible)
            for (int k = 0; k < 3; ++k)
                edges.emplace_back(faces[f].v[static_cast<std::size_t>(k)],
                                   faces[f].v[static_cast<std::size_t>((k + 1) % 3)]);
        for (std::size_t f : visible) faces[f].alive = false;
        for (const auto& e : edges) {
            bool shared = false;
            for (const auto& o : edges)
                if (o.first == e.second && o.second == e.first) { shared = true; break; }
            if (shared) continue;
            // the initial simplex centroid stays strictly interior, so it
            // orients every later face as well
            add_face(e.first, e.second, p, centroid);
        }
    }

    ConvexHullShape hull;
    for (const auto& f : faces) {
        if (!f.alive) continue;
        hull.plane_normals.push_back(f.n);
        hull.plane_offsets.push_back(f.off);
    }
    return hull;
}

} // namespace detail

// Stand-in for the robot's own geometry: a union of convex parts plus the
// sensor location, all in the base frame.
struct RobotBodyModel {
    std::vector<std::vector<Vec3>> convex_parts;
    Vec3 sensor_origin{0, 0, 0.8};
};

// Precomputed spherical visibility mask: for each lattice direction, whether
// the robot's own body blocks that ray from the sensor.
struct SelfOcclusionMask {
    int size = 0;
    std::vector<Vec3> directions;
    std::vector<std::uint8_t> blocked;

    int blocked_count() const {
        int n = 0;
        for (auto b : blocked) n += b;
        return n;
    }
};

inline SelfOcclusionMask build_self_mask(const RobotBodyModel& body, int mask_size) {
    if (mask_size < 64) throw std::runtime_error("self mask: need at least 64 directions");
    std::vector<ConvexHullShape> hulls;
    hulls.reserve(body.convex_parts.size());
    for (const auto& part : body.convex_parts) hulls.push_back(detail::build_convex_hull(part));
    for (const auto& h : hulls)
        if (h.contains(body.sensor_origin, -1e-9))
            throw std::runtime_error("self mask: sensor origin inside robot body");

    SelfOcclusionMask mask;
    mask.size = mask_size;
    mask.directions.resize(static_cast<std::size_t>(mask_size));
    mask.blocked.assign(static_cast<std::size_t>(mask_size), 0);
    for (int i = 0; i < mask_size; ++i) {
        Vec3 dir = fib::point(static_cast<std::size_t>(i), static_cast<std::size_t>(mask_size));
        mask.directions[static_cast<std::size_t>(i)] = dir;
        for (const auto& h : hulls) {
            double t;
            if (h.ray_hit(body.sensor_origin, dir, t)) {
                mask.blocked[static_cast<std::size_t>(i)] = 1;
                break;
            }
        }
    }
    return mask;
}

// Nearest-mask-direction lookup via the inverse Fibonacci mapping; agrees
// with exhaustive nearest-neighbor search.
inline bool mask_lookup(const SelfOcclusionMask& mask, const Vec3& direction) {
    double n = direction.norm();
    if (n < 1e-12) throw std::runtime_error("mask_lookup: zero-length direction");
    Vec3 d = direction / n;
    std::size_t i = fib::nearest_index(d, static_cast<std::size_t>(mask.size));
    return mask.blocked[i] != 0;
}

} // namespace covplan
