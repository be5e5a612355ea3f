#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "covplan/mesh.hpp"
#include "covplan/rng.hpp"
#include "covplan/vec3.hpp"

namespace covplan {

// Points sampled on the target model's surface; coverage is counted over
// these. Ids are stable 0..n-1 for a fixed mesh, density and seed.
struct TargetPointSet {
    std::vector<Vec3> points;
    std::vector<int> source_triangle;

    int size() const { return static_cast<int>(points.size()); }
};

// Area-weighted uniform surface sampling, deterministic per seed.
// Point count is ceil(density * total target area).
inline TargetPointSet sample_target_points(const TriangleMesh& target, double density,
                                           std::uint64_t seed) {
    if (density <= 0.0) throw std::runtime_error("sample_target_points: density must be positive");
    if (target.triangles.empty())
        throw std::runtime_error("sample_target_points: empty target mesh");

    std::vector<double> cumulative(target.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < target.triangles.size(); ++t) {
        total += target.triangle_area(static_cast<int>(t));
        cumulative[t] = total;
    }
    if (total <= 0.0) throw std::runtime_error("sample_target_points: target mesh has zero area");

    std::size_t count = static_cast<std::size_t>(std::ceil(density * total));
    TargetPointSet set;
    set.points.reserve(count);
    set.source_triangle.reserve(count);

    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        double pick = rng.uniform() * total;
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
        int tri = static_cast<int>(std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative.begin()), target.triangles.size() - 1));
        // uniform barycentric point via the square-root trick
        double r1 = std::sqrt(rng.uniform());
        double r2 = rng.uniform();
        Vec3 a = target.triangle_vertex(tri, 0);
        Vec3 b = target.triangle_vertex(tri, 1);
        Vec3 c = target.triangle_vertex(tri, 2);
        Vec3 p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
        set.points.push_back(p);
        set.source_triangle.push_back(tri);
    }
    return set;
}

} // namespace covplan
