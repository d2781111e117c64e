#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "latspec/errors.hpp"
#include "latspec/vec3.hpp"

namespace latspec {

struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
};

enum class ShapeKind { Sphere, Ellipsoid, Cone, Cube, Tetrahedron3, Tetrahedron4, Torus, Icosphere };

/// Parameters for the built-in deterministic shape generators. `density` is
/// the parametric grid resolution d, the points-per-edge count m, or the
/// icosphere subdivision level, depending on the kind.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Sphere;
    int density = 100;
    double a = 1.0, b = 1.0, c = 1.0; // ellipsoid semi-axes
    double h = 1.0;                   // cone slope
    double R = 2.0, rho = 1.0;        // torus radii
};

namespace detail {

inline std::uint64_t bits(double v) {
    if (v == 0.0) v = 0.0; // collapse -0.0
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof u);
    return u;
}

struct ExactPointKey {
    std::uint64_t x, y, z;
    bool operator==(const ExactPointKey&) const = default;
};

struct ExactPointHash {
    std::size_t operator()(const ExactPointKey& k) const {
        std::uint64_t h = k.x * 0x9e3779b97f4a7c15ull;
        h ^= k.y + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h ^= k.z + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

inline ExactPointKey exact_key(Vec3 p) { return {bits(p.x), bits(p.y), bits(p.z)}; }

// (cos, sin) of 2*pi*i/count for i = 0..count-1. When count is divisible by 4
// the table is built from one octant and mirrored, so quarter-turn symmetries
// (including the x<->y swap used by axis-permuted ellipsoids) map table
// entries onto each other bit-exactly.
inline std::vector<std::array<double, 2>> unit_circle(int count) {
    std::vector<std::array<double, 2>> t(count);
    const double step = 2.0 * std::numbers::pi / count;
    if (count % 4 != 0) {
        for (int i = 0; i < count; ++i) t[i] = {std::cos(step * i), std::sin(step * i)};
        return t;
    }
    const int q = count / 4;
    for (int i = 0; i <= q / 2; ++i) t[i] = {std::cos(step * i), std::sin(step * i)};
    for (int i = q / 2 + 1; i <= q; ++i) t[i] = {t[q - i][1], t[q - i][0]};
    for (int i = q + 1; i <= 2 * q; ++i) t[i] = {-t[2 * q - i][0], t[2 * q - i][1]};
    for (int i = 2 * q + 1; i < count; ++i) t[i] = {t[count - i][0], -t[count - i][1]};
    return t;
}

} // namespace detail

/// Number of exact coordinate duplicates (total points minus distinct points).
inline std::size_t count_exact_duplicates(const PointCloud& cloud) {
    std::unordered_map<detail::ExactPointKey, int, detail::ExactPointHash> seen;
    std::size_t dup = 0;
    for (const Vec3& p : cloud.points)
        if (++seen[detail::exact_key(p)] > 1) ++dup;
    return dup;
}

inline void validate_cloud(const PointCloud& cloud) {
    if (cloud.empty()) throw InvalidInput("point cloud is empty");
    for (const Vec3& p : cloud.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw InvalidInput("point cloud contains a non-finite coordinate");
}

inline double triangle_area(Vec3 a, Vec3 b, Vec3 c) { return 0.5 * norm(cross(b - a, c - a)); }

/// Index bounds, non-degenerate faces, strictly positive areas, and at most
/// two faces per edge. Throws InvalidInput naming the offending face.
inline void validate_mesh(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) throw InvalidInput("mesh has no vertices");
    if (mesh.faces.empty()) throw InvalidInput("mesh has no faces");
    const int nv = static_cast<int>(mesh.vertices.size());
    std::map<std::pair<int, int>, int> edge_faces;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int v : face)
            if (v < 0 || v >= nv)
                throw InvalidInput("face " + std::to_string(f) + " has out-of-range vertex index " +
                                   std::to_string(v));
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
            throw InvalidInput("face " + std::to_string(f) + " repeats a vertex");
        const Vec3 a = mesh.vertices[face[0]], b = mesh.vertices[face[1]], c = mesh.vertices[face[2]];
        const double scale = std::max(norm2(b - a), norm2(c - a));
        if (norm(cross(b - a, c - a)) <= 1e-12 * scale)
            throw InvalidInput("face " + std::to_string(f) + " has zero area");
        for (auto [u, v] : {std::pair{face[0], face[1]}, {face[1], face[2]}, {face[2], face[0]}}) {
            if (u > v) std::swap(u, v);
            if (++edge_faces[{u, v}] > 2)
                throw InvalidInput("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                   ") is shared by more than two faces (face " + std::to_string(f) + ")");
        }
    }
}

struct MeshTopology {
    std::size_t vertex_count, edge_count, face_count, boundary_edge_count;
    long euler_characteristic() const {
        return static_cast<long>(vertex_count) - static_cast<long>(edge_count) +
               static_cast<long>(face_count);
    }
};

inline MeshTopology mesh_topology(const TriangleMesh& mesh) {
    std::map<std::pair<int, int>, int> edge_faces;
    for (const auto& face : mesh.faces)
        for (auto [u, v] : {std::pair{face[0], face[1]}, {face[1], face[2]}, {face[2], face[0]}}) {
            if (u > v) std::swap(u, v);
            ++edge_faces[{u, v}];
        }
    std::size_t boundary = 0;
    for (const auto& [e, n] : edge_faces)
        if (n == 1) ++boundary;
    return {mesh.vertices.size(), edge_faces.size(), mesh.faces.size(), boundary};
}

// --- generators ------------------------------------------------------------

/// d x d parametric grid on the unit sphere: u_i = 2*pi*i/d, v_j = pi*(j+0.5)/d.
/// The half-step latitude offset keeps the poles (and their duplicates) out.
inline PointCloud generate_sphere(int d) {
    if (d < 1) throw std::invalid_argument("generate_sphere: density must be >= 1");
    const auto circle = detail::unit_circle(d);
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double v = std::numbers::pi * (j + 0.5) / d;
            const double sv = std::sin(v), cv = std::cos(v);
            cloud.points.push_back({sv * circle[i][0], sv * circle[i][1], cv});
        }
    return cloud;
}

inline PointCloud generate_ellipsoid(double a, double b, double c, int d) {
    if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0))
        throw std::invalid_argument("generate_ellipsoid: semi-axes must be positive");
    PointCloud cloud = generate_sphere(d);
    for (Vec3& p : cloud.points) p = {a * p.x, b * p.y, c * p.z};
    return cloud;
}

namespace detail {

inline int cone_cap_ring_count(int m, int j) {
    return static_cast<int>(std::ceil(4.0 * m * j / (m - 1)));
}

} // namespace detail

/// Lateral surface of the cone (apex at the origin, base circle of radius 1
/// at z = h) on an m x 4m (t, theta) grid, plus the top disk on concentric
/// rings. The apex row and the shared rim circle are deduplicated.
inline PointCloud generate_cone(double h, int m) {
    if (!(h > 0.0)) throw std::invalid_argument("generate_cone: slope must be positive");
    if (m < 2) throw std::invalid_argument("generate_cone: density must be >= 2");
    PointCloud cloud;
    std::unordered_map<detail::ExactPointKey, int, detail::ExactPointHash> seen;
    auto push_unique = [&](Vec3 p) {
        if (seen.emplace(detail::exact_key(p), 1).second) cloud.points.push_back(p);
    };
    push_unique({0.0, 0.0, 0.0}); // apex (t = 0 ring collapses)
    const auto lateral = detail::unit_circle(4 * m);
    for (int i = 1; i < m; ++i) {
        const double t = static_cast<double>(i) / (m - 1);
        for (int l = 0; l < 4 * m; ++l)
            push_unique({t * lateral[l][0], t * lateral[l][1], h * t});
    }
    push_unique({0.0, 0.0, h}); // disk center
    for (int j = 1; j <= m - 1; ++j) {
        const double rad = static_cast<double>(j) / (m - 1);
        const int count = detail::cone_cap_ring_count(m, j);
        const auto ring = detail::unit_circle(count);
        for (int l = 0; l < count; ++l)
            push_unique({rad * ring[l][0], rad * ring[l][1], h});
    }
    return cloud;
}

/// Triangle mesh of the same cone: apex fan, lateral quads, and a disk cap
/// whose rings all reuse the 4m angular grid so the rim is shared exactly.
inline TriangleMesh generate_cone_mesh(double h, int m) {
    if (!(h > 0.0)) throw std::invalid_argument("generate_cone_mesh: slope must be positive");
    if (m < 2) throw std::invalid_argument("generate_cone_mesh: density must be >= 2");
    const int ring_n = 4 * m;
    const auto circle = detail::unit_circle(ring_n);
    TriangleMesh mesh;
    auto add_ring = [&](double rad, double z) {
        const int base = static_cast<int>(mesh.vertices.size());
        for (int l = 0; l < ring_n; ++l)
            mesh.vertices.push_back({rad * circle[l][0], rad * circle[l][1], z});
        return base;
    };
    const int apex = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({0.0, 0.0, 0.0});
    std::vector<int> lateral_ring(m); // lateral_ring[i] = base index of ring t=i/(m-1), i>=1
    for (int i = 1; i < m; ++i) {
        const double t = static_cast<double>(i) / (m - 1);
        lateral_ring[i] = add_ring(t, h * t);
    }
    auto quad_band = [&](int lo, int hi) {
        for (int l = 0; l < ring_n; ++l) {
            const int ln = (l + 1) % ring_n;
            mesh.faces.push_back({lo + l, hi + l, hi + ln});
            mesh.faces.push_back({lo + l, hi + ln, lo + ln});
        }
    };
    for (int l = 0; l < ring_n; ++l)
        mesh.faces.push_back({apex, lateral_ring[1] + l, lateral_ring[1] + (l + 1) % ring_n});
    for (int i = 1; i + 1 < m; ++i) quad_band(lateral_ring[i], lateral_ring[i + 1]);
    // cap: center + interior rings; the outermost ring is the lateral rim
    const int center = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back({0.0, 0.0, h});
    int prev = -1;
    for (int j = 1; j <= m - 2; ++j) {
        const int ring = add_ring(static_cast<double>(j) / (m - 1), h);
        if (j == 1)
            for (int l = 0; l < ring_n; ++l)
                mesh.faces.push_back({center, ring + l, ring + (l + 1) % ring_n});
        else
            quad_band(prev, ring);
        prev = ring;
    }
    const int rim = lateral_ring[m - 1];
    if (prev >= 0)
        quad_band(prev, rim);
    else
        for (int l = 0; l < ring_n; ++l)
            mesh.faces.push_back({center, rim + l, rim + (l + 1) % ring_n});
    return mesh;
}

/// Six m x m face grids of the cube [-1,1]^3 with shared edges and corners
/// deduplicated; 6m^2 - 12m + 8 distinct points.
inline PointCloud generate_cube(int m) {
    if (m < 2) throw std::invalid_argument("generate_cube: density must be >= 2");
    std::vector<double> g(m);
    for (int i = 0; i < m; ++i) g[i] = -1.0 + 2.0 * i / (m - 1);
    PointCloud cloud;
    std::unordered_map<detail::ExactPointKey, int, detail::ExactPointHash> seen;
    auto push_unique = [&](Vec3 p) {
        if (seen.emplace(detail::exact_key(p), 1).second) cloud.points.push_back(p);
    };
    for (double s : {-1.0, 1.0})
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                push_unique({s, g[i], g[j]});
                push_unique({g[i], s, g[j]});
                push_unique({g[i], g[j], s});
            }
    return cloud;
}

namespace detail {

// Subdivide each corner triangle to `m` points per edge, welding shared
// vertices exactly. Barycentric sums are accumulated in ascending corner
// order so a point shared between faces is the same floating-point value.
inline void subdivide_faces(const std::vector<Vec3>& corners,
                            const std::vector<std::array<int, 3>>& corner_faces, int m,
                            PointCloud& cloud, TriangleMesh& mesh) {
    std::unordered_map<ExactPointKey, int, ExactPointHash> index;
    auto vertex_at = [&](std::array<int, 3> ids, std::array<int, 3> w) {
        std::array<std::pair<int, int>, 3> iw{{{ids[0], w[0]}, {ids[1], w[1]}, {ids[2], w[2]}}};
        std::sort(iw.begin(), iw.end());
        Vec3 p{0, 0, 0};
        for (auto [id, weight] : iw) p = p + static_cast<double>(weight) * corners[id];
        p = (1.0 / (m - 1)) * p;
        auto [it, inserted] = index.emplace(exact_key(p), static_cast<int>(mesh.vertices.size()));
        if (inserted) {
            mesh.vertices.push_back(p);
            cloud.points.push_back(p);
        }
        return it->second;
    };
    for (const auto& f : corner_faces) {
        // rows of the triangular grid: (a, b, c), a + b + c = m - 1
        std::vector<std::vector<int>> rows(m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b + a < m; ++b)
                rows[a].push_back(vertex_at(f, {m - 1 - a - b, b, a}));
        for (int a = 0; a + 1 < m; ++a)
            for (int b = 0; b + a + 1 < m; ++b) {
                mesh.faces.push_back({rows[a][b], rows[a][b + 1], rows[a + 1][b]});
                if (b + a + 2 < m)
                    mesh.faces.push_back({rows[a][b + 1], rows[a + 1][b + 1], rows[a + 1][b]});
            }
    }
}

} // namespace detail

struct TetrahedronShape {
    PointCloud cloud;
    TriangleMesh mesh;
};

/// sides = 4: regular tetrahedron with unit edges. sides = 3: unit-edge
/// equilateral base centered at the origin with the apex at height 1
/// (three lateral faces plus the base).
inline TetrahedronShape generate_tetrahedron(int sides, int m) {
    if (sides != 3 && sides != 4)
        throw std::invalid_argument("generate_tetrahedron: sides must be 3 or 4");
    if (m < 2) throw std::invalid_argument("generate_tetrahedron: density must be >= 2");
    std::vector<Vec3> corners;
    if (sides == 4) {
        const double s = 1.0 / (2.0 * std::sqrt(2.0));
        corners = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
    } else {
        const double ry = 1.0 / std::sqrt(3.0); // circumradius of a unit-edge triangle
        corners = {{ry, 0.0, 0.0},
                   {-0.5 * ry, 0.5, 0.0},
                   {-0.5 * ry, -0.5, 0.0},
                   {0.0, 0.0, 1.0}};
    }
    const std::vector<std::array<int, 3>> faces = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    TetrahedronShape shape;
    detail::subdivide_faces(corners, faces, m, shape.cloud, shape.mesh);
    return shape;
}

/// d x d grid on the torus (u_i = 2*pi*i/d, v_j = 2*pi*j/d; both angles start
/// at zero, so d = 1 yields the single point (R + rho, 0, 0)).
inline PointCloud generate_torus(double R, double rho, int d) {
    if (!(rho > 0.0) || !(R > rho))
        throw std::invalid_argument("generate_torus: need R > rho > 0");
    if (d < 1) throw std::invalid_argument("generate_torus: density must be >= 1");
    const auto circle = detail::unit_circle(d);
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double ring = R + rho * circle[j][0];
            cloud.points.push_back({ring * circle[i][0], ring * circle[i][1], rho * circle[j][1]});
        }
    return cloud;
}

/// Unit icosphere: icosahedron subdivided `subdivisions` times with midpoints
/// projected back to the sphere. 10 * 4^s + 2 vertices.
inline TriangleMesh generate_icosphere(int subdivisions) {
    if (subdivisions < 0) throw std::invalid_argument("generate_icosphere: subdivisions must be >= 0");
    if (subdivisions > 8) throw std::invalid_argument("generate_icosphere: subdivisions must be <= 8");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const double inv = 1.0 / std::sqrt(1.0 + phi * phi);
    TriangleMesh mesh;
    for (auto [x, y] : {std::pair{-1.0, phi}, {1.0, phi}, {-1.0, -phi}, {1.0, -phi}})
        mesh.vertices.push_back({x * inv, y * inv, 0.0});
    for (auto [y, z] : {std::pair{-1.0, phi}, {1.0, phi}, {-1.0, -phi}, {1.0, -phi}})
        mesh.vertices.push_back({0.0, y * inv, z * inv});
    for (auto [x, z] : {std::pair{phi, -1.0}, {phi, 1.0}, {-phi, -1.0}, {-phi, 1.0}})
        mesh.vertices.push_back({x * inv, 0.0, z * inv});
    mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                  {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                  {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 p = mesh.vertices[key.first] + mesh.vertices[key.second];
            p = (1.0 / norm(p)) * p;
            const int idx = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(p);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(mesh.faces.size() * 4);
        for (const auto& f : mesh.faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(next);
    }
    return mesh;
}

struct GeneratedShape {
    PointCloud cloud;
    std::optional<TriangleMesh> mesh;
};

inline GeneratedShape generate(const ShapeSpec& spec) {
    switch (spec.kind) {
    case ShapeKind::Sphere:
        return {generate_sphere(spec.density), std::nullopt};
    case ShapeKind::Ellipsoid:
        return {generate_ellipsoid(spec.a, spec.b, spec.c, spec.density), std::nullopt};
    case ShapeKind::Cone:
        return {generate_cone(spec.h, spec.density), generate_cone_mesh(spec.h, spec.density)};
    case ShapeKind::Cube:
        return {generate_cube(spec.density), std::nullopt};
    case ShapeKind::Tetrahedron3: {
        auto t = generate_tetrahedron(3, spec.density);
        return {std::move(t.cloud), std::move(t.mesh)};
    }
    case ShapeKind::Tetrahedron4: {
        auto t = generate_tetrahedron(4, spec.density);
        return {std::move(t.cloud), std::move(t.mesh)};
    }
    case ShapeKind::Torus:
        return {generate_torus(spec.R, spec.rho, spec.density), std::nullopt};
    case ShapeKind::Icosphere: {
        TriangleMesh mesh = generate_icosphere(spec.density);
        PointCloud cloud;
        cloud.points = mesh.vertices;
        return {std::move(cloud), std::move(mesh)};
    }
    }
    throw std::invalid_argument("generate: unknown shape kind");
}

} // namespace latspec
