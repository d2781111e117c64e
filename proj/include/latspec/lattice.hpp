#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "latspec/errors.hpp"
#include "latspec/geometry.hpp"
#include "latspec/io.hpp"
#include "latspec/point_triangle.hpp"

namespace latspec {

/// Cubic-lattice graph on a subset of (Z/n)^3: vertex (i, j, k) sits at
/// (i/n, j/n, k/n) and edges join face neighbors (6-connectivity). Vertices
/// are sorted lexicographically; edges are stored once with u < v.
struct LatticeGraph {
    int n = 1;
    double r = 0.0;
    std::vector<std::array<int, 3>> verts;
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;

    Vec3 position(std::size_t idx) const {
        const auto& v = verts[idx];
        return {static_cast<double>(v[0]) / n, static_cast<double>(v[1]) / n,
                static_cast<double>(v[2]) / n};
    }
};

inline constexpr std::uint64_t kDefaultLatticeVertexCap = 50'000'000;

/// Vertex cap for the voxelizers: SPECTRAL_LATTICE_MAX_VERTS overrides the
/// built-in default.
inline std::uint64_t lattice_vertex_cap() {
    if (const char* env = std::getenv("SPECTRAL_LATTICE_MAX_VERTS")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return kDefaultLatticeVertexCap;
}

namespace detail {

// Lattice indices packed into 21 bits per axis (offset binary), so packed
// order equals lexicographic order on (i, j, k).
inline constexpr std::int64_t kPackBias = 1 << 20;

inline std::uint64_t pack_site(int i, int j, int k) {
    const std::int64_t bi = i + kPackBias, bj = j + kPackBias, bk = k + kPackBias;
    if ((bi | bj | bk) < 0 || bi >= (1 << 21) || bj >= (1 << 21) || bk >= (1 << 21))
        throw ResourceLimitError("lattice index out of packable range (|index| >= 2^20)");
    return (static_cast<std::uint64_t>(bi) << 42) | (static_cast<std::uint64_t>(bj) << 21) |
           static_cast<std::uint64_t>(bk);
}

inline std::array<int, 3> unpack_site(std::uint64_t key) {
    return {static_cast<int>(static_cast<std::int64_t>((key >> 42) & 0x1fffff) - kPackBias),
            static_cast<int>(static_cast<std::int64_t>((key >> 21) & 0x1fffff) - kPackBias),
            static_cast<int>(static_cast<std::int64_t>(key & 0x1fffff) - kPackBias)};
}

// The membership test shared by the accelerated voxelizers and the
// brute-force oracle: both sides must make tie decisions identically.
inline double dist2_site_point(int i, int j, int k, int n, Vec3 p) {
    const double dx = static_cast<double>(i) / n - p.x;
    const double dy = static_cast<double>(j) / n - p.y;
    const double dz = static_cast<double>(k) / n - p.z;
    return dx * dx + dy * dy + dz * dz;
}

struct IndexBox {
    int lo[3], hi[3]; // inclusive

    static IndexBox around(Vec3 lo_pt, Vec3 hi_pt, int n) {
        IndexBox b;
        const double lo_arr[3] = {lo_pt.x, lo_pt.y, lo_pt.z};
        const double hi_arr[3] = {hi_pt.x, hi_pt.y, hi_pt.z};
        for (int c = 0; c < 3; ++c) {
            b.lo[c] = static_cast<int>(std::ceil(lo_arr[c] * n));
            b.hi[c] = static_cast<int>(std::floor(hi_arr[c] * n));
        }
        return b;
    }

    std::uint64_t count() const {
        std::uint64_t total = 1;
        for (int c = 0; c < 3; ++c) {
            if (hi[c] < lo[c]) return 0;
            total *= static_cast<std::uint64_t>(hi[c] - lo[c] + 1);
        }
        return total;
    }

    void merge(const IndexBox& o) {
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], o.lo[c]);
            hi[c] = std::max(hi[c], o.hi[c]);
        }
    }
};

inline LatticeGraph finalize_lattice(std::vector<std::uint64_t>& keys, double r, int n) {
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    LatticeGraph graph;
    graph.n = n;
    graph.r = r;
    graph.verts.reserve(keys.size());
    for (std::uint64_t key : keys) graph.verts.push_back(unpack_site(key));
    const std::uint64_t step_i = 1ull << 42, step_j = 1ull << 21, step_k = 1;
    for (std::size_t idx = 0; idx < keys.size(); ++idx)
        for (std::uint64_t step : {step_k, step_j, step_i}) {
            const std::uint64_t nb = keys[idx] + step;
            auto it = std::lower_bound(keys.begin() + idx + 1, keys.end(), nb);
            if (it != keys.end() && *it == nb)
                graph.edges.emplace_back(static_cast<std::int64_t>(idx), it - keys.begin());
        }
    std::sort(graph.edges.begin(), graph.edges.end());
    return graph;
}

inline void enforce_vertex_cap(std::uint64_t estimate) {
    const std::uint64_t cap = lattice_vertex_cap();
    if (estimate > cap)
        throw ResourceLimitError("estimated lattice vertex count " + std::to_string(estimate) +
                                 " exceeds cap " + std::to_string(cap) +
                                 " (set SPECTRAL_LATTICE_MAX_VERTS to override)");
}

} // namespace detail

/// Lattice approximation of the closed r-neighborhood of a point cloud:
/// every site of (Z/n)^3 within Euclidean distance <= r of some cloud point.
inline LatticeGraph voxelize_cloud(const PointCloud& cloud, double r, int n) {
    if (cloud.empty()) throw std::invalid_argument("voxelize_cloud: cloud is empty");
    validate_cloud(cloud);
    if (!(r > 0.0)) throw std::invalid_argument("voxelize_cloud: r must be positive");
    if (n < 1) throw std::invalid_argument("voxelize_cloud: n must be >= 1");

    const Vec3 rr{r, r, r};
    std::uint64_t per_point_total = 0;
    detail::IndexBox aabb = detail::IndexBox::around(cloud.points[0] - rr, cloud.points[0] + rr, n);
    for (const Vec3& p : cloud.points) {
        const auto box = detail::IndexBox::around(p - rr, p + rr, n);
        per_point_total += box.count();
        aabb.merge(box);
    }
    detail::enforce_vertex_cap(std::min(per_point_total, aabb.count()));

    const double r2 = r * r;
    std::vector<std::uint64_t> keys;
    for (const Vec3& p : cloud.points) {
        const auto box = detail::IndexBox::around(p - rr, p + rr, n);
        for (int i = box.lo[0]; i <= box.hi[0]; ++i)
            for (int j = box.lo[1]; j <= box.hi[1]; ++j)
                for (int k = box.lo[2]; k <= box.hi[2]; ++k)
                    if (detail::dist2_site_point(i, j, k, n, p) <= r2)
                        keys.push_back(detail::pack_site(i, j, k));
    }
    return detail::finalize_lattice(keys, r, n);
}

/// As voxelize_cloud, with exact point-to-triangle distances to the mesh
/// surface (face interior, edge, and vertex cases all handled).
inline LatticeGraph voxelize_mesh(const TriangleMesh& mesh, double r, int n) {
    validate_mesh(mesh);
    if (!(r > 0.0)) throw std::invalid_argument("voxelize_mesh: r must be positive");
    if (n < 1) throw std::invalid_argument("voxelize_mesh: n must be >= 1");

    const Vec3 rr{r, r, r};
    auto face_box = [&](const std::array<int, 3>& f) {
        const Vec3 a = mesh.vertices[f[0]], b = mesh.vertices[f[1]], c = mesh.vertices[f[2]];
        const Vec3 lo{std::min({a.x, b.x, c.x}), std::min({a.y, b.y, c.y}),
                      std::min({a.z, b.z, c.z})};
        const Vec3 hi{std::max({a.x, b.x, c.x}), std::max({a.y, b.y, c.y}),
                      std::max({a.z, b.z, c.z})};
        return detail::IndexBox::around(lo - rr, hi + rr, n);
    };

    std::uint64_t per_face_total = 0;
    detail::IndexBox aabb = face_box(mesh.faces[0]);
    for (const auto& f : mesh.faces) {
        const auto box = face_box(f);
        per_face_total += box.count();
        aabb.merge(box);
    }
    detail::enforce_vertex_cap(std::min(per_face_total, aabb.count()));

    const double r2 = r * r;
    std::vector<std::uint64_t> keys;
    for (const auto& f : mesh.faces) {
        const Vec3 a = mesh.vertices[f[0]], b = mesh.vertices[f[1]], c = mesh.vertices[f[2]];
        const auto box = face_box(f);
        for (int i = box.lo[0]; i <= box.hi[0]; ++i)
            for (int j = box.lo[1]; j <= box.hi[1]; ++j)
                for (int k = box.lo[2]; k <= box.hi[2]; ++k) {
                    const Vec3 q{static_cast<double>(i) / n, static_cast<double>(j) / n,
                                 static_cast<double>(k) / n};
                    if (dist2_point_triangle(q, a, b, c) <= r2)
                        keys.push_back(detail::pack_site(i, j, k));
                }
    }
    return detail::finalize_lattice(keys, r, n);
}

struct LatticeStats {
    std::size_t vertex_count = 0;
    std::size_t edge_count = 0;
    std::size_t component_count = 0;
    std::array<std::size_t, 7> degree_histogram{}; // degree 0..6
};

namespace detail {

struct UnionFind {
    std::vector<std::int64_t> parent;

    explicit UnionFind(std::size_t size) : parent(size) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::int64_t find(std::int64_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::int64_t a, std::int64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    }
};

} // namespace detail

inline LatticeStats lattice_stats(const LatticeGraph& graph) {
    LatticeStats stats;
    stats.vertex_count = graph.verts.size();
    stats.edge_count = graph.edges.size();
    std::vector<int> degree(graph.verts.size(), 0);
    detail::UnionFind uf(graph.verts.size());
    for (const auto& [u, v] : graph.edges) {
        ++degree[u];
        ++degree[v];
        uf.unite(u, v);
    }
    for (std::size_t i = 0; i < graph.verts.size(); ++i) {
        ++stats.degree_histogram[degree[i]];
        if (uf.find(static_cast<std::int64_t>(i)) == static_cast<std::int64_t>(i))
            ++stats.component_count;
    }
    return stats;
}

/// Vertex positions as a ply-ascii cloud, for visual inspection.
inline void save_lattice_ply(const LatticeGraph& graph, const std::string& path,
                             const std::vector<double>* quality = nullptr) {
    PointCloud cloud;
    cloud.points.reserve(graph.verts.size());
    for (std::size_t i = 0; i < graph.verts.size(); ++i) cloud.points.push_back(graph.position(i));
    save_cloud_ply(cloud, path, quality);
}

/// One "u v" vertex-index pair per line.
inline void save_lattice_adjacency(const LatticeGraph& graph, const std::string& path) {
    auto out = detail::open_output(path);
    for (const auto& [u, v] : graph.edges) out << u << ' ' << v << '\n';
}

} // namespace latspec
