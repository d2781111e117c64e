#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "latspec/errors.hpp"
#include "latspec/geometry.hpp"

namespace latspec {

enum class CloudFormat { Xyz, PlyAscii };
enum class MeshFormat { Off, Obj };

namespace detail {

// %.17g: shortest decimal that round-trips every double exactly.
inline std::string full_precision(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline bool parse_double(std::string_view tok, double& out) {
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
    return out;
}

} // namespace detail

inline CloudFormat cloud_format_from_path(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ply") == 0)
        return CloudFormat::PlyAscii;
    return CloudFormat::Xyz;
}

inline MeshFormat mesh_format_from_path(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".obj") == 0) return MeshFormat::Obj;
    return MeshFormat::Off;
}

// --- point clouds ------------------------------------------------------------

inline PointCloud load_cloud_xyz(const std::string& path) {
    auto in = detail::open_input(path);
    PointCloud cloud;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = line;
        if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        auto toks = detail::split_ws(sv);
        if (toks.empty()) continue;
        if (toks.size() != 3)
            throw ParseError(path, lineno,
                             "expected 3 coordinates, got " + std::to_string(toks.size()));
        Vec3 p;
        if (!detail::parse_double(toks[0], p.x) || !detail::parse_double(toks[1], p.y) ||
            !detail::parse_double(toks[2], p.z))
            throw ParseError(path, lineno, "malformed coordinate");
        cloud.points.push_back(p);
    }
    if (cloud.empty()) throw InvalidInput("'" + path + "' contains no points");
    return cloud;
}

inline void save_cloud_xyz(const PointCloud& cloud, const std::string& path) {
    auto out = detail::open_output(path);
    for (const Vec3& p : cloud.points)
        out << detail::full_precision(p.x) << ' ' << detail::full_precision(p.y) << ' '
            << detail::full_precision(p.z) << '\n';
}

namespace detail {

struct PlyHeader {
    long vertex_count = -1;
    std::vector<std::string> vertex_properties;
    long header_lines = 0;
};

inline PlyHeader parse_ply_header(std::ifstream& in, const std::string& path) {
    PlyHeader h;
    std::string line;
    long lineno = 0;
    bool in_vertex = false, ended = false;
    if (!std::getline(in, line)) throw InvalidInput("'" + path + "' is empty");
    ++lineno;
    if (split_ws(line).empty() || split_ws(line)[0] != "ply")
        throw ParseError(path, 1, "missing 'ply' magic");
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "comment") continue;
        if (toks[0] == "format") {
            if (toks.size() < 2 || toks[1] != "ascii")
                throw ParseError(path, lineno, "only ascii ply is supported");
        } else if (toks[0] == "element") {
            if (toks.size() != 3) throw ParseError(path, lineno, "malformed element line");
            in_vertex = (toks[1] == "vertex");
            if (in_vertex) h.vertex_count = std::stol(std::string(toks[2]));
        } else if (toks[0] == "property") {
            if (in_vertex) {
                if (toks.size() < 3) throw ParseError(path, lineno, "malformed property line");
                h.vertex_properties.emplace_back(toks.back());
            }
        } else if (toks[0] == "end_header") {
            ended = true;
            break;
        }
    }
    if (!ended) throw ParseError(path, lineno, "missing end_header");
    if (h.vertex_count < 0) throw ParseError(path, lineno, "missing vertex element");
    h.header_lines = lineno;
    return h;
}

} // namespace detail

inline PointCloud load_cloud_ply(const std::string& path) {
    auto in = detail::open_input(path);
    auto header = detail::parse_ply_header(in, path);
    if (header.vertex_count == 0) throw InvalidInput("'" + path + "' declares an empty cloud");
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < header.vertex_properties.size(); ++i) {
        if (header.vertex_properties[i] == "x") ix = static_cast<int>(i);
        if (header.vertex_properties[i] == "y") iy = static_cast<int>(i);
        if (header.vertex_properties[i] == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0)
        throw ParseError(path, header.header_lines, "vertex element lacks x/y/z properties");
    PointCloud cloud;
    cloud.points.reserve(header.vertex_count);
    std::string line;
    long lineno = header.header_lines;
    for (long v = 0; v < header.vertex_count; ++v) {
        if (!std::getline(in, line))
            throw ParseError(path, lineno, "unexpected end of file in vertex list");
        ++lineno;
        auto toks = detail::split_ws(line);
        if (static_cast<long>(toks.size()) < static_cast<long>(header.vertex_properties.size()))
            throw ParseError(path, lineno, "vertex line has too few fields");
        Vec3 p;
        if (!detail::parse_double(toks[ix], p.x) || !detail::parse_double(toks[iy], p.y) ||
            !detail::parse_double(toks[iz], p.z))
            throw ParseError(path, lineno, "malformed vertex coordinate");
        cloud.points.push_back(p);
    }
    return cloud;
}

/// Writes vertices with an optional per-vertex scalar stored as the standard
/// "quality" property (used for eigenfunction fields).
inline void save_cloud_ply(const PointCloud& cloud, const std::string& path,
                           const std::vector<double>* quality = nullptr) {
    if (quality && quality->size() != cloud.size())
        throw std::invalid_argument("save_cloud_ply: quality size mismatch");
    auto out = detail::open_output(path);
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n'
        << "property double x\nproperty double y\nproperty double z\n";
    if (quality) out << "property double quality\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        out << detail::full_precision(p.x) << ' ' << detail::full_precision(p.y) << ' '
            << detail::full_precision(p.z);
        if (quality) out << ' ' << detail::full_precision((*quality)[i]);
        out << '\n';
    }
}

inline PointCloud load_cloud(const std::string& path, CloudFormat format) {
    return format == CloudFormat::Xyz ? load_cloud_xyz(path) : load_cloud_ply(path);
}

inline void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
    if (format == CloudFormat::Xyz)
        save_cloud_xyz(cloud, path);
    else
        save_cloud_ply(cloud, path);
}

// --- triangle meshes ---------------------------------------------------------

namespace detail {

// Polygons with more than three vertices are fan-triangulated.
inline void push_face(TriangleMesh& mesh, const std::vector<int>& poly, const std::string& path,
                      long lineno, std::vector<std::string>* warnings) {
    if (poly.size() < 3) throw ParseError(path, lineno, "face with fewer than 3 vertices");
    const int nv = static_cast<int>(mesh.vertices.size());
    for (int idx : poly)
        if (idx < 0 || idx >= nv)
            throw ParseError(path, lineno, "face index " + std::to_string(idx) + " out of range");
    for (std::size_t i = 1; i + 1 < poly.size(); ++i)
        mesh.faces.push_back({poly[0], poly[i], poly[i + 1]});
    if (poly.size() > 3 && warnings)
        warnings->push_back(path + ":" + std::to_string(lineno) + ": " +
                            std::to_string(poly.size()) + "-gon fan-triangulated");
}

} // namespace detail

inline TriangleMesh load_mesh_off(const std::string& path,
                                  std::vector<std::string>* warnings = nullptr) {
    auto in = detail::open_input(path);
    std::string line;
    long lineno = 0;
    auto next_content = [&]() -> std::vector<std::string_view> {
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view sv = line;
            if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
            auto toks = detail::split_ws(sv);
            if (!toks.empty()) return toks;
        }
        return {};
    };
    auto first = next_content();
    if (first.empty() || first[0] != "OFF") throw ParseError(path, std::max(lineno, 1L), "missing OFF magic");
    auto counts = next_content();
    if (counts.size() < 2) throw ParseError(path, lineno, "missing vertex/face counts");
    long nv = std::stol(std::string(counts[0])), nf = std::stol(std::string(counts[1]));
    if (nv <= 0) throw InvalidInput("'" + path + "' declares no vertices");
    TriangleMesh mesh;
    mesh.vertices.reserve(nv);
    for (long v = 0; v < nv; ++v) {
        auto toks = next_content();
        if (toks.size() < 3) throw ParseError(path, lineno, "malformed vertex line");
        Vec3 p;
        if (!detail::parse_double(toks[0], p.x) || !detail::parse_double(toks[1], p.y) ||
            !detail::parse_double(toks[2], p.z))
            throw ParseError(path, lineno, "malformed vertex coordinate");
        mesh.vertices.push_back(p);
    }
    for (long f = 0; f < nf; ++f) {
        auto toks = next_content();
        if (toks.empty()) throw ParseError(path, lineno, "unexpected end of file in face list");
        long k = std::stol(std::string(toks[0]));
        if (static_cast<long>(toks.size()) < k + 1)
            throw ParseError(path, lineno, "face line has too few indices");
        std::vector<int> poly(k);
        for (long i = 0; i < k; ++i) poly[i] = std::stoi(std::string(toks[i + 1]));
        detail::push_face(mesh, poly, path, lineno, warnings);
    }
    validate_mesh(mesh);
    return mesh;
}

inline void save_mesh_off(const TriangleMesh& mesh, const std::string& path) {
    auto out = detail::open_output(path);
    out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
    for (const Vec3& p : mesh.vertices)
        out << detail::full_precision(p.x) << ' ' << detail::full_precision(p.y) << ' '
            << detail::full_precision(p.z) << '\n';
    for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline TriangleMesh load_mesh_obj(const std::string& path,
                                  std::vector<std::string>* warnings = nullptr) {
    auto in = detail::open_input(path);
    TriangleMesh mesh;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks[0] == "v") {
            if (toks.size() < 4) throw ParseError(path, lineno, "malformed vertex line");
            Vec3 p;
            if (!detail::parse_double(toks[1], p.x) || !detail::parse_double(toks[2], p.y) ||
                !detail::parse_double(toks[3], p.z))
                throw ParseError(path, lineno, "malformed vertex coordinate");
            mesh.vertices.push_back(p);
        } else if (toks[0] == "f") {
            std::vector<int> poly;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                std::string_view tok = toks[i];
                if (auto slash = tok.find('/'); slash != std::string_view::npos)
                    tok = tok.substr(0, slash);
                int idx = 0;
                auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
                if (ec != std::errc{} || ptr != tok.data() + tok.size() || idx == 0)
                    throw ParseError(path, lineno, "malformed face index");
                poly.push_back(idx > 0 ? idx - 1 : static_cast<int>(mesh.vertices.size()) + idx);
            }
            detail::push_face(mesh, poly, path, lineno, warnings);
        } // other records (vn, vt, usemtl, ...) are ignored
    }
    if (mesh.vertices.empty()) throw InvalidInput("'" + path + "' contains no vertices");
    validate_mesh(mesh);
    return mesh;
}

inline void save_mesh_obj(const TriangleMesh& mesh, const std::string& path) {
    auto out = detail::open_output(path);
    for (const Vec3& p : mesh.vertices)
        out << "v " << detail::full_precision(p.x) << ' ' << detail::full_precision(p.y) << ' '
            << detail::full_precision(p.z) << '\n';
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline TriangleMesh load_mesh(const std::string& path, MeshFormat format,
                              std::vector<std::string>* warnings = nullptr) {
    return format == MeshFormat::Off ? load_mesh_off(path, warnings)
                                     : load_mesh_obj(path, warnings);
}

inline void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format) {
    if (format == MeshFormat::Off)
        save_mesh_off(mesh, path);
    else
        save_mesh_obj(mesh, path);
}

} // namespace latspec
