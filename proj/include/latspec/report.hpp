#pragma once

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "latspec/analytic.hpp"
#include "latspec/eigensolve.hpp"
#include "latspec/io.hpp"
#include "latspec/lattice.hpp"
#include "latspec/pipeline.hpp"

namespace latspec {

inline nlohmann::json spectrum_to_json(const SpectrumResult& result,
                                       const LatticeStats* stats = nullptr,
                                       bool positive_sign = false) {
    nlohmann::json j;
    j["algorithm"] = result.meta.algorithm;
    if (!result.meta.shape.empty()) j["shape"] = result.meta.shape;
    j["r"] = result.meta.r;
    j["n"] = result.meta.n;
    j["k"] = result.meta.k;
    j["tol"] = result.meta.tol;
    j["kernel_dim"] = result.kernel_dim;
    std::vector<double> values = result.eigenvalues;
    if (positive_sign)
        for (double& v : values) v = -v;
    j["eigenvalues"] = values;
    j["residuals"] = result.residuals;
    if (stats) {
        j["lattice"] = {{"vertex_count", stats->vertex_count},
                        {"edge_count", stats->edge_count},
                        {"component_count", stats->component_count}};
    }
    j["timing"] = {{"elapsed_seconds", result.meta.elapsed_seconds},
                   {"cpu_seconds", result.meta.cpu_seconds},
                   {"inner_iterations", result.meta.inner_iterations}};
    return j;
}

inline void save_spectrum_json(const SpectrumResult& result, const std::string& path,
                               const LatticeStats* stats = nullptr, bool positive_sign = false) {
    auto out = detail::open_output(path);
    out << spectrum_to_json(result, stats, positive_sign).dump(2) << '\n';
}

/// Shared eigenvalue CSV schema used by both analytic and computed spectra.
inline constexpr const char* kEigenvalueCsvHeader = "eigenvalue,multiplicity,label";

inline void save_analytic_csv(const AnalyticSpectrum& spectrum, const std::string& path,
                              bool positive_sign = false) {
    auto out = detail::open_output(path);
    out << kEigenvalueCsvHeader << '\n';
    for (const auto& e : spectrum.entries)
        out << detail::full_precision(positive_sign ? -e.eigenvalue : e.eigenvalue) << ','
            << e.multiplicity << ',' << e.label << '\n';
}

inline void save_spectrum_csv(const SpectrumResult& result, const std::string& path,
                              bool positive_sign = false) {
    auto out = detail::open_output(path);
    out << kEigenvalueCsvHeader << '\n';
    for (double v : result.eigenvalues)
        out << detail::full_precision(positive_sign ? -v : v) << ",1,\n";
}

/// Reads eigenvalues (expanded by multiplicity) from either the JSON result
/// format or the shared CSV schema, by extension.
inline std::vector<double> load_eigenvalues(const std::string& path) {
    std::vector<double> values;
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        auto in = detail::open_input(path);
        nlohmann::json j;
        in >> j;
        if (!j.contains("eigenvalues"))
            throw InvalidInput("'" + path + "' has no eigenvalues field");
        for (const auto& v : j["eigenvalues"]) values.push_back(v.get<double>());
        return values;
    }
    auto in = detail::open_input(path);
    std::string line;
    long lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        std::string_view sv = line;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (start <= sv.size()) {
            auto comma = sv.find(',', start);
            if (comma == std::string_view::npos) {
                fields.emplace_back(sv.substr(start));
                break;
            }
            fields.emplace_back(sv.substr(start, comma - start));
            start = comma + 1;
        }
        if (!header_seen) {
            header_seen = true;
            if (!fields.empty() && fields[0] == "eigenvalue") continue; // header row
        }
        if (fields.empty() || fields[0].empty()) continue;
        double value = 0.0;
        if (!detail::parse_double(fields[0], value))
            throw ParseError(path, lineno, "malformed eigenvalue");
        long mult = 1;
        if (fields.size() > 1 && !fields[1].empty()) {
            try {
                mult = std::stol(fields[1]);
            } catch (...) {
                throw ParseError(path, lineno, "malformed multiplicity");
            }
            if (mult < 1) throw ParseError(path, lineno, "multiplicity must be >= 1");
        }
        for (long i = 0; i < mult; ++i) values.push_back(value);
    }
    if (values.empty()) throw InvalidInput("'" + path + "' contains no eigenvalues");
    return values;
}

struct ComparisonRow {
    double computed;
    double analytic;
    double rel_error;
    int multiplicity; // of the computed-side group this row belongs to
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    double max_rel_error = 0.0;
    std::optional<std::string> warning;
};

/// Pairs computed and analytic eigenvalues in |value|-ascending order;
/// mismatched lengths truncate to the shorter list with a warning.
inline ComparisonReport compare_spectra(std::vector<double> computed, std::vector<double> analytic,
                                        double group_reltol) {
    auto by_magnitude = [](double a, double b) { return std::abs(a) < std::abs(b); };
    std::sort(computed.begin(), computed.end(), by_magnitude);
    std::sort(analytic.begin(), analytic.end(), by_magnitude);
    ComparisonReport report;
    const std::size_t count = std::min(computed.size(), analytic.size());
    if (computed.size() != analytic.size())
        report.warning = "length mismatch: " + std::to_string(computed.size()) + " computed vs " +
                         std::to_string(analytic.size()) + " analytic; comparing first " +
                         std::to_string(count);
    SpectrumResult grouping;
    grouping.eigenvalues.assign(computed.begin(), computed.begin() + count);
    std::vector<int> group_mult(count, 1);
    std::size_t at = 0;
    for (const EigenGroup& g : eigengroups(grouping, group_reltol))
        for (int i = 0; i < g.multiplicity && at < count; ++i) group_mult[at++] = g.multiplicity;
    for (std::size_t i = 0; i < count; ++i) {
        ComparisonRow row{};
        row.computed = computed[i];
        row.analytic = analytic[i];
        row.rel_error = std::abs(computed[i] - analytic[i]) / std::abs(analytic[i]);
        row.multiplicity = group_mult[i];
        report.rows.push_back(row);
        report.max_rel_error = std::max(report.max_rel_error, row.rel_error);
    }
    return report;
}

inline void save_comparison_csv(const ComparisonReport& report, const std::string& path) {
    auto out = detail::open_output(path);
    out << "computed,analytic,rel_error,multiplicity\n";
    for (const auto& row : report.rows)
        out << detail::full_precision(row.computed) << ',' << detail::full_precision(row.analytic)
            << ',' << detail::full_precision(row.rel_error) << ',' << row.multiplicity << '\n';
}

struct SweepCell {
    double r = 0.0;
    int n = 0;
    std::string status = "ok"; // or "error: ..."
    std::optional<SpectrumResult> spectrum;
    std::optional<LatticeStats> stats;
};

inline std::string sweep_csv_header(int k) {
    std::string header = "shape,algorithm,r,n,k,status,vertex_count,edge_count,component_count,"
                         "elapsed_seconds,cpu_seconds";
    for (int i = 1; i <= k; ++i) header += ",ev_" + std::to_string(i);
    return header;
}

inline void save_sweep_csv(const std::vector<SweepCell>& cells, const std::string& shape,
                           const std::string& algorithm, int k, const std::string& path,
                           bool positive_sign = false) {
    auto out = detail::open_output(path);
    out << sweep_csv_header(k) << '\n';
    for (const SweepCell& cell : cells) {
        out << shape << ',' << algorithm << ',' << detail::full_precision(cell.r) << ',' << cell.n
            << ',' << k << ',';
        std::string status = cell.status;
        for (char& c : status)
            if (c == ',' || c == '\n') c = ';';
        out << status << ',';
        if (cell.stats)
            out << cell.stats->vertex_count << ',' << cell.stats->edge_count << ','
                << cell.stats->component_count;
        else
            out << ",,";
        if (cell.spectrum)
            out << ',' << detail::full_precision(cell.spectrum->meta.elapsed_seconds) << ','
                << detail::full_precision(cell.spectrum->meta.cpu_seconds);
        else
            out << ",,";
        for (int i = 0; i < k; ++i) {
            out << ',';
            if (cell.spectrum && i < static_cast<int>(cell.spectrum->eigenvalues.size())) {
                const double v = cell.spectrum->eigenvalues[i];
                out << detail::full_precision(positive_sign ? -v : v);
            }
        }
        out << '\n';
    }
}

/// One ply file per eigenvector, the field stored as the per-vertex
/// "quality" property on lattice sites or mesh vertices.
inline std::vector<std::string> export_eigenfunctions(const SpectrumResult& result,
                                                      const LatticeGraph* lattice,
                                                      const TriangleMesh* mesh,
                                                      const std::string& prefix) {
    std::vector<std::string> written;
    PointCloud positions;
    if (lattice) {
        positions.points.reserve(lattice->verts.size());
        for (std::size_t i = 0; i < lattice->verts.size(); ++i)
            positions.points.push_back(lattice->position(i));
    } else if (mesh) {
        positions.points = mesh->vertices;
    } else {
        throw std::invalid_argument("export_eigenfunctions: no geometry to attach fields to");
    }
    for (std::size_t i = 0; i < result.eigenvectors.size(); ++i) {
        const Eigen::VectorXd& v = result.eigenvectors[i];
        if (static_cast<std::size_t>(v.size()) != positions.size())
            throw std::invalid_argument("export_eigenfunctions: eigenvector length mismatch");
        std::vector<double> quality(v.data(), v.data() + v.size());
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "_%03zu.ply", i + 1);
        const std::string path = prefix + suffix;
        save_cloud_ply(positions, path, &quality);
        written.push_back(path);
    }
    return written;
}

} // namespace latspec
