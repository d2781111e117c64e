#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "latspec/eigensolve.hpp"
#include "latspec/geometry.hpp"
#include "latspec/lattice.hpp"
#include "latspec/operators.hpp"

namespace latspec {

enum class Algorithm { MeshCotangent, MeshLattice, CloudLattice };

inline std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::MeshCotangent: return "mesh-cotangent";
    case Algorithm::MeshLattice: return "mesh-lattice";
    case Algorithm::CloudLattice: return "cloud-lattice";
    }
    return "?";
}

inline Algorithm algorithm_from_string(const std::string& name) {
    if (name == "mesh-cotangent") return Algorithm::MeshCotangent;
    if (name == "mesh-lattice") return Algorithm::MeshLattice;
    if (name == "cloud-lattice") return Algorithm::CloudLattice;
    throw std::invalid_argument("unknown algorithm '" + name +
                                "' (expected mesh-cotangent, mesh-lattice, or cloud-lattice)");
}

struct PipelineResult {
    SpectrumResult spectrum;
    std::optional<LatticeStats> lattice_stats;
    std::optional<LatticeGraph> lattice; // kept for eigenfunction export
};

/// End-to-end run of one algorithm: build the operator from the cloud or
/// mesh, solve for the k smallest nonzero eigenpairs, and record pipeline
/// timings (operator assembly included) in the result meta.
inline PipelineResult run_pipeline(const PointCloud* cloud, const TriangleMesh* mesh,
                                   Algorithm algorithm, double r, int n, int k, double tol,
                                   bool want_vectors = false,
                                   const std::string& shape_desc = "") {
    detail::CpuWallTimer timer;
    PipelineResult out;
    ScaledOperatorPair pair;
    switch (algorithm) {
    case Algorithm::MeshCotangent: {
        if (!mesh) throw std::invalid_argument("mesh-cotangent requires a triangle mesh input");
        pair = cotangent_laplacian(*mesh);
        break;
    }
    case Algorithm::MeshLattice: {
        if (!mesh) throw std::invalid_argument("mesh-lattice requires a triangle mesh input");
        out.lattice = voxelize_mesh(*mesh, r, n);
        pair = graph_laplacian(*out.lattice);
        break;
    }
    case Algorithm::CloudLattice: {
        if (!cloud) throw std::invalid_argument("cloud-lattice requires a point cloud input");
        out.lattice = voxelize_cloud(*cloud, r, n);
        pair = graph_laplacian(*out.lattice);
        break;
    }
    }
    if (out.lattice) out.lattice_stats = lattice_stats(*out.lattice);
    out.spectrum = smallest_nonzero(pair, k, tol, want_vectors);
    out.spectrum.meta.shape = shape_desc;
    out.spectrum.meta.r = (algorithm == Algorithm::MeshCotangent) ? 0.0 : r;
    out.spectrum.meta.n = (algorithm == Algorithm::MeshCotangent) ? 0 : n;
    out.spectrum.meta.algorithm = to_string(algorithm) + "/" + out.spectrum.meta.algorithm;
    out.spectrum.meta.elapsed_seconds = timer.elapsed();
    out.spectrum.meta.cpu_seconds = timer.cpu();
    return out;
}

} // namespace latspec
