#pragma once

#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latspec/errors.hpp"
#include "latspec/geometry.hpp"
#include "latspec/io.hpp"
#include "latspec/lattice.hpp"

namespace latspec {

struct OperatorEntry {
    std::int64_t row;
    std::int64_t col;
    double value;
};

/// Symmetric sparse matrix in CSR form with columns sorted within each row.
/// Both triangles are stored, duplicates merged, exact zeros dropped.
class SparseSymmetricOperator {
public:
    SparseSymmetricOperator() = default;

    static SparseSymmetricOperator from_triplets(std::int64_t dim,
                                                 std::vector<OperatorEntry> entries) {
        if (dim < 0) throw std::invalid_argument("operator dimension must be non-negative");
        for (const auto& e : entries)
            if (e.row < 0 || e.row >= dim || e.col < 0 || e.col >= dim)
                throw std::invalid_argument("operator entry index out of range");
        std::sort(entries.begin(), entries.end(), [](const OperatorEntry& a, const OperatorEntry& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        SparseSymmetricOperator op;
        op.dim_ = dim;
        op.row_ptr_.assign(dim + 1, 0);
        std::size_t i = 0;
        while (i < entries.size()) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < entries.size() && entries[j].row == entries[i].row &&
                   entries[j].col == entries[i].col)
                sum += entries[j++].value;
            if (sum != 0.0) {
                op.col_.push_back(static_cast<std::int32_t>(entries[i].col));
                op.val_.push_back(sum);
                ++op.row_ptr_[entries[i].row + 1];
            }
            i = j;
        }
        for (std::int64_t r = 0; r < dim; ++r) op.row_ptr_[r + 1] += op.row_ptr_[r];
        op.check_symmetry();
        return op;
    }

    static SparseSymmetricOperator diagonal_matrix(std::vector<double> diag) {
        SparseSymmetricOperator op;
        op.dim_ = static_cast<std::int64_t>(diag.size());
        op.row_ptr_.resize(diag.size() + 1);
        op.col_.resize(diag.size());
        op.val_ = std::move(diag);
        for (std::size_t i = 0; i <= op.val_.size(); ++i) op.row_ptr_[i] = i;
        for (std::size_t i = 0; i < op.val_.size(); ++i) op.col_[i] = static_cast<std::int32_t>(i);
        return op;
    }

    std::int64_t dim() const { return dim_; }
    std::int64_t nonzeros() const { return static_cast<std::int64_t>(val_.size()); }

    double entry(std::int64_t row, std::int64_t col) const {
        for (std::int64_t p = row_ptr_[row]; p < row_ptr_[row + 1]; ++p)
            if (col_[p] == col) return val_[p];
        return 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(dim_, 0.0);
        for (std::int64_t r = 0; r < dim_; ++r) d[r] = entry(r, r);
        return d;
    }

    /// Mat-vec with a fixed summation order (ascending column within row).
    void apply(const double* x, double* y) const {
        for (std::int64_t r = 0; r < dim_; ++r) {
            double acc = 0.0;
            for (std::int64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
                acc += val_[p] * x[col_[p]];
            y[r] = acc;
        }
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        if (static_cast<std::int64_t>(x.size()) != dim_)
            throw std::invalid_argument("apply: vector length " + std::to_string(x.size()) +
                                        " does not match operator dimension " + std::to_string(dim_));
        std::vector<double> y(dim_, 0.0);
        apply(x.data(), y.data());
        return y;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        if (x.size() != dim_) throw std::invalid_argument("apply: dimension mismatch");
        Eigen::VectorXd y(dim_);
        apply(x.data(), y.data());
        return y;
    }

    Eigen::SparseMatrix<double> to_eigen() const {
        Eigen::SparseMatrix<double> m(dim_, dim_);
        Eigen::VectorXi counts(dim_);
        for (std::int64_t r = 0; r < dim_; ++r)
            counts[r] = static_cast<int>(row_ptr_[r + 1] - row_ptr_[r]);
        m.reserve(counts);
        for (std::int64_t r = 0; r < dim_; ++r)
            for (std::int64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
                m.insert(col_[p], r) = val_[p]; // symmetric, so transposed fill is fine
        m.makeCompressed();
        return m;
    }

    template <typename Fn> void for_each_entry(Fn&& fn) const {
        for (std::int64_t r = 0; r < dim_; ++r)
            for (std::int64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
                fn(r, static_cast<std::int64_t>(col_[p]), val_[p]);
    }

    const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::int32_t>& cols() const { return col_; }
    const std::vector<double>& values() const { return val_; }

private:
    void check_symmetry() const {
        for (std::int64_t r = 0; r < dim_; ++r)
            for (std::int64_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
                if (col_[p] == r) continue;
                if (entry(col_[p], r) != val_[p])
                    throw std::invalid_argument("operator entries are not symmetric at (" +
                                                std::to_string(r) + "," + std::to_string(col_[p]) +
                                                ")");
            }
    }

    std::int64_t dim_ = 0;
    std::vector<std::int64_t> row_ptr_{0};
    std::vector<std::int32_t> col_;
    std::vector<double> val_;
};

/// A stiffness/mass pair plus the normalization applied to reported
/// eigenvalues: lambda_report = sign * scale * lambda_matrix. For lattice
/// operators scale = n^2 (grid-spacing scaling of the 7-point stencil) and
/// there is no mass matrix. `grid_hint` carries lattice coordinates per row
/// when the operator came from a lattice; large solves use it to coarsen.
struct ScaledOperatorPair {
    SparseSymmetricOperator stiffness;
    std::optional<SparseSymmetricOperator> mass;
    double scale = 1.0;
    int sign = -1;
    std::vector<std::array<int, 3>> grid_hint;
};

/// L = deg - adjacency on the lattice graph, reported spectrum scaled by n^2.
inline ScaledOperatorPair graph_laplacian(const LatticeGraph& graph) {
    const std::int64_t dim = static_cast<std::int64_t>(graph.verts.size());
    std::vector<OperatorEntry> entries;
    entries.reserve(graph.edges.size() * 2 + dim);
    std::vector<double> degree(dim, 0.0);
    for (const auto& [u, v] : graph.edges) {
        entries.push_back({u, v, -1.0});
        entries.push_back({v, u, -1.0});
        degree[u] += 1.0;
        degree[v] += 1.0;
    }
    for (std::int64_t i = 0; i < dim; ++i)
        if (degree[i] != 0.0) entries.push_back({i, i, degree[i]});
    ScaledOperatorPair pair;
    pair.stiffness = SparseSymmetricOperator::from_triplets(dim, std::move(entries));
    pair.scale = static_cast<double>(graph.n) * graph.n;
    pair.grid_hint = graph.verts;
    return pair;
}

/// Cotangent stiffness with the 1/2 assembly factor and barycentric lumped
/// mass (one third of incident triangle area per vertex). Boundary edges get
/// the single available cotangent; no boundary rows are modified (natural
/// conditions). Diagonal entries are assembled as the exact negative of each
/// row's off-diagonal sum.
inline ScaledOperatorPair cotangent_laplacian(const TriangleMesh& mesh) {
    validate_mesh(mesh);
    const std::int64_t dim = static_cast<std::int64_t>(mesh.vertices.size());
    std::vector<OperatorEntry> off;
    off.reserve(mesh.faces.size() * 6);
    std::vector<double> mass(dim, 0.0);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        const Vec3 p[3] = {mesh.vertices[face[0]], mesh.vertices[face[1]], mesh.vertices[face[2]]};
        const double area = triangle_area(p[0], p[1], p[2]);
        for (int corner = 0; corner < 3; ++corner) {
            const Vec3 u = p[(corner + 1) % 3] - p[corner];
            const Vec3 v = p[(corner + 2) % 3] - p[corner];
            const double cross_norm = norm(cross(u, v));
            if (!(cross_norm > 1e-12 * std::max(norm2(u), norm2(v))))
                throw InvalidInput("face " + std::to_string(f) +
                                   " is degenerate (collinear vertices)");
            const double half_cot = 0.5 * dot(u, v) / cross_norm;
            const std::int64_t a = face[(corner + 1) % 3], b = face[(corner + 2) % 3];
            off.push_back({a, b, -half_cot});
            off.push_back({b, a, -half_cot});
            mass[face[corner]] += area / 3.0;
        }
    }
    SparseSymmetricOperator offdiag = SparseSymmetricOperator::from_triplets(dim, std::move(off));
    std::vector<OperatorEntry> entries;
    entries.reserve(offdiag.nonzeros() + dim);
    std::vector<double> row_sum(dim, 0.0);
    offdiag.for_each_entry([&](std::int64_t r, std::int64_t c, double v) {
        entries.push_back({r, c, v});
        row_sum[r] += v;
    });
    for (std::int64_t i = 0; i < dim; ++i)
        if (row_sum[i] != 0.0) entries.push_back({i, i, -row_sum[i]});
    ScaledOperatorPair pair;
    pair.stiffness = SparseSymmetricOperator::from_triplets(dim, std::move(entries));
    pair.mass = SparseSymmetricOperator::diagonal_matrix(std::move(mass));
    pair.scale = 1.0;
    return pair;
}

/// Matrix Market coordinate dump (lower triangle, 1-based) for cross-checks
/// with external tools.
inline void save_matrix_market(const SparseSymmetricOperator& op, const std::string& path) {
    auto out = detail::open_output(path);
    std::int64_t lower = 0;
    op.for_each_entry([&](std::int64_t r, std::int64_t c, double) {
        if (r >= c) ++lower;
    });
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << op.dim() << ' ' << op.dim() << ' ' << lower << '\n';
    op.for_each_entry([&](std::int64_t r, std::int64_t c, double v) {
        if (r >= c) out << r + 1 << ' ' << c + 1 << ' ' << detail::full_precision(v) << '\n';
    });
}

} // namespace latspec
