#pragma once

#include <Eigen/CholmodSupport>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "latspec/errors.hpp"
#include "latspec/operators.hpp"

namespace latspec {

struct SpectrumMeta {
    std::string algorithm;
    std::string shape;
    double r = 0.0;
    int n = 0;
    int k = 0;
    double tol = 0.0;
    double elapsed_seconds = 0.0;
    double cpu_seconds = 0.0;
    long inner_iterations = 0;
};

/// Eigenvalues sorted by magnitude ascending, reported with the pair's scale
/// and sign (negative, the Laplace-Beltrami convention). Zero modes (one
/// constant per connected component) are deflated structurally and never
/// appear here.
struct SpectrumResult {
    std::vector<double> eigenvalues;
    std::vector<Eigen::VectorXd> eigenvectors;
    std::vector<double> residuals;
    std::int64_t kernel_dim = 0;
    SpectrumMeta meta;
};

struct EigenGroup {
    double value = 0.0;
    int multiplicity = 0;
};

/// Merge consecutive eigenvalues whose distance to the running group mean
/// stays within reltol (relative); reports (mean, count) per group.
inline std::vector<EigenGroup> eigengroups(const SpectrumResult& result, double reltol) {
    std::vector<EigenGroup> groups;
    for (double v : result.eigenvalues) {
        if (!groups.empty()) {
            EigenGroup& g = groups.back();
            if (std::abs(v - g.value) <= reltol * std::abs(g.value)) {
                g.value = (g.value * g.multiplicity + v) / (g.multiplicity + 1);
                ++g.multiplicity;
                continue;
            }
        }
        groups.push_back({v, 1});
    }
    return groups;
}

namespace detail {

struct CpuWallTimer {
    std::chrono::steady_clock::time_point wall_start = std::chrono::steady_clock::now();
    double cpu_start = cpu_seconds_now();

    static double cpu_seconds_now() {
        rusage usage{};
        getrusage(RUSAGE_SELF, &usage);
        auto to_sec = [](const timeval& tv) { return tv.tv_sec + tv.tv_usec * 1e-6; };
        return to_sec(usage.ru_utime) + to_sec(usage.ru_stime);
    }
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    }
    double cpu() const { return cpu_seconds_now() - cpu_start; }
};

/// Connected components of the off-diagonal sparsity pattern. The kernel of a
/// PSD row-sum-zero stiffness matrix is one constant per component, so this
/// count is the structural kernel dimension.
struct Components {
    std::vector<std::int64_t> id; // component id per row
    std::vector<double> mass;     // total mass per component
    std::int64_t count = 0;
};

inline Components stiffness_components(const SparseSymmetricOperator& stiffness,
                                       const std::vector<double>& mass_diag) {
    const std::int64_t dim = stiffness.dim();
    std::vector<std::int64_t> parent(dim);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::int64_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    stiffness.for_each_entry([&](std::int64_t r, std::int64_t c, double) {
        if (r == c) return;
        const std::int64_t ra = find(r), rb = find(c);
        if (ra != rb) parent[rb] = ra;
    });
    Components comps;
    comps.id.assign(dim, -1);
    for (std::int64_t i = 0; i < dim; ++i) {
        const std::int64_t root = find(i);
        if (comps.id[root] < 0) comps.id[root] = comps.count++;
        comps.id[i] = comps.id[root];
    }
    comps.mass.assign(comps.count, 0.0);
    for (std::int64_t i = 0; i < dim; ++i) comps.mass[comps.id[i]] += mass_diag[i];
    return comps;
}

/// Projects out the span of the per-component constants, expressed in the
/// M^(1/2)-transformed coordinates where they are exactly orthogonal.
struct KernelProjector {
    const Components* comps;
    const Eigen::VectorXd* msqrt;

    void project(Eigen::VectorXd& y) const {
        std::vector<double> acc(comps->count, 0.0);
        for (std::int64_t i = 0; i < y.size(); ++i) acc[comps->id[i]] += (*msqrt)[i] * y[i];
        for (std::int64_t c = 0; c < comps->count; ++c) acc[c] /= comps->mass[c];
        for (std::int64_t i = 0; i < y.size(); ++i) y[i] -= (*msqrt)[i] * acc[comps->id[i]];
    }
};

class InverseOperator {
public:
    virtual ~InverseOperator() = default;
    virtual Eigen::VectorXd solve(const Eigen::VectorXd& rhs) = 0;
    virtual std::string name() const = 0;
};

class CholmodInverse final : public InverseOperator {
public:
    explicit CholmodInverse(const Eigen::SparseMatrix<double>& A) { chol_.compute(A); }
    bool ok() const { return chol_.info() == Eigen::Success; }
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) override { return chol_.solve(rhs); }
    std::string name() const override { return "cholmod-supernodal"; }

private:
    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>> chol_;
};

class SimplicialInverse final : public InverseOperator {
public:
    explicit SimplicialInverse(const Eigen::SparseMatrix<double>& A) { ldlt_.compute(A); }
    bool ok() const { return ldlt_.info() == Eigen::Success; }
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) override { return ldlt_.solve(rhs); }
    std::string name() const override { return "simplicial-ldlt"; }

private:
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

// Aggregation hierarchy over lattice coordinates: each level merges 2x2x2
// index blocks with a piecewise-constant prolongation and a Galerkin coarse
// matrix. V-cycle-preconditioned CG stands in for the direct inverse when the
// factorization would not fit in memory.
class MultilevelInverse final : public InverseOperator {
public:
    MultilevelInverse(Eigen::SparseMatrix<double> A0, const std::vector<std::array<int, 3>>& coords,
                      std::int64_t coarse_target) {
        levels_.push_back({std::move(A0), {}, {}});
        std::vector<std::array<int, 3>> cur = coords;
        while (levels_.back().A.rows() > coarse_target) {
            Level& fine = levels_.back();
            std::unordered_map<std::uint64_t, std::int64_t> coarse_index;
            fine.coarse_id.resize(cur.size());
            std::vector<std::array<int, 3>> next;
            auto floordiv2 = [](int v) { return v >= 0 ? v / 2 : (v - 1) / 2; };
            for (std::size_t i = 0; i < cur.size(); ++i) {
                const std::array<int, 3> cc{floordiv2(cur[i][0]), floordiv2(cur[i][1]),
                                            floordiv2(cur[i][2])};
                const std::uint64_t key = pack_site(cc[0], cc[1], cc[2]);
                auto [it, inserted] = coarse_index.emplace(key, static_cast<std::int64_t>(next.size()));
                if (inserted) next.push_back(cc);
                fine.coarse_id[i] = it->second;
            }
            const std::int64_t nc = static_cast<std::int64_t>(next.size());
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(fine.A.nonZeros());
            for (int col = 0; col < fine.A.outerSize(); ++col)
                for (Eigen::SparseMatrix<double>::InnerIterator it(fine.A, col); it; ++it)
                    trips.emplace_back(static_cast<int>(fine.coarse_id[it.row()]),
                                       static_cast<int>(fine.coarse_id[col]), it.value());
            Eigen::SparseMatrix<double> Ac(nc, nc);
            Ac.setFromTriplets(trips.begin(), trips.end());
            levels_.push_back({std::move(Ac), {}, {}});
            cur = std::move(next);
        }
        for (Level& level : levels_) {
            level.inv_diag = level.A.diagonal().cwiseInverse();
            for (std::int64_t i = 0; i < level.inv_diag.size(); ++i)
                if (!std::isfinite(level.inv_diag[i])) level.inv_diag[i] = 0.0;
        }
        coarse_solver_.compute(levels_.back().A);
        if (coarse_solver_.info() != Eigen::Success)
            throw InternalConsistencyError("multilevel coarse factorization failed");
    }

    int last_solve_iterations() const { return last_iterations_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) override {
        // CG + V-cycle, converged tightly enough that the outer Lanczos sees
        // an effectively exact inverse.
        const double target = 1e-13 * rhs.norm();
        Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
        Eigen::VectorXd res = rhs;
        Eigen::VectorXd z = vcycle(0, res);
        Eigen::VectorXd p = z;
        double rz = res.dot(z);
        int it = 0;
        for (; it < 500 && res.norm() > target; ++it) {
            const Eigen::VectorXd Ap = apply_level(0, p);
            const double alpha = rz / p.dot(Ap);
            x += alpha * p;
            res -= alpha * Ap;
            z = vcycle(0, res);
            const double rz_next = res.dot(z);
            p = z + (rz_next / rz) * p;
            rz = rz_next;
        }
        last_iterations_ = it;
        return x;
    }

    std::string name() const override { return "multilevel-pcg"; }

private:
    struct Level {
        Eigen::SparseMatrix<double> A;
        std::vector<std::int64_t> coarse_id;
        Eigen::VectorXd inv_diag;
    };

    Eigen::VectorXd apply_level(std::size_t l, const Eigen::VectorXd& v) const {
        return levels_[l].A * v;
    }

    Eigen::VectorXd vcycle(std::size_t l, const Eigen::VectorXd& b) {
        if (l + 1 == levels_.size()) return coarse_solver_.solve(b);
        const Level& level = levels_[l];
        constexpr double omega = 0.7;
        Eigen::VectorXd x = omega * level.inv_diag.cwiseProduct(b);
        x += omega * level.inv_diag.cwiseProduct(b - apply_level(l, x));
        Eigen::VectorXd res = b - apply_level(l, x);
        Eigen::VectorXd rc = Eigen::VectorXd::Zero(levels_[l + 1].A.rows());
        for (std::int64_t i = 0; i < res.size(); ++i) rc[level.coarse_id[i]] += res[i];
        const Eigen::VectorXd xc = vcycle(l + 1, rc);
        for (std::int64_t i = 0; i < x.size(); ++i) x[i] += xc[level.coarse_id[i]];
        for (int sweep = 0; sweep < 2; ++sweep)
            x += omega * level.inv_diag.cwiseProduct(b - apply_level(l, x));
        return x;
    }

    std::vector<Level> levels_;
    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>> coarse_solver_;
    int last_iterations_ = 0;
};

/// Factor-size cap for the direct path; above it the multilevel path takes
/// over (when lattice coordinates are available) to stay within memory.
inline std::int64_t direct_factor_nonzero_cap() {
    if (const char* env = std::getenv("SPECTRAL_LATTICE_DIRECT_LNZ_CAP")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return 300'000'000;
}

inline std::unique_ptr<InverseOperator> make_inverse(const Eigen::SparseMatrix<double>& A,
                                                     const std::vector<std::array<int, 3>>& grid_hint) {
    if (!grid_hint.empty()) {
        // very large lattices skip the symbolic probe too; its ordering pass
        // is itself expensive at that scale
        if (A.rows() > 1'200'000) return std::make_unique<MultilevelInverse>(A, grid_hint, 400'000);
        if (A.rows() > 400'000) {
            Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>> probe;
            probe.analyzePattern(A);
            if (probe.cholmod().lnz > static_cast<double>(direct_factor_nonzero_cap()))
                return std::make_unique<MultilevelInverse>(A, grid_hint, 400'000);
        }
    }
    auto chol = std::make_unique<CholmodInverse>(A);
    if (chol->ok()) return chol;
    auto ldlt = std::make_unique<SimplicialInverse>(A);
    if (!ldlt->ok()) throw InternalConsistencyError("sparse factorization failed");
    return ldlt;
}

// Deterministic start vectors: raw mt19937_64 mapped to [-1, 1). The engine
// is fully specified by the standard; distributions are not.
inline Eigen::VectorXd deterministic_vector(std::int64_t dim, std::uint64_t salt) {
    std::mt19937_64 rng(0x1a775bec5eedull ^ (salt * 0x9e3779b97f4a7c15ull));
    Eigen::VectorXd v(dim);
    for (std::int64_t i = 0; i < dim; ++i)
        v[i] = static_cast<double>(rng() >> 11) * 0x1p-52 - 1.0;
    return v;
}

/// First entry that is not negligible is made positive (reproducible sign
/// convention for fixtures).
inline void normalize_sign(Eigen::VectorXd& x) {
    const double scale = x.cwiseAbs().maxCoeff();
    if (scale == 0.0) return;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > 1e-12 * scale) {
            if (x[i] < 0.0) x = -x;
            return;
        }
    }
}

} // namespace detail

/// First k nonzero eigenpairs of S x = lambda M x (M = I when absent) via
/// shift-invert Lanczos at sigma = 0 with thick restarts and full
/// reorthogonalization. The kernel (one constant per connected component) is
/// projected out exactly, never inferred from magnitudes; S is regularized to
/// S + eps*M with eps = 1e-10 * trace(S)/dim before factorization. Reported
/// values carry the pair's scale and sign. Convergence is judged by the
/// direct relative residual ||S x - lambda M x|| / (|lambda| ||M x||) <= tol.
inline SpectrumResult smallest_nonzero(const ScaledOperatorPair& pair, int k, double tol = 1e-8,
                                       bool want_vectors = true) {
    detail::CpuWallTimer timer;
    const SparseSymmetricOperator& S = pair.stiffness;
    const std::int64_t dim = S.dim();
    if (k < 1) throw std::invalid_argument("smallest_nonzero: k must be >= 1");
    if (!(tol > 0.0) || tol > 1e-4)
        throw std::invalid_argument("smallest_nonzero: tol must lie in (0, 1e-4]");
    if (pair.mass && pair.mass->dim() != dim)
        throw std::invalid_argument("smallest_nonzero: mass dimension mismatch");

    std::vector<double> mass_diag(dim, 1.0);
    if (pair.mass) {
        mass_diag = pair.mass->diagonal();
        for (double m : mass_diag)
            if (!(m > 0.0))
                throw std::invalid_argument("smallest_nonzero: mass diagonal must be positive");
    }
    const detail::Components comps = detail::stiffness_components(S, mass_diag);
    const std::int64_t avail = dim - comps.count;
    if (k > avail)
        throw std::invalid_argument("smallest_nonzero: requested " + std::to_string(k) +
                                    " eigenvalues but only " + std::to_string(avail) +
                                    " nonzero modes are available (kernel dimension " +
                                    std::to_string(comps.count) + ")");

    Eigen::VectorXd msqrt(dim), minv_sqrt(dim);
    for (std::int64_t i = 0; i < dim; ++i) {
        msqrt[i] = std::sqrt(mass_diag[i]);
        minv_sqrt[i] = 1.0 / msqrt[i];
    }
    const detail::KernelProjector deflate{&comps, &msqrt};

    double trace = 0.0;
    S.for_each_entry([&](std::int64_t r, std::int64_t c, double v) {
        if (r == c) trace += v;
    });
    const double eps = 1e-10 * trace / static_cast<double>(dim);

    Eigen::SparseMatrix<double> A = S.to_eigen();
    {
        std::vector<Eigen::Triplet<double>> diag;
        diag.reserve(dim);
        for (std::int64_t i = 0; i < dim; ++i)
            diag.emplace_back(static_cast<int>(i), static_cast<int>(i), eps * mass_diag[i]);
        Eigen::SparseMatrix<double> E(dim, dim);
        E.setFromTriplets(diag.begin(), diag.end());
        A += E;
    }
    auto inverse = detail::make_inverse(A, pair.grid_hint);
    A.resize(0, 0); // factored; reclaim

    long op_applications = 0;
    const long max_applications = 300L * k;
    // shift-inverted, mass-symmetrized operator: y -> M^(1/2) (S+eps M)^(-1) M^(1/2) y
    auto apply_T = [&](const Eigen::VectorXd& y) {
        ++op_applications;
        Eigen::VectorXd w = msqrt.cwiseProduct(y);
        w = inverse->solve(w);
        w = msqrt.cwiseProduct(w);
        deflate.project(w);
        return w;
    };
    auto direct_residual = [&](const Eigen::VectorXd& y, double lambda) {
        const Eigen::VectorXd x = minv_sqrt.cwiseProduct(y);
        const Eigen::VectorXd Sx = S.apply(x);
        const Eigen::VectorXd Mx = msqrt.cwiseProduct(y);
        return (Sx - lambda * Mx).norm() / (std::abs(lambda) * Mx.norm());
    };

    const std::int64_t ncv = std::min<std::int64_t>(avail, std::max<std::int64_t>(2 * k + 10, 20));
    const std::int64_t keep_target = std::min<std::int64_t>(k + 5, ncv - 1);

    std::vector<Eigen::VectorXd> V; // orthonormal, kernel-deflated basis
    std::vector<Eigen::VectorXd> W; // W[i] = T * V[i]
    V.reserve(ncv);
    W.reserve(ncv);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(ncv, ncv);
    std::uint64_t salt = 0;

    auto orthogonalize = [&](Eigen::VectorXd& w) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : V) w -= b.dot(w) * b;
        deflate.project(w);
        return w.norm();
    };
    auto fresh_vector = [&]() {
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::VectorXd v = detail::deterministic_vector(dim, salt++);
            if (orthogonalize(v) > 1e-8 * std::sqrt(static_cast<double>(dim))) {
                v.normalize();
                return v;
            }
        }
        throw InternalConsistencyError("could not generate an independent start vector");
    };
    auto append_column = [&](Eigen::VectorXd v) {
        V.push_back(std::move(v));
        const std::size_t m = V.size() - 1;
        W.push_back(apply_T(V[m]));
        for (std::size_t b = 0; b <= m; ++b) {
            const double coef = V[b].dot(W[m]);
            H(b, m) = coef;
            H(m, b) = coef;
        }
    };

    // Seed a whole block of independent directions so every eigenspace with
    // multiplicity up to k+5 is represented in the search space from the
    // start; a single Krylov chain would only pick up degenerate copies
    // through rounding noise, if at all.
    const std::int64_t seed_count = std::min<std::int64_t>(avail, k + 5);
    for (std::int64_t s = 0; s < seed_count; ++s) append_column(fresh_vector());
    Eigen::VectorXd ritz_values;
    Eigen::MatrixXd ritz_coeffs;
    std::vector<double> best_residuals(k, std::numeric_limits<double>::infinity());
    std::size_t expand_source = V.size() - 1;
    Eigen::VectorXd last_pass; // k values from the previous converged pass

    auto rayleigh_ritz = [&]() {
        const std::size_t m = V.size();
        Eigen::MatrixXd Hm = H.topLeftCorner(m, m);
        Hm = 0.5 * (Hm + Hm.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hm);
        ritz_values = es.eigenvalues().reverse(); // largest theta first
        ritz_coeffs = es.eigenvectors().rowwise().reverse();
    };
    // Status: converged when all k direct residuals pass; done only when a
    // later converged pass reproduces the same values, so late-surfacing
    // degenerate copies are not cut off by an early stop.
    enum class Status { NotConverged, Converged, Done };
    auto check_convergence = [&](int& next_focus) {
        rayleigh_ritz();
        const std::size_t m = V.size();
        for (int i = 0; i < k; ++i) {
            const double theta = ritz_values[i];
            if (!(theta > 0.0)) {
                next_focus = i;
                return Status::NotConverged;
            }
            Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
            for (std::size_t b = 0; b < m; ++b) y += ritz_coeffs(b, i) * V[b];
            const double res = direct_residual(y, 1.0 / theta - eps);
            best_residuals[i] = std::min(best_residuals[i], res);
            if (!(res <= tol)) {
                next_focus = i;
                return Status::NotConverged;
            }
        }
        bool stable = last_pass.size() == k;
        next_focus = k - 1;
        if (stable)
            for (int i = 0; i < k; ++i)
                if (std::abs(ritz_values[i] - last_pass[i]) > tol * std::abs(ritz_values[i])) {
                    stable = false;
                    next_focus = i;
                    break;
                }
        last_pass = ritz_values.head(k);
        return stable ? Status::Done : Status::Converged;
    };

    constexpr int check_stride = 5;
    Status status = Status::NotConverged;
    while (true) {
        int appended = 0;
        bool exhausted = false;
        while (static_cast<std::int64_t>(V.size()) < ncv && appended < check_stride) {
            Eigen::VectorXd w = W[expand_source];
            const double beta = orthogonalize(w);
            if (beta > 1e-14 * W[expand_source].norm())
                append_column(w / beta);
            else if (static_cast<std::int64_t>(V.size()) < avail)
                append_column(fresh_vector());
            else {
                exhausted = true;
                break;
            }
            expand_source = V.size() - 1;
            ++appended;
        }

        int focus = 0;
        status = check_convergence(focus);
        if (status == Status::Done) break;
        if (exhausted || static_cast<std::int64_t>(V.size()) >= avail) break;
        if (op_applications >= max_applications)
            throw ConvergenceError("smallest_nonzero: not converged after " +
                                       std::to_string(op_applications) +
                                       " operator applications (cap 300*k)",
                                   best_residuals);

        if (static_cast<std::int64_t>(V.size()) >= ncv) {
            // thick restart: rotate the V and T*V caches onto the leading
            // Ritz vectors; the projected matrix becomes diag(theta) exactly
            const std::size_t m = V.size();
            const std::int64_t keep =
                std::min<std::int64_t>(keep_target, static_cast<std::int64_t>(m) - 1);
            std::vector<Eigen::VectorXd> Vk(keep, Eigen::VectorXd::Zero(dim));
            std::vector<Eigen::VectorXd> Wk(keep, Eigen::VectorXd::Zero(dim));
            for (std::int64_t i = 0; i < keep; ++i)
                for (std::size_t b = 0; b < m; ++b) {
                    Vk[i] += ritz_coeffs(b, i) * V[b];
                    Wk[i] += ritz_coeffs(b, i) * W[b];
                }
            V = std::move(Vk);
            W = std::move(Wk);
            H.setZero();
            for (std::int64_t i = 0; i < keep; ++i) H(i, i) = ritz_values[i];
            expand_source = static_cast<std::size_t>(std::min<std::int64_t>(focus, keep - 1));
        } else {
            // mid-cycle: refocus the chain on the first direction that failed
            expand_source = V.size() - 1;
        }
    }
    rayleigh_ritz();

    SpectrumResult result;
    result.kernel_dim = comps.count;
    const std::size_t m = V.size();
    struct Pair {
        double lambda;
        double residual;
        Eigen::VectorXd x;
    };
    std::vector<Pair> pairs;
    for (int i = 0; i < k; ++i) {
        const double theta = ritz_values[i];
        const double lambda = 1.0 / theta - eps;
        Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
        for (std::size_t b = 0; b < m; ++b) y += ritz_coeffs(b, i) * V[b];
        Pair p;
        p.lambda = lambda;
        p.residual = direct_residual(y, lambda);
        if (want_vectors) {
            p.x = minv_sqrt.cwiseProduct(y);
            detail::normalize_sign(p.x);
        }
        pairs.push_back(std::move(p));
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& a, const Pair& b) { return a.lambda < b.lambda; });
    for (Pair& p : pairs) {
        result.eigenvalues.push_back(pair.sign * pair.scale * p.lambda);
        result.residuals.push_back(p.residual);
        if (want_vectors) result.eigenvectors.push_back(std::move(p.x));
    }
    result.meta.algorithm = "shift-invert-lanczos/" + inverse->name();
    result.meta.inner_iterations = op_applications;
    result.meta.k = k;
    result.meta.tol = tol;
    result.meta.elapsed_seconds = timer.elapsed();
    result.meta.cpu_seconds = timer.cpu();
    return result;
}

/// Dense eigendecomposition of the same pencil with the same selection and
/// ordering contract; the small-problem cross-check for smallest_nonzero.
inline SpectrumResult dense_reference(const ScaledOperatorPair& pair, int k,
                                      bool want_vectors = true) {
    detail::CpuWallTimer timer;
    const SparseSymmetricOperator& S = pair.stiffness;
    const std::int64_t dim = S.dim();
    if (dim > 2000)
        throw std::invalid_argument("dense_reference: dimension " + std::to_string(dim) +
                                    " exceeds the dense limit 2000");
    if (k < 1) throw std::invalid_argument("dense_reference: k must be >= 1");

    std::vector<double> mass_diag(dim, 1.0);
    if (pair.mass) {
        mass_diag = pair.mass->diagonal();
        for (double m : mass_diag)
            if (!(m > 0.0))
                throw std::invalid_argument("dense_reference: mass diagonal must be positive");
    }
    const detail::Components comps = detail::stiffness_components(S, mass_diag);
    const std::int64_t avail = dim - comps.count;
    if (k > avail)
        throw std::invalid_argument("dense_reference: requested " + std::to_string(k) +
                                    " eigenvalues but only " + std::to_string(avail) +
                                    " nonzero modes are available (kernel dimension " +
                                    std::to_string(comps.count) + ")");

    Eigen::VectorXd minv_sqrt(dim), msqrt(dim);
    for (std::int64_t i = 0; i < dim; ++i) {
        msqrt[i] = std::sqrt(mass_diag[i]);
        minv_sqrt[i] = 1.0 / msqrt[i];
    }
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(dim, dim);
    S.for_each_entry([&](std::int64_t r, std::int64_t c, double v) {
        C(r, c) = minv_sqrt[r] * v * minv_sqrt[c];
    });
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);

    SpectrumResult result;
    result.kernel_dim = comps.count;
    for (int i = 0; i < k; ++i) {
        const std::int64_t idx = comps.count + i; // ascending order, structural kernel skipped
        const double lambda = es.eigenvalues()[idx];
        const Eigen::VectorXd y = es.eigenvectors().col(idx);
        Eigen::VectorXd x = minv_sqrt.cwiseProduct(y);
        const Eigen::VectorXd Sx = S.apply(x);
        const Eigen::VectorXd Mx = msqrt.cwiseProduct(y);
        result.eigenvalues.push_back(pair.sign * pair.scale * lambda);
        result.residuals.push_back((Sx - lambda * Mx).norm() /
                                   (std::max(std::abs(lambda), 1e-300) * Mx.norm()));
        if (want_vectors) {
            detail::normalize_sign(x);
            result.eigenvectors.push_back(std::move(x));
        }
    }
    result.meta.algorithm = "dense-reference";
    result.meta.k = k;
    result.meta.elapsed_seconds = timer.elapsed();
    result.meta.cpu_seconds = timer.cpu();
    return result;
}

} // namespace latspec
