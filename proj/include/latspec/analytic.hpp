#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "latspec/double_double.hpp"
#include "latspec/errors.hpp"

namespace latspec {

/// One block of an exact spectrum: eigenvalue (reported <= 0), its
/// multiplicity, and an origin label (the degree l for the sphere, the
/// angular index n for the cone). The final block may be cut short when the
/// spectrum is truncated to a requested count.
struct AnalyticSpectrum {
    struct Entry {
        double eigenvalue;
        int multiplicity;
        int label;
    };
    std::vector<Entry> entries; // sorted by |eigenvalue| ascending
    double cutoff = 0.0;

    std::vector<double> flatten() const {
        std::vector<double> out;
        for (const Entry& e : entries)
            for (int i = 0; i < e.multiplicity; ++i) out.push_back(e.eigenvalue);
        return out;
    }
};

/// First k nonzero sphere eigenvalues counting multiplicity: -l(l+1) repeated
/// 2l+1 times for l = 1, 2, ... (the l = 0 constant is excluded).
inline AnalyticSpectrum sphere_spectrum(int k) {
    if (k < 1) throw std::invalid_argument("sphere_spectrum: k must be >= 1");
    AnalyticSpectrum spectrum;
    int remaining = k;
    for (int l = 1; remaining > 0; ++l) {
        const int mult = std::min(2 * l + 1, remaining);
        spectrum.entries.push_back({static_cast<double>(-l * (l + 1)), mult, l});
        remaining -= mult;
    }
    spectrum.cutoff = -spectrum.entries.back().eigenvalue;
    return spectrum;
}

namespace detail {

// Power series sum_m (-1)^m (x/2)^(2m+nu) / (m! Gamma(m+nu+1)), with the
// m-dependent part accumulated in double-double so that the alternating
// cancellation (about e^x) does not eat the accuracy budget. The
// (x/2)^nu / Gamma(nu+1) prefactor is a clean overall factor and stays in
// double precision.
inline double bessel_series(double nu, double x) {
    if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    const double half = 0.5 * x;
    const DD q = dd_neg(two_prod(half, half)); // -(x/2)^2
    DD term = DD::from(1.0);
    DD sum = term;
    for (int m = 0; m < 600; ++m) {
        const DD denom = dd_mul(two_sum(static_cast<double>(m + 1), nu), static_cast<double>(m + 1));
        term = dd_div(dd_mul(term, q), denom);
        sum = dd_add(sum, term);
        if (m >= half && std::abs(term.hi) < 1e-20 * (std::abs(sum.hi) + 1e-280)) break;
    }
    const double prefactor = std::pow(half, nu) / std::tgamma(nu + 1.0);
    return prefactor * (sum.hi + sum.lo);
}

// Miller backward recurrence for x beyond the series range, normalized with
// sum_k (nu0+2k) Gamma(nu0+k)/k! J_{nu0+2k}(x) = (x/2)^nu0 (nu0 = frac(nu)).
inline double bessel_miller(double nu, double x) {
    const int nint = static_cast<int>(std::floor(nu));
    const double nu0 = nu - nint;
    const int start = static_cast<int>(std::ceil(std::max(x, nu) + 14.0 * std::cbrt(x))) + 12;
    std::vector<double> f(start + 2, 0.0);
    f[start + 1] = 0.0;
    f[start] = 1e-280;
    for (int m = start; m >= 1; --m)
        f[m - 1] = (2.0 * (nu0 + m) / x) * f[m] - f[m + 1];
    double norm = std::tgamma(nu0 + 1.0) * f[0]; // k = 0 weight: nu0*Gamma(nu0) = Gamma(nu0+1)
    for (int k = 1; 2 * k <= start; ++k)
        norm += (nu0 + 2 * k) * std::exp(std::lgamma(nu0 + k) - std::lgamma(k + 1.0)) * f[2 * k];
    return f[nint] * std::pow(0.5 * x, nu0) / norm;
}

} // namespace detail

/// Bessel function of the first kind with real order, on the domain
/// 0 <= nu <= 40, 0 <= x <= 200 used by the cone spectrum enumeration.
inline double bessel_j(double nu, double x) {
    if (!(nu >= 0.0) || nu > 40.0)
        throw std::invalid_argument("bessel_j: order must lie in [0, 40]");
    if (!(x >= 0.0) || x > 200.0)
        throw std::invalid_argument("bessel_j: argument must lie in [0, 200]");
    return x <= 30.0 ? detail::bessel_series(nu, x) : detail::bessel_miller(nu, x);
}

/// J'_nu(x) = -J_{nu+1}(x) + (nu/x) J_nu(x) for x > 0; series-derivative
/// limits at x = 0 (J'_0(0) = 0, J'_1(0) = 1/2, zero for nu > 1).
inline double bessel_j_prime(double nu, double x) {
    if (!(nu >= 0.0) || nu > 40.0)
        throw std::invalid_argument("bessel_j_prime: order must lie in [0, 40]");
    if (!(x >= 0.0) || x > 200.0)
        throw std::invalid_argument("bessel_j_prime: argument must lie in [0, 200]");
    if (x == 0.0) {
        if (nu == 0.0) return 0.0;
        if (nu == 1.0) return 0.5;
        if (nu > 1.0) return 0.0;
        throw std::invalid_argument("bessel_j_prime: derivative diverges at x = 0 for 0 < nu < 1");
    }
    if (nu == 0.0) return -bessel_j(1.0, x);
    return -bessel_j(nu + 1.0, x) + (nu / x) * bessel_j(nu, x);
}

/// Cone slope parameter: lateral surface (t cos0, t sin0, h t). The unit cone
/// of the reference tables has h = 1.
struct ConeParams {
    double h = 1.0;
};

/// Matching condition whose roots E are the cone eigenvalue magnitudes:
/// J'_nu(s sqrt(E)) J_n(sqrt(E)) + J_nu(s sqrt(E)) J'_n(sqrt(E)) with
/// s = sqrt(1+h^2) and nu = n s (for h = 1: s = sqrt(2)).
inline double cone_characteristic(int n, double E, ConeParams params = {}) {
    if (n < 0) throw std::invalid_argument("cone_characteristic: n must be >= 0");
    if (!(E > 0.0)) throw std::invalid_argument("cone_characteristic: E must be positive");
    if (!(params.h > 0.0)) throw std::invalid_argument("cone_characteristic: h must be positive");
    const double s = std::sqrt(1.0 + params.h * params.h);
    const double nu = n * s;
    const double root_e = std::sqrt(E);
    return bessel_j_prime(nu, s * root_e) * bessel_j(n, root_e) +
           bessel_j(nu, s * root_e) * bessel_j_prime(n, root_e);
}

namespace detail {

// Sign-change scan at the given step, bisected to ~1e-11. Intervals without a
// sign change but with an interior slope reversal are re-sampled finely; a
// sign flip found there means the step missed a root pair, which is reported
// rather than silently repaired.
inline std::vector<double> cone_roots_for_n(int n, double cutoff, ConeParams params, double step) {
    std::vector<double> roots;
    auto g = [&](double E) { return cone_characteristic(n, E, params); };
    auto bisect = [&](double lo, double hi, double glo) {
        while (hi - lo > 1e-11) {
            const double mid = 0.5 * (lo + hi);
            const double gm = g(mid);
            if (gm == 0.0) return mid;
            if ((glo < 0.0) != (gm < 0.0))
                hi = mid;
            else {
                lo = mid;
                glo = gm;
            }
        }
        return 0.5 * (lo + hi);
    };

    double prev_e = step, prev_v = g(step), prev_slope = 0.0;
    bool have_slope = false;
    for (double e = 2.0 * step; e <= cutoff + 0.5 * step; e += step) {
        const double cur_e = std::min(e, cutoff);
        if (cur_e <= prev_e) break;
        const double cur_v = g(cur_e);
        if (prev_v == 0.0)
            roots.push_back(prev_e);
        else if ((prev_v < 0.0) != (cur_v < 0.0))
            roots.push_back(bisect(prev_e, cur_e, prev_v));
        else if (have_slope && (prev_slope < 0.0) != (cur_v - prev_v < 0.0)) {
            // same-sign interval containing an extremum: audit for a missed pair
            for (int s = 1; s < 32; ++s) {
                const double es = prev_e + (cur_e - prev_e) * s / 32.0;
                if ((g(es) < 0.0) != (prev_v < 0.0))
                    throw InternalConsistencyError(
                        "cone_spectrum: scan step failed to bracket a root pair near E = " +
                        std::to_string(es) + " (n = " + std::to_string(n) + ")");
            }
        }
        prev_slope = cur_v - prev_v;
        have_slope = true;
        prev_e = cur_e;
        prev_v = cur_v;
    }
    return roots;
}

} // namespace detail

/// All cone eigenvalues with |E| <= cutoff for angular indices 0..n_max,
/// merged ascending. Roots from n = 0 have multiplicity 1, all others 2.
inline AnalyticSpectrum cone_spectrum(ConeParams params, double cutoff, int n_max) {
    if (!(cutoff > 0.0)) throw std::invalid_argument("cone_spectrum: cutoff must be positive");
    if (n_max < 0) throw std::invalid_argument("cone_spectrum: n_max must be >= 0");
    AnalyticSpectrum spectrum;
    spectrum.cutoff = cutoff;
    for (int n = 0; n <= n_max; ++n)
        for (double root : detail::cone_roots_for_n(n, cutoff, params, 0.01))
            spectrum.entries.push_back({-root, n == 0 ? 1 : 2, n});
    std::sort(spectrum.entries.begin(), spectrum.entries.end(),
              [](const AnalyticSpectrum::Entry& a, const AnalyticSpectrum::Entry& b) {
                  return std::abs(a.eigenvalue) < std::abs(b.eigenvalue);
              });
    return spectrum;
}

} // namespace latspec
