#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "splitflow/errors.hpp"
#include "splitflow/summation.hpp"

namespace splitflow {

enum class SpectrumKind { general, dirichlet };

// Diagonal generator: the spectrum {lambda_k} of A together with the shift w
// used by the fractional power scale. All lambda_k must lie strictly below w.
// For the Dirichlet Laplacian on (0,1): lambda_k = -pi^2 k^2, w = 0,
// eigenfunctions e_k(x) = sqrt(2) sin(k pi x).
struct GeneratorSpectrum {
    std::vector<double> eigenvalues;
    double shift = 0.0; // w
    SpectrumKind kind = SpectrumKind::general;

    std::size_t size() const { return eigenvalues.size(); }

    void validate() const {
        if (eigenvalues.empty()) throw constraint_error("spectrum must have K >= 1 modes");
        if (shift < 0.0) throw constraint_error("shift w must be >= 0");
        for (double lam : eigenvalues) {
            if (!(lam < shift)) throw constraint_error("eigenvalues must satisfy lambda_k < w");
        }
    }
};

inline GeneratorSpectrum dirichlet_spectrum(std::size_t K) {
    if (K == 0) throw constraint_error("dirichlet_spectrum requires K >= 1");
    GeneratorSpectrum spec;
    spec.eigenvalues.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double kk = static_cast<double>(k + 1);
        spec.eigenvalues[k] = -std::numbers::pi * std::numbers::pi * kk * kk;
    }
    spec.shift = 0.0;
    spec.kind = SpectrumKind::dirichlet;
    return spec;
}

// Sobolev-type exponent sigma. The E_sigma norm of a coefficient vector u is
// (sum_k (w - lambda_k)^{2 sigma} u_k^2)^{1/2}; sigma < 0 encodes the
// extrapolation spaces on the same coefficient sequence.
struct SpaceIndex {
    double sigma = 0.0;
};

// Per-mode embedding weights iota_k of i: H -> E plus the space index sigma_E
// of the ambient space and the noise smoothness beta (W is a Brownian motion
// in E_beta). Empty `iota` means iota_k = 1 for every mode.
struct NoiseModel {
    std::vector<double> iota;
    double sigma_E = -0.3;
    double beta = 0.0;

    double iota_at(std::size_t k) const { return iota.empty() ? 1.0 : iota.at(k); }

    void validate(std::size_t K) const {
        if (!iota.empty() && iota.size() < K)
            throw constraint_error("iota must supply a weight for every mode");
        for (double w : iota) {
            if (!(w >= 0.0)) throw constraint_error("iota weights must be >= 0");
        }
        if (beta < 0.0) throw constraint_error("beta must be >= 0");
    }
};

// Time grid: coarse count n, fine count m with n | m, final time T.
// Coarse grid points t_j = j T / n land exactly on fine grid points.
struct GridSpec {
    double T = 1.0;
    std::size_t n = 1;
    std::size_t m = 1;

    void validate() const {
        if (!(T > 0.0)) throw constraint_error("T must be > 0");
        if (n == 0 || m == 0) throw constraint_error("grid counts must be >= 1");
        if (m % n != 0) throw constraint_error("n must divide m");
    }

    std::size_t refinement() const { return m / n; }     // R
    double fine_dt() const { return T / static_cast<double>(m); }   // delta
    double coarse_dt() const { return T / static_cast<double>(n); } // Delta t
};

// Scalar factor of S(t) on a single mode.
inline double semigroup_factor(double lambda, double t) {
    if (t < 0.0) throw constraint_error("semigroup_factor requires t >= 0");
    return std::exp(lambda * t);
}

namespace detail {

// ceil(n t / T) with a snap to the nearest integer so that grid points t_j
// evaluate as j despite round-off in j*T/n.
inline std::size_t ceil_cell_index(double t, std::size_t n, double T) {
    const double x = static_cast<double>(n) * t / T;
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x))) {
        return static_cast<std::size_t>(r);
    }
    return static_cast<std::size_t>(std::ceil(x));
}

} // namespace detail

// Scalar factor of the discretised semigroup S^(n)(t) = S((T/n) ceil(n t/T)).
// The cell I_0 = {0} carries no measure, so t = 0 returns 1.
inline double discretized_semigroup_factor(double lambda, double t, std::size_t n, double T) {
    if (t < 0.0 || t > T) throw constraint_error("discretized_semigroup_factor requires 0 <= t <= T");
    if (t == 0.0) return 1.0;
    const std::size_t j = detail::ceil_cell_index(t, n, T);
    return std::exp(lambda * (T / static_cast<double>(n)) * static_cast<double>(j));
}

// (w - lambda)^sigma, the diagonal factor of the fractional power (w-A)^sigma.
inline double fractional_weight(double lambda, double w, double sigma) {
    const double gap = w - lambda;
    if (!(gap > 0.0)) throw constraint_error("fractional_weight requires w - lambda > 0");
    return std::pow(gap, sigma);
}

struct AdmissibilityReport {
    bool finite = true;
    double partial_sum = 0.0;
    // Integral-comparison bound on the truncated tail; NaN when the weight
    // sequence is not a recognized power law and no estimate is available.
    double tail_estimate = std::numeric_limits<double>::quiet_NaN();
};

// Evaluates sum_{k<=K} iota_k^2 (w-lambda_k)^{2(sigma_E+beta)}, the squared
// gamma-norm of the embedding i in E_beta truncated at K modes. For the
// Dirichlet spectrum with iota == 1 the weights are (pi^2 k^2)^{2e}; the sum
// converges iff 4e < -1, i.e. sigma_E + beta < -1/4, and the tail is bounded
// by the integral comparison pi^{4e} K^{4e+1} / (-4e-1).
inline AdmissibilityReport check_noise_admissible(const GeneratorSpectrum& spec,
                                                  const NoiseModel& noise,
                                                  std::size_t K) {
    spec.validate();
    noise.validate(std::min(K, spec.size()));
    if (K > spec.size()) K = spec.size();
    const double expo = noise.sigma_E + noise.beta;
    CompensatedSum acc;
    for (std::size_t k = 0; k < K; ++k) {
        const double iw = noise.iota_at(k);
        acc.add(iw * iw * fractional_weight(spec.eigenvalues[k], spec.shift, 2.0 * expo));
    }
    AdmissibilityReport report;
    report.partial_sum = acc.value();
    if (spec.kind == SpectrumKind::dirichlet && noise.iota.empty()) {
        const double s = -4.0 * expo; // tail terms are k^{-s} up to pi powers
        report.finite = s > 1.0;
        if (report.finite) {
            report.tail_estimate = std::pow(std::numbers::pi, 4.0 * expo) *
                                   std::pow(static_cast<double>(K), 1.0 - s) / (s - 1.0);
        } else {
            report.tail_estimate = std::numeric_limits<double>::infinity();
        }
    }
    return report;
}

} // namespace splitflow
