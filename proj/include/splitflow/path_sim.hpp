#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "splitflow/errors.hpp"
#include "splitflow/gamma_calculus.hpp"
#include "splitflow/rng.hpp"
#include "splitflow/spectral_model.hpp"

namespace splitflow {

// Covariance of the coupled pair (Brownian increment, stochastic-convolution
// increment) over one fine step of length delta:
//   Var dbeta = delta,  Cov = (e^{lambda delta}-1)/lambda,
//   Var eta   = (e^{2 lambda delta}-1)/(2 lambda).
// lambda = 0 degenerates to eta = dbeta.
struct StepCov {
    double var_dbeta = 0.0;
    double cov = 0.0;
    double var_eta = 0.0;
};

inline StepCov coupled_step_cov(double lambda, double delta) {
    if (!(delta > 0.0)) throw constraint_error("coupled_step_cov requires delta > 0");
    StepCov c;
    c.var_dbeta = delta;
    c.cov = (lambda == 0.0) ? delta : std::expm1(lambda * delta) / lambda;
    c.var_eta = j_factor(lambda, delta);
    return c;
}

enum class GridTag { fine, coarse };

// Per-mode solution coefficients on either the fine or the coarse grid,
// including the t = 0 entry.
struct CoefficientPath {
    std::vector<std::vector<double>> coeffs; // [mode][grid index]
    GridTag tag = GridTag::fine;
};

// One fine-grid driving path per mode: Brownian increments dbeta and exactly
// coupled convolution increments eta = int_cell e^{lambda (t_i - s)} dbeta(s).
// Fully determined by (seed, mode index, step index), so the same path can be
// regenerated and shared across every coarse resolution n.
struct FinePath {
    GridSpec grid;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> dbeta; // [mode][0..m-1]
    std::vector<std::vector<double>> eta;   // [mode][0..m-1]
    std::size_t schur_clamps = 0; // negative Schur complements clamped to 0
};

inline FinePath sample_fine_path(const GeneratorSpectrum& spec, const GridSpec& grid,
                                 std::uint64_t seed) {
    spec.validate();
    grid.validate();
    const std::size_t K = spec.size();
    const std::size_t m = grid.m;
    const double delta = grid.fine_dt();
    const double sqrt_delta = std::sqrt(delta);
    FinePath path;
    path.grid = grid;
    path.seed = seed;
    path.dbeta.assign(K, std::vector<double>(m));
    path.eta.assign(K, std::vector<double>(m));
    for (std::size_t k = 0; k < K; ++k) {
        const double lam = spec.eigenvalues[k];
        double cond_sd = 0.0;
        double slope = 1.0;
        if (lam != 0.0) {
            const StepCov cov = coupled_step_cov(lam, delta);
            slope = cov.cov / delta;
            double schur = cov.var_eta - cov.cov * cov.cov / delta;
            if (schur < 0.0) { // analytically impossible; round-off guard
                schur = 0.0;
                ++path.schur_clamps;
            }
            cond_sd = std::sqrt(schur);
        }
        auto& db = path.dbeta[k];
        auto& et = path.eta[k];
        for (std::size_t i = 0; i < m; ++i) {
            const NormalPair z = rng_stream(seed, k, i);
            db[i] = sqrt_delta * z.first;
            et[i] = (lam == 0.0) ? db[i] : slope * db[i] + cond_sd * z.second;
        }
    }
    return path;
}

// Exact mild solution coefficients on the fine grid:
// u_0 = 0, u_i = e^{lambda delta} u_{i-1} + eta_i.
inline CoefficientPath exact_path(const FinePath& path, const GeneratorSpectrum& spec) {
    const std::size_t K = spec.size();
    const std::size_t m = path.grid.m;
    const double delta = path.grid.fine_dt();
    CoefficientPath out;
    out.tag = GridTag::fine;
    out.coeffs.assign(K, std::vector<double>(m + 1, 0.0));
    for (std::size_t k = 0; k < K; ++k) {
        const double E = std::exp(spec.eigenvalues[k] * delta);
        const auto& et = path.eta[k];
        auto& u = out.coeffs[k];
        for (std::size_t i = 1; i <= m; ++i) {
            u[i] = E * u[i - 1] + et[i - 1];
        }
    }
    return out;
}

// Splitting iterates on the coarse grid:
// v_0 = 0, v_j = e^{lambda T/n} (v_{j-1} + sum of the fine increments in cell j).
inline CoefficientPath splitting_path(const FinePath& path, const GeneratorSpectrum& spec,
                                      std::size_t n) {
    if (n == 0 || path.grid.m % n != 0)
        throw constraint_error("splitting_path requires n to divide m");
    const std::size_t K = spec.size();
    const std::size_t R = path.grid.m / n;
    const double E_T = path.grid.T / static_cast<double>(n);
    CoefficientPath out;
    out.tag = GridTag::coarse;
    out.coeffs.assign(K, std::vector<double>(n + 1, 0.0));
    for (std::size_t k = 0; k < K; ++k) {
        const double E = std::exp(spec.eigenvalues[k] * E_T);
        const auto& db = path.dbeta[k];
        auto& v = out.coeffs[k];
        for (std::size_t j = 1; j <= n; ++j) {
            double block = 0.0;
            for (std::size_t i = (j - 1) * R; i < j * R; ++i) block += db[i];
            v[j] = E * (v[j - 1] + block);
        }
    }
    return out;
}

// Interpolated discretised process on the fine grid:
//   U^(n)(i delta) = sum_{q=0}^{i-1} K(q) dbeta_{i-q},
//   K(q) = e^{lambda (T/n)(floor(q/R)+1)}.
// For each offset o in 1..R, the subsequence i = jR+o obeys the splitting
// recursion on a shifted block grid, so the whole path costs O(m) per mode:
//   A_{j+1} = e^{lambda T/n} (A_j + sum of dbeta over ((jR+o-R, jR+o] shifted)).
// At coarse indices i = jR this reproduces splitting_path exactly.
inline CoefficientPath discretized_path(const FinePath& path, const GeneratorSpectrum& spec,
                                        std::size_t n) {
    if (n == 0 || path.grid.m % n != 0)
        throw constraint_error("discretized_path requires n to divide m");
    const std::size_t K = spec.size();
    const std::size_t m = path.grid.m;
    const std::size_t R = m / n;
    const double dt = path.grid.T / static_cast<double>(n);
    CoefficientPath out;
    out.tag = GridTag::fine;
    out.coeffs.assign(K, std::vector<double>(m + 1, 0.0));
    std::vector<double> prefix(m + 1);
    for (std::size_t k = 0; k < K; ++k) {
        const double E = std::exp(spec.eigenvalues[k] * dt);
        const auto& db = path.dbeta[k];
        prefix[0] = 0.0;
        for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + db[i];
        auto& u = out.coeffs[k];
        for (std::size_t o = 1; o <= R; ++o) {
            double prev = 0.0;
            for (std::size_t i = o; i <= m; i += R) {
                const double lower = (i >= R) ? prefix[i - R] : 0.0;
                prev = E * (prev + (prefix[i] - lower));
                u[i] = prev;
            }
        }
    }
    return out;
}

// --- binary dump -----------------------------------------------------------
//
// Layout (little-endian):
//   bytes 0..7   magic "SFPATH1\0"
//   u64 seed, f64 T, u64 n, u64 m, u64 K, u64 schur_clamps
//   then per mode k = 0..K-1: m doubles dbeta, m doubles eta.

namespace detail {

inline constexpr char kPathMagic[8] = {'S', 'F', 'P', 'A', 'T', 'H', '1', '\0'};

template <typename T>
void write_pod(std::ostream& os, const T& value) {
    static_assert(std::endian::native == std::endian::little,
                  "path dump assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& value) {
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
}

} // namespace detail

inline void dump_fine_path(const FinePath& path, std::ostream& os) {
    os.write(detail::kPathMagic, sizeof(detail::kPathMagic));
    detail::write_pod(os, path.seed);
    detail::write_pod(os, path.grid.T);
    detail::write_pod(os, static_cast<std::uint64_t>(path.grid.n));
    detail::write_pod(os, static_cast<std::uint64_t>(path.grid.m));
    detail::write_pod(os, static_cast<std::uint64_t>(path.dbeta.size()));
    detail::write_pod(os, static_cast<std::uint64_t>(path.schur_clamps));
    for (std::size_t k = 0; k < path.dbeta.size(); ++k) {
        os.write(reinterpret_cast<const char*>(path.dbeta[k].data()),
                 static_cast<std::streamsize>(path.dbeta[k].size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(path.eta[k].data()),
                 static_cast<std::streamsize>(path.eta[k].size() * sizeof(double)));
    }
    if (!os) throw numerical_error("failed to write fine path dump");
}

inline FinePath load_fine_path(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, detail::kPathMagic, sizeof(magic)) != 0)
        throw constraint_error("not a fine-path dump (bad magic)");
    FinePath path;
    std::uint64_t n = 0, m = 0, K = 0, clamps = 0;
    detail::read_pod(is, path.seed);
    detail::read_pod(is, path.grid.T);
    detail::read_pod(is, n);
    detail::read_pod(is, m);
    detail::read_pod(is, K);
    detail::read_pod(is, clamps);
    path.grid.n = static_cast<std::size_t>(n);
    path.grid.m = static_cast<std::size_t>(m);
    path.schur_clamps = static_cast<std::size_t>(clamps);
    path.grid.validate();
    path.dbeta.assign(K, std::vector<double>(path.grid.m));
    path.eta.assign(K, std::vector<double>(path.grid.m));
    for (std::uint64_t k = 0; k < K; ++k) {
        is.read(reinterpret_cast<char*>(path.dbeta[k].data()),
                static_cast<std::streamsize>(path.grid.m * sizeof(double)));
        is.read(reinterpret_cast<char*>(path.eta[k].data()),
                static_cast<std::streamsize>(path.grid.m * sizeof(double)));
    }
    if (!is) throw constraint_error("truncated fine-path dump");
    return path;
}

} // namespace splitflow
