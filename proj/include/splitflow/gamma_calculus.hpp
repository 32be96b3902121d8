#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "splitflow/errors.hpp"
#include "splitflow/quadrature.hpp"
#include "splitflow/spectral_model.hpp"
#include "splitflow/summation.hpp"

namespace splitflow {

// Squared gamma-radonifying norm of a diagonal operator, with per-mode
// contributions (ascending k, compensated reduction) and an integral-
// comparison bound on the truncation tail where one is available.
struct GammaNormResult {
    double value_sq = 0.0;
    double tail_sq = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> per_mode;
};

// J(lambda, t) = int_0^t e^{2 lambda s} ds. expm1 keeps the quotient accurate
// for |lambda| t near 0; lambda = 0 returns t exactly.
inline double j_factor(double lambda, double t) {
    if (lambda == 0.0) return t;
    return std::expm1(2.0 * lambda * t) / (2.0 * lambda);
}

// int_a^b e^{2 lambda s} ds, written as an expm1 difference for accuracy.
inline double j_factor_interval(double lambda, double a, double b) {
    if (lambda == 0.0) return b - a;
    return (std::expm1(2.0 * lambda * b) - std::expm1(2.0 * lambda * a)) / (2.0 * lambda);
}

namespace detail {

// Walks the coarse cells of (0, t]: full cells ((j-1)T/n, jT/n] plus one
// partial final cell. Calls f(j, a, b) with the cell index and endpoints.
template <typename F>
void for_each_coarse_cell(std::size_t n, double t, double T, F&& f) {
    const double dt = T / static_cast<double>(n);
    const std::size_t j_end = ceil_cell_index(t, n, T);
    for (std::size_t j = 1; j <= j_end; ++j) {
        const double a = dt * static_cast<double>(j - 1);
        const double b = (j == j_end) ? t : dt * static_cast<double>(j);
        f(j, a, b);
    }
}

} // namespace detail

// int_a^b (e^{lambda tj} - e^{lambda r})^2 dr for a cell (a,b] whose
// discretised factor is frozen at tj >= b. The direct closed form cancels
// catastrophically when |lambda (tj - a)| is small, so that regime is handled
// by Gauss-Legendre on the cancellation-free integrand
// e^{2 lambda r} expm1(lambda (tj - r))^2. lambda = 0 gives exactly 0.
inline double error_cell_integral(double lambda, double tj, double a, double b) {
    if (lambda == 0.0 || b <= a) return 0.0;
    const double w = lambda * (tj - a);
    if (std::abs(w) >= 0.25) {
        const double F = std::exp(lambda * tj);
        const double Ea = std::exp(lambda * a);
        const double Eb = std::exp(lambda * b);
        return F * F * (b - a) - 2.0 * F * (Eb - Ea) / lambda +
               (Eb * Eb - Ea * Ea) / (2.0 * lambda);
    }
    return gauss10(
        [lambda, tj](double r) {
            const double d = std::expm1(lambda * (tj - r));
            return std::exp(2.0 * lambda * r) * d * d;
        },
        a, b);
}

// Per-mode kernels of the three second moments at time t on the n-cell grid.

inline double exact_kernel_integral(double lambda, double t) { return j_factor(lambda, t); }

inline double discretized_kernel_integral(double lambda, std::size_t n, double t, double T) {
    CompensatedSum acc;
    const double dt = T / static_cast<double>(n);
    detail::for_each_coarse_cell(n, t, T, [&](std::size_t j, double a, double b) {
        acc.add((b - a) * std::exp(2.0 * lambda * dt * static_cast<double>(j)));
    });
    return acc.value();
}

inline double error_kernel_integral(double lambda, std::size_t n, double t, double T) {
    CompensatedSum acc;
    const double dt = T / static_cast<double>(n);
    detail::for_each_coarse_cell(n, t, T, [&](std::size_t j, double a, double b) {
        acc.add(error_cell_integral(lambda, dt * static_cast<double>(j), a, b));
    });
    return acc.value();
}

// Cross term sum_j e^{lambda tj} int_cell e^{lambda r} dr; together with the
// exact and discretised kernels this reassembles the error kernel.
inline double cross_kernel_integral(double lambda, std::size_t n, double t, double T) {
    CompensatedSum acc;
    const double dt = T / static_cast<double>(n);
    detail::for_each_coarse_cell(n, t, T, [&](std::size_t j, double a, double b) {
        double piece;
        if (lambda == 0.0) {
            piece = b - a;
        } else {
            piece = std::exp(lambda * dt * static_cast<double>(j)) *
                    (std::expm1(lambda * b) - std::expm1(lambda * a)) / lambda;
        }
        acc.add(piece);
    });
    return acc.value();
}

namespace detail {

// Truncation tail for the Dirichlet spectrum with iota == 1: every kernel at
// time t is bounded by J(lambda,t) <= 1/(2|lambda|) (the discretised factor
// never exceeds the exact one for lambda < 0), so
//   tail <= sum_{k>K} (pi^2 k^2)^{2e} / (2 pi^2 k^2)
//        <= pi^{4e-2}/2 * K^{4e-1} / (1-4e),  valid when 4e - 2 < -1.
inline double dirichlet_tail_sq(std::size_t K, double expo) {
    const double s = 2.0 - 4.0 * expo; // tail terms decay like k^{-s}, s > 1
    return 0.5 * std::pow(std::numbers::pi, 4.0 * expo - 2.0) *
           std::pow(static_cast<double>(K), 1.0 - s) / (s - 1.0);
}

template <typename Kernel>
GammaNormResult weighted_mode_sum(const GeneratorSpectrum& spec, const NoiseModel& noise,
                                  double alpha, Kernel&& kernel) {
    spec.validate();
    noise.validate(spec.size());
    const double expo = noise.sigma_E + alpha;
    if (spec.kind == SpectrumKind::dirichlet && noise.iota.empty() && expo >= 0.25) {
        throw constraint_error(
            "inadmissible sigma_E + alpha = " + std::to_string(expo) +
            ": mode sum diverges like sum k^{" + std::to_string(4.0 * expo - 2.0) + "}");
    }
    GammaNormResult out;
    out.per_mode.resize(spec.size());
    CompensatedSum acc;
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double iw = noise.iota_at(k);
        const double weight = iw * iw *
            fractional_weight(spec.eigenvalues[k], spec.shift, 2.0 * expo);
        const double contrib = weight * kernel(spec.eigenvalues[k]);
        out.per_mode[k] = contrib;
        acc.add(contrib);
    }
    out.value_sq = acc.value();
    if (spec.kind == SpectrumKind::dirichlet && noise.iota.empty()) {
        out.tail_sq = dirichlet_tail_sq(spec.size(), expo);
    }
    return out;
}

} // namespace detail

// E || U(t) ||^2 in E_{sigma_E + alpha}: the squared gamma-norm of R_Phi on
// L^2(0,t;H), evaluated mode by mode as iota^2 (w-lambda)^{2(sigma_E+alpha)}
// J(lambda, t).
inline GammaNormResult exact_gamma_norm_sq(const GeneratorSpectrum& spec, const NoiseModel& noise,
                                           double t, double alpha) {
    if (!(t > 0.0)) throw constraint_error("exact_gamma_norm_sq requires t > 0");
    return detail::weighted_mode_sum(spec, noise, alpha,
                                     [t](double lam) { return j_factor(lam, t); });
}

// E || U^(n)(t) ||^2: same weights, discretised kernel.
inline GammaNormResult discretized_gamma_norm_sq(const GeneratorSpectrum& spec,
                                                 const NoiseModel& noise, std::size_t n,
                                                 double t, double alpha, double T) {
    if (!(t > 0.0) || t > T) throw constraint_error("discretized_gamma_norm_sq requires 0 < t <= T");
    if (n == 0) throw constraint_error("n must be >= 1");
    return detail::weighted_mode_sum(
        spec, noise, alpha, [=](double lam) { return discretized_kernel_integral(lam, n, t, T); });
}

// E || U^(n)(t) - U(t) ||^2 = || R_{Phi^(n)} - R_Phi ||^2 on L^2(0,t;H): the
// deterministic mean-square error of the splitting scheme.
inline GammaNormResult error_gamma_norm_sq(const GeneratorSpectrum& spec, const NoiseModel& noise,
                                           std::size_t n, double t, double alpha, double T) {
    if (!(t > 0.0) || t > T) throw constraint_error("error_gamma_norm_sq requires 0 < t <= T");
    if (n == 0) throw constraint_error("n must be >= 1");
    return detail::weighted_mode_sum(
        spec, noise, alpha, [=](double lam) { return error_kernel_integral(lam, n, t, T); });
}

struct C1Check {
    double lhs = 0.0;
    double rhs = 0.0;
};

// Domination bound for continuously differentiable integrands on (a,b):
//   ||R_Phi|| <= (b-a)^{1/2} ||Phi(b)|| + int_a^b (s-a)^{1/2} ||Phi'(s)|| ds,
// all norms gamma(H, E_{sigma_E+alpha}). The left side has a closed form;
// the derivative integral is evaluated by adaptive quadrature.
inline C1Check c1_bound_check(const GeneratorSpectrum& spec, const NoiseModel& noise,
                              double a, double b, double alpha) {
    if (!(0.0 <= a && a < b)) throw constraint_error("c1_bound_check requires 0 <= a < b");
    spec.validate();
    noise.validate(spec.size());
    const double expo = noise.sigma_E + alpha;
    std::vector<double> weights(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const double iw = noise.iota_at(k);
        weights[k] = iw * iw * fractional_weight(spec.eigenvalues[k], spec.shift, 2.0 * expo);
    }
    const auto phi_norm = [&](double s) {
        CompensatedSum acc;
        for (std::size_t k = 0; k < spec.size(); ++k) {
            acc.add(weights[k] * std::exp(2.0 * spec.eigenvalues[k] * s));
        }
        return std::sqrt(acc.value());
    };
    const auto dphi_norm = [&](double s) {
        CompensatedSum acc;
        for (std::size_t k = 0; k < spec.size(); ++k) {
            const double lam = spec.eigenvalues[k];
            acc.add(weights[k] * lam * lam * std::exp(2.0 * lam * s));
        }
        return std::sqrt(acc.value());
    };

    C1Check out;
    {
        CompensatedSum acc;
        for (std::size_t k = 0; k < spec.size(); ++k) {
            acc.add(weights[k] * j_factor_interval(spec.eigenvalues[k], a, b));
        }
        out.lhs = std::sqrt(acc.value());
    }
    // substitute u = sqrt(s-a): int_a^b sqrt(s-a) f(s) ds = int 2 u^2 f(a+u^2) du,
    // which removes the square-root kink at s = a
    const double integral = integrate(
        [&](double u) { return 2.0 * u * u * dphi_norm(a + u * u); }, 0.0, std::sqrt(b - a),
        1e-12 * std::max(1.0, dphi_norm(a) * (b - a)));
    out.rhs = std::sqrt(b - a) * phi_norm(b) + integral;
    return out;
}

// Scalar multiplier g on a fixed operator R: || g R ||^2 factors as
// ||g||_{L^2}^2 ||R||^2. The left side runs through the same compensated cell
// accumulation as the discretised norms; the right side is assembled from an
// independently supplied (or naively summed) ||g||^2.
struct ScalarIdentity {
    double lhs_sq = 0.0;
    double rhs_sq = 0.0;
};

// Piecewise-constant g: value[j] on (breakpoints[j], breakpoints[j+1]].
struct PiecewiseConstantG {
    std::vector<double> breakpoints;
    std::vector<double> values;

    void validate() const {
        if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
            throw constraint_error("piecewise-constant g needs J+1 breakpoints for J values");
        for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j) {
            if (!(breakpoints[j] < breakpoints[j + 1]))
                throw constraint_error("breakpoints must be strictly increasing");
        }
    }
};

inline ScalarIdentity scalar_multiplier_identity(const PiecewiseConstantG& g, double R_norm_sq) {
    g.validate();
    ScalarIdentity out;
    CompensatedSum cells;
    for (std::size_t j = 0; j < g.values.size(); ++j) {
        const double len = g.breakpoints[j + 1] - g.breakpoints[j];
        cells.add(g.values[j] * g.values[j] * len * R_norm_sq);
    }
    out.lhs_sq = cells.value();
    double plain = 0.0; // deliberate second route: plain left-to-right sum
    for (std::size_t j = 0; j < g.values.size(); ++j) {
        plain += g.values[j] * g.values[j] * (g.breakpoints[j + 1] - g.breakpoints[j]);
    }
    out.rhs_sq = plain * R_norm_sq;
    return out;
}

// g(t) = e^{lambda t} on (0,T). The module side uses the J closed form;
// g_norm_sq, when supplied (e.g. from quadrature), feeds the right side.
inline ScalarIdentity scalar_multiplier_identity(double lambda, double T, double R_norm_sq,
                                                 double g_norm_sq) {
    ScalarIdentity out;
    out.lhs_sq = j_factor(lambda, T) * R_norm_sq;
    out.rhs_sq = g_norm_sq * R_norm_sq;
    return out;
}

} // namespace splitflow
