#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "splitflow/errors.hpp"
#include "splitflow/spectral_model.hpp"
#include "splitflow/summation.hpp"

namespace splitflow {

enum class PairPolicy { all_pairs, dyadic_gaps };

// Discrete time-Hoelder evaluation policy. The dyadic-gap policy compares
// pairs with index gaps {1, 2, 4, ...} in fine-step units; it lower-bounds
// the all-pairs value.
struct HolderSpec {
    double gamma = 0.0;
    PairPolicy policy = PairPolicy::dyadic_gaps;
};

// (sum_k (w - lambda_k)^{2 sigma} u_k^2)^{1/2}
inline double sobolev_norm(const std::vector<double>& u, const GeneratorSpectrum& spec,
                           double sigma) {
    CompensatedSum acc;
    const std::size_t K = std::min(u.size(), spec.size());
    for (std::size_t k = 0; k < K; ++k) {
        const double w = fractional_weight(spec.eigenvalues[k], spec.shift, 2.0 * sigma);
        acc.add(w * u[k] * u[k]);
    }
    return std::sqrt(acc.value());
}

namespace detail {

template <typename Norm>
double pair_quotient(const std::vector<std::vector<double>>& values,
                     const std::vector<double>& times, std::size_t i, std::size_t j,
                     double gamma, Norm&& norm, std::vector<double>& scratch) {
    const auto& vi = values[i];
    const auto& vj = values[j];
    scratch.resize(vi.size());
    for (std::size_t c = 0; c < vi.size(); ++c) scratch[c] = vj[c] - vi[c];
    const double dt = times[j] - times[i];
    return norm(scratch) / std::pow(dt, gamma);
}

} // namespace detail

// max over selected pairs i < j of norm(v_j - v_i) / (t_j - t_i)^gamma.
template <typename Norm>
double holder_seminorm(const std::vector<std::vector<double>>& values,
                       const std::vector<double>& times, double gamma, Norm&& norm,
                       PairPolicy policy) {
    if (values.size() < 2 || values.size() != times.size())
        throw constraint_error("holder_seminorm requires >= 2 time points");
    if (gamma < 0.0) throw constraint_error("holder_seminorm requires gamma >= 0");
    std::vector<double> scratch;
    double best = 0.0;
    if (policy == PairPolicy::all_pairs) {
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            for (std::size_t j = i + 1; j < values.size(); ++j) {
                best = std::max(best,
                                detail::pair_quotient(values, times, i, j, gamma, norm, scratch));
            }
        }
    } else {
        for (std::size_t gap = 1; gap < values.size(); gap *= 2) {
            for (std::size_t i = 0; i + gap < values.size(); ++i) {
                best = std::max(
                    best, detail::pair_quotient(values, times, i, i + gap, gamma, norm, scratch));
            }
        }
    }
    return best;
}

// C^gamma norm: sup_i norm(v_i) + Hoelder seminorm (sum convention).
template <typename Norm>
double c_gamma_norm(const std::vector<std::vector<double>>& values,
                    const std::vector<double>& times, double gamma, Norm&& norm,
                    PairPolicy policy) {
    if (values.empty()) throw constraint_error("c_gamma_norm requires a nonempty path");
    double sup = 0.0;
    for (const auto& v : values) sup = std::max(sup, norm(v));
    if (values.size() < 2) return sup;
    return sup + holder_seminorm(values, times, gamma, norm, policy);
}

// Precomputed sqrt(2) sin(k pi x_i) table for repeated field reconstruction.
struct SinTable {
    std::size_t K = 0;
    std::size_t P = 0;
    std::vector<double> table; // [k * (P+1) + i]

    SinTable(std::size_t modes, std::size_t points) : K(modes), P(points), table(modes * (points + 1)) {
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i <= P; ++i) {
                const double x = static_cast<double>(i) / static_cast<double>(P);
                table[k * (P + 1) + i] =
                    std::numbers::sqrt2 * std::sin(static_cast<double>(k + 1) * std::numbers::pi * x);
            }
        }
    }

    void field_into(const std::vector<double>& u, std::vector<double>& out) const {
        out.assign(P + 1, 0.0);
        const std::size_t modes = std::min(K, u.size());
        for (std::size_t k = 0; k < modes; ++k) {
            const double uk = u[k];
            if (uk == 0.0) continue;
            const double* row = table.data() + k * (P + 1);
            for (std::size_t i = 1; i < P; ++i) out[i] += uk * row[i];
        }
        out[0] = 0.0; // Dirichlet endpoints pinned exactly
        out[P] = 0.0;
    }
};

// u(x_i) = sum_k u_k sqrt(2) sin(k pi x_i) on x_i = i/P, i = 0..P.
inline std::vector<double> spatial_field(const std::vector<double>& u, std::size_t P) {
    if (P == 0) throw constraint_error("spatial_field requires P >= 1");
    std::vector<double> out;
    SinTable(u.size(), P).field_into(u, out);
    return out;
}

// sup_i |v_i| + max over grid pairs |v_j - v_i| / |x_j - x_i|^{2 delta} on the
// uniform grid x_i = i/(N-1).
inline double space_holder_norm(const std::vector<double>& values, double two_delta,
                                PairPolicy policy = PairPolicy::all_pairs) {
    if (values.empty()) throw constraint_error("space_holder_norm requires a nonempty grid");
    if (!(two_delta >= 0.0 && two_delta < 1.0))
        throw constraint_error("space_holder_norm requires exponent 2*delta in [0,1)");
    double sup = 0.0;
    for (double v : values) sup = std::max(sup, std::abs(v));
    if (values.size() < 2) return sup;
    const double h = 1.0 / static_cast<double>(values.size() - 1);
    double semi = 0.0;
    auto visit = [&](std::size_t i, std::size_t j) {
        const double q = std::abs(values[j] - values[i]) /
                         std::pow(static_cast<double>(j - i) * h, two_delta);
        semi = std::max(semi, q);
    };
    if (policy == PairPolicy::all_pairs) {
        for (std::size_t i = 0; i + 1 < values.size(); ++i)
            for (std::size_t j = i + 1; j < values.size(); ++j) visit(i, j);
    } else {
        for (std::size_t gap = 1; gap < values.size(); gap *= 2)
            for (std::size_t i = 0; i + gap < values.size(); ++i) visit(i, i + gap);
    }
    return sup + semi;
}

struct MomentEstimate {
    double p = 2.0;
    double value = 0.0;
    double std_error = 0.0;
    std::size_t M = 0;
};

// (mean of s^p)^{1/p} with a delta-method standard error: the CLT error of
// mean(s^p) is pushed through x -> x^{1/p} to first order.
inline MomentEstimate p_moment(const std::vector<double>& samples, double p) {
    if (samples.size() < 2) throw constraint_error("p_moment requires M >= 2 samples");
    if (!(p >= 1.0)) throw constraint_error("p_moment requires p >= 1");
    const std::size_t M = samples.size();
    CompensatedSum sum_p;
    for (double s : samples) sum_p.add(std::pow(s, p));
    const double mean_p = sum_p.value() / static_cast<double>(M);
    MomentEstimate est;
    est.p = p;
    est.M = M;
    if (mean_p == 0.0) return est; // all-zero samples
    CompensatedSum var_acc;
    for (double s : samples) {
        const double d = std::pow(s, p) - mean_p;
        var_acc.add(d * d);
    }
    const double var_p = var_acc.value() / static_cast<double>(M - 1);
    const double se_mean = std::sqrt(var_p / static_cast<double>(M));
    est.value = std::pow(mean_p, 1.0 / p);
    est.std_error = se_mean * std::pow(mean_p, 1.0 / p - 1.0) / p;
    return est;
}

} // namespace splitflow
