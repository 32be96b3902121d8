#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "splitflow/errors.hpp"
#include "splitflow/gamma_calculus.hpp"
#include "splitflow/norms_stats.hpp"
#include "splitflow/parallel.hpp"
#include "splitflow/path_sim.hpp"
#include "splitflow/rng.hpp"
#include "splitflow/spectral_model.hpp"

namespace splitflow {

// One experiment: model, grids, error norm, Monte Carlo budget.
struct SweepConfig {
    GeneratorSpectrum spectrum;
    NoiseModel noise;
    double T = 1.0;
    double alpha = 0.0;
    double gamma = 0.0;
    double p = 2.0;
    std::vector<std::size_t> n_grid; // powers of two, each dividing m
    std::size_t m = 1024;
    std::size_t M = 200;
    std::uint64_t seed = 0x5EEDF00Dull;
    bool spatial = false;       // measure C^{2 delta}[0,1] norms of the field
    double delta_space = 0.0;   // spatial Hoelder exponent is 2*delta_space
    std::size_t spatial_points = 512;
    PairPolicy policy = PairPolicy::dyadic_gaps;
    unsigned threads = 1;

    void validate() const {
        spectrum.validate();
        noise.validate(spectrum.size());
        if (!(T > 0.0)) throw constraint_error("T must be > 0");
        if (n_grid.empty()) throw constraint_error("n grid must be nonempty");
        for (std::size_t n : n_grid) {
            if (n == 0 || m % n != 0) throw constraint_error("every n must divide m");
        }
        if (!(p >= 1.0)) throw constraint_error("p must be >= 1");
        if (gamma < 0.0 || alpha < 0.0) throw constraint_error("alpha, gamma must be >= 0");
    }
};

struct ErrorRow {
    std::size_t n = 0;
    double error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double bound_theta1 = 0.0;
    double bound_theta2 = 0.0;
};

struct ErrorTable {
    std::vector<ErrorRow> rows;
    double theta1 = std::numeric_limits<double>::quiet_NaN();
    double theta2 = std::numeric_limits<double>::quiet_NaN();
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<double> residuals;
};

// Supremum of admissible theta under theta + gamma < 1 and
// (alpha - beta + theta)^+ + gamma < 1/2:  min(1 - gamma, 1/2 - gamma - (alpha - beta)).
inline double theta_max(double alpha, double beta, double gamma) {
    if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
        throw constraint_error("theta_max requires alpha, beta, gamma >= 0");
    if (gamma >= 0.5)
        throw constraint_error("infeasible: (alpha-beta+theta)^+ + gamma < 1/2 fails (gamma >= 1/2)");
    const double from_time = 1.0 - gamma;
    const double from_smoothing = 0.5 - gamma - (alpha - beta);
    const double v = std::min(from_time, from_smoothing);
    if (v <= 0.0) {
        if (from_smoothing <= 0.0)
            throw constraint_error("infeasible: (alpha-beta+theta)^+ + gamma < 1/2 has no theta > 0");
        throw constraint_error("infeasible: theta + gamma < 1 has no theta > 0");
    }
    return v;
}

// Least squares of log err = -slope * log n + intercept.
inline RateFit fit_loglog(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw constraint_error("fit_loglog requires >= 3 points");
    std::vector<double> x(points.size()), y(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].second > 0.0))
            throw constraint_error("fit_loglog requires err > 0 at every point");
        x[i] = std::log(points[i].first);
        y[i] = std::log(points[i].second);
    }
    const double N = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= N;
    my /= N;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    RateFit fit;
    const double b = sxy / sxx;
    fit.slope = -b;
    fit.intercept = my - b * mx;
    fit.residuals.resize(points.size());
    double ss_res = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        fit.residuals[i] = y[i] - (fit.intercept + b * x[i]);
        ss_res += fit.residuals[i] * fit.residuals[i];
    }
    fit.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

inline RateFit fit_loglog(const ErrorTable& table) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(table.rows.size());
    for (const auto& r : table.rows) pts.emplace_back(static_cast<double>(r.n), r.error);
    return fit_loglog(pts);
}

namespace detail {

// Theoretical envelopes n^{-theta} t^{1/2-(alpha-beta+theta)^+} for two probe
// thetas, constants pinned at the coarsest n.
inline void attach_bounds(ErrorTable& table, double alpha, double beta, double gamma) {
    double theta_sup;
    try {
        theta_sup = theta_max(alpha, beta, gamma);
    } catch (const constraint_error&) {
        return; // no admissible theta, leave envelopes at zero
    }
    table.theta1 = 0.5 * theta_sup;
    table.theta2 = 0.9 * theta_sup;
    if (table.rows.empty()) return;
    const double n0 = static_cast<double>(table.rows.front().n);
    const double e0 = table.rows.front().error;
    for (auto& row : table.rows) {
        const double ratio = n0 / static_cast<double>(row.n);
        row.bound_theta1 = e0 * std::pow(ratio, table.theta1);
        row.bound_theta2 = e0 * std::pow(ratio, table.theta2);
    }
}

} // namespace detail

// Deterministic final-time mean-square sweep: rows are
// (n, error_gamma_norm_sq(n, T, alpha)^{1/2}) with no randomness.
inline ErrorTable ms_error_sweep(const SweepConfig& config) {
    config.validate();
    ErrorTable table;
    table.rows.resize(config.n_grid.size());
    parallel_for(config.n_grid.size(), config.threads, [&](std::size_t idx) {
        const std::size_t n = config.n_grid[idx];
        const auto res =
            error_gamma_norm_sq(config.spectrum, config.noise, n, config.T, config.alpha, config.T);
        ErrorRow row;
        row.n = n;
        row.error = std::sqrt(res.value_sq);
        row.ci_low = row.error;
        row.ci_high = row.error;
        table.rows[idx] = row;
    });
    detail::attach_bounds(table, config.alpha, config.noise.beta, 0.0);
    return table;
}

namespace detail {

// Pathwise C^gamma error of one sample at one resolution n, from the shared
// fine path. Spectral mode: weighted coefficient differences in E_{sigma_E +
// alpha}; spatial mode: C^{2 delta}[0,1] norms of the reconstructed field.
class PathwiseEvaluator {
  public:
    PathwiseEvaluator(const SweepConfig& config, const SinTable* sins)
        : config_(config), sins_(sins) {
        const std::size_t K = config.spectrum.size();
        weights_.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            weights_[k] = config.noise.iota_at(k) *
                          fractional_weight(config.spectrum.eigenvalues[k], config.spectrum.shift,
                                            config.noise.sigma_E + config.alpha);
        }
        times_.resize(config.m + 1);
        for (std::size_t i = 0; i <= config.m; ++i) {
            times_[i] = config.T * static_cast<double>(i) / static_cast<double>(config.m);
        }
    }

    double error_norm(const CoefficientPath& exact, const CoefficientPath& approx) const {
        const std::size_t K = config_.spectrum.size();
        const std::size_t m = config_.m;
        std::vector<std::vector<double>> values(m + 1);
        std::vector<double> diff(K);
        for (std::size_t i = 0; i <= m; ++i) {
            for (std::size_t k = 0; k < K; ++k) {
                diff[k] = approx.coeffs[k][i] - exact.coeffs[k][i];
            }
            if (config_.spatial) {
                sins_->field_into(diff, values[i]);
            } else {
                values[i].resize(K);
                for (std::size_t k = 0; k < K; ++k) values[i][k] = weights_[k] * diff[k];
            }
        }
        if (config_.spatial) {
            const double two_delta = 2.0 * config_.delta_space;
            auto norm = [two_delta](const std::vector<double>& f) {
                return space_holder_norm(f, two_delta, PairPolicy::dyadic_gaps);
            };
            return c_gamma_norm(values, times_, config_.gamma, norm, config_.policy);
        }
        auto norm = [](const std::vector<double>& v) {
            double acc = 0.0;
            for (double x : v) acc += x * x;
            return std::sqrt(acc);
        };
        return c_gamma_norm(values, times_, config_.gamma, norm, config_.policy);
    }

  private:
    const SweepConfig& config_;
    const SinTable* sins_;
    std::vector<double> weights_;
    std::vector<double> times_;
};

} // namespace detail

// Monte Carlo pathwise sweep: for each n, the p-moment over M shared-path
// samples of the C^gamma([0,T]; .) error norm, with delta-method CIs (95%).
inline ErrorTable pathwise_error_sweep(const SweepConfig& config) {
    config.validate();
    theta_max(config.alpha, config.noise.beta, config.gamma); // feasibility gate
    if (config.M < 2) throw constraint_error("pathwise sweep requires M >= 2");

    const SinTable sins = config.spatial
                              ? SinTable(config.spectrum.size(), config.spatial_points)
                              : SinTable(1, 1);
    const detail::PathwiseEvaluator eval(config, &sins);

    GridSpec grid{config.T, config.n_grid.front(), config.m};
    std::vector<std::vector<double>> errs(config.n_grid.size(),
                                          std::vector<double>(config.M, 0.0));
    parallel_for(config.M, config.threads, [&](std::size_t sample) {
        const FinePath path =
            sample_fine_path(config.spectrum, grid, sample_seed(config.seed, sample));
        const CoefficientPath exact = exact_path(path, config.spectrum);
        for (std::size_t idx = 0; idx < config.n_grid.size(); ++idx) {
            const CoefficientPath approx =
                discretized_path(path, config.spectrum, config.n_grid[idx]);
            errs[idx][sample] = eval.error_norm(exact, approx);
        }
    });

    ErrorTable table;
    table.rows.resize(config.n_grid.size());
    for (std::size_t idx = 0; idx < config.n_grid.size(); ++idx) {
        const MomentEstimate est = p_moment(errs[idx], config.p);
        ErrorRow row;
        row.n = config.n_grid[idx];
        row.error = est.value;
        row.ci_low = est.value - 1.96 * est.std_error;
        row.ci_high = est.value + 1.96 * est.std_error;
        table.rows[idx] = row;
    }
    detail::attach_bounds(table, config.alpha, config.noise.beta, config.gamma);
    return table;
}

// Single-path probe of the almost-sure rate: sup over the n grid of
// n^theta * (pathwise C^gamma error), for the path drawn from config.seed.
struct ASRateResult {
    double statistic = 0.0;
    std::vector<std::pair<std::size_t, double>> per_n; // (n, n^theta * error)
};

inline ASRateResult as_rate_check(const SweepConfig& config, double theta) {
    config.validate();
    const double sup = theta_max(config.alpha, config.noise.beta, config.gamma);
    if (!(theta < sup)) throw constraint_error("as_rate_check requires theta < theta_max");

    const SinTable sins = config.spatial
                              ? SinTable(config.spectrum.size(), config.spatial_points)
                              : SinTable(1, 1);
    const detail::PathwiseEvaluator eval(config, &sins);

    GridSpec grid{config.T, config.n_grid.front(), config.m};
    const FinePath path = sample_fine_path(config.spectrum, grid, config.seed);
    const CoefficientPath exact = exact_path(path, config.spectrum);

    ASRateResult out;
    out.per_n.resize(config.n_grid.size());
    parallel_for(config.n_grid.size(), config.threads, [&](std::size_t idx) {
        const std::size_t n = config.n_grid[idx];
        const CoefficientPath approx = discretized_path(path, config.spectrum, n);
        const double err = eval.error_norm(exact, approx);
        out.per_n[idx] = {n, std::pow(static_cast<double>(n), theta) * err};
    });
    for (const auto& [n, v] : out.per_n) out.statistic = std::max(out.statistic, v);
    return out;
}

// Stochastic heat equation demo: pathwise sweep where the state norm is
// C^gamma in time of the spatial C^{2 delta}[0,1] norm of the reconstructed
// field. Feasible when gamma + delta_space + theta < 1/4 with a compatible
// extrapolation encoding (sigma_E < -1/4 and alpha + sigma_E > delta_space).
struct HeatDemoResult {
    ErrorTable table;
    RateFit fit;
    double theta_ceiling = 0.0; // 1/4 - gamma - delta_space
};

inline HeatDemoResult heat_demo(const SweepConfig& base, double theta_probe) {
    SweepConfig config = base;
    config.spatial = true;
    config.validate();
    const double ceiling = 0.25 - config.gamma - config.delta_space;
    if (!(theta_probe >= 0.0) || !(config.gamma + config.delta_space + theta_probe < 0.25))
        throw constraint_error("infeasible: gamma+delta_space+theta < 1/4 fails");
    if (!(config.noise.sigma_E < -0.25))
        throw constraint_error("infeasible: sigma_E < -1/4 fails");
    if (!(config.alpha + config.noise.sigma_E > config.delta_space))
        throw constraint_error("infeasible: alpha+sigma_E > delta_space fails");

    HeatDemoResult out;
    out.theta_ceiling = ceiling;
    out.table = pathwise_error_sweep(config);
    out.fit = fit_loglog(out.table);
    return out;
}

inline HeatDemoResult heat_demo(const SweepConfig& base) {
    const double ceiling = 0.25 - base.gamma - base.delta_space;
    if (!(ceiling > 0.0)) throw constraint_error("infeasible: gamma+delta_space+theta < 1/4 fails");
    return heat_demo(base, 0.8 * ceiling);
}

} // namespace splitflow
