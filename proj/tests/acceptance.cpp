// Acceptance suite: one pass/fail line per criterion, exit code = #failures.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "splitflow/splitflow.hpp"
#include "support/oracles.hpp"

using namespace splitflow;

namespace {

unsigned hw_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 2;
}

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run_criterion(int id, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [pass, detail] = body();
        report(id, pass, detail);
    } catch (const std::exception& e) {
        report(id, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

SweepConfig heat_base(std::size_t K) {
    SweepConfig sc;
    sc.spectrum = dirichlet_spectrum(K);
    sc.noise.sigma_E = -0.3;
    sc.noise.beta = 0.0;
    sc.T = 1.0;
    sc.threads = hw_threads();
    return sc;
}

// 1. deterministic final-time mean-square slopes
std::pair<bool, std::string> criterion1() {
    SweepConfig sc = heat_base(4096);
    sc.n_grid.clear();
    for (std::size_t n = 4; n <= 1024; n *= 2) sc.n_grid.push_back(n);
    sc.m = 1024;

    sc.alpha = 0.0;
    const double slope0 = fit_loglog(ms_error_sweep(sc)).slope;
    sc.alpha = 0.25;
    const double slope25 = fit_loglog(ms_error_sweep(sc)).slope;
    const bool pass = slope0 >= 0.45 && slope0 <= 0.55 && slope25 >= 0.20 && slope25 <= 0.30;
    return {pass, fmt("ms slopes alpha=0: %.4f in [0.45,0.55], alpha=0.25: %.4f in [0.20,0.30]",
                      slope0, slope25)};
}

// 2. Ito isometry cross-check, MC vs closed form within 3 standard errors
std::pair<bool, std::string> criterion2() {
    const std::size_t K = 256, m = 256, M = 2000;
    const auto spec = dirichlet_spectrum(K);
    NoiseModel noise;
    noise.sigma_E = -0.3;
    const double alpha = 0.0;
    const GridSpec grid{1.0, 8, m};

    std::vector<double> weights(K);
    for (std::size_t k = 0; k < K; ++k) {
        weights[k] = fractional_weight(spec.eigenvalues[k], 0.0, 2.0 * (noise.sigma_E + alpha));
    }

    bool pass = true;
    std::string detail = "isometry";
    for (std::size_t n : {std::size_t{8}, std::size_t{64}}) {
        std::vector<double> sq(M);
        parallel_for(M, hw_threads(), [&](std::size_t s) {
            const FinePath path = sample_fine_path(spec, grid, sample_seed(0xA11CE, s));
            const auto exact = exact_path(path, spec);
            const auto approx = splitting_path(path, spec, n);
            const std::size_t R = m / n;
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double d = approx.coeffs[k][n] - exact.coeffs[k][R * n];
                acc += weights[k] * d * d;
            }
            sq[s] = acc;
        });
        const double mc = oracle::mean(sq);
        const double se = oracle::std_error(sq);
        const double closed = error_gamma_norm_sq(spec, noise, n, 1.0, alpha, 1.0).value_sq;
        const double dev = std::abs(mc - closed) / se;
        pass = pass && dev <= 3.0;
        detail += fmt(" | n=%zu dev=%.2f se", n, dev);
    }
    return {pass, detail};
}

// 3. discretized_path at coarse indices equals splitting_path, 100 random configs
std::pair<bool, std::string> criterion3() {
    oracle::UniformGen gen(303);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        GeneratorSpectrum spec;
        const int K = 1 + static_cast<int>(gen.in(0.0, 6.0));
        for (int k = 0; k < K; ++k) {
            spec.eigenvalues.push_back(-std::exp(gen.in(std::log(1e-3), std::log(300.0))));
        }
        const std::size_t n = 1 + static_cast<std::size_t>(gen.in(0.0, 16.0));
        const std::size_t R = 1 + static_cast<std::size_t>(gen.in(0.0, 8.0));
        const GridSpec grid{gen.in(0.5, 2.0), n, n * R};
        const FinePath path =
            sample_fine_path(spec, grid, 1000 + static_cast<std::uint64_t>(rep));
        const auto fine = discretized_path(path, spec, n);
        const auto coarse = splitting_path(path, spec, n);
        for (int k = 0; k < K; ++k) {
            double scale = 0.0;
            for (std::size_t j = 0; j <= n; ++j) {
                scale = std::max(scale, std::abs(coarse.coeffs[k][j]));
            }
            for (std::size_t j = 0; j <= n; ++j) {
                const double a = fine.coeffs[k][j * R];
                const double b = coarse.coeffs[k][j];
                const double rel =
                    std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8 * scale, 1e-300});
                worst = std::max(worst, rel);
            }
        }
    }
    return {worst <= 1e-10, fmt("coarse-index identity, worst relative deviation %.3g", worst)};
}

// 4. coupling covariance over 1e5 draws, entrywise within 4 standard errors
std::pair<bool, std::string> criterion4() {
    const std::size_t M = 100000;
    bool pass = true;
    double worst = 0.0;
    for (double lam : {0.0, -1.0, -100.0}) {
        for (double delta : {1e-3, 0.1}) {
            GeneratorSpectrum spec;
            spec.eigenvalues = {lam};
            spec.shift = (lam == 0.0) ? 1.0 : 0.0;
            const GridSpec grid{delta, 1, 1};
            std::vector<double> xx(M), xy(M), yy(M);
            parallel_for(M, hw_threads(), [&](std::size_t s) {
                const FinePath p = sample_fine_path(spec, grid, sample_seed(0xC0FFEE, s));
                const double x = p.dbeta[0][0];
                const double y = p.eta[0][0];
                xx[s] = x * x;
                xy[s] = x * y;
                yy[s] = y * y;
            });
            const StepCov cov = coupled_step_cov(lam, delta);
            // exact sampling variances of the empirical second moments
            const double se_xx = std::sqrt(2.0 * cov.var_dbeta * cov.var_dbeta / double(M));
            const double se_xy = std::sqrt(
                (cov.var_dbeta * cov.var_eta + cov.cov * cov.cov) / double(M));
            const double se_yy = std::sqrt(2.0 * cov.var_eta * cov.var_eta / double(M));
            const double d_xx = std::abs(oracle::mean(xx) - cov.var_dbeta) / se_xx;
            const double d_xy = std::abs(oracle::mean(xy) - cov.cov) / se_xy;
            const double d_yy = std::abs(oracle::mean(yy) - cov.var_eta) / se_yy;
            worst = std::max({worst, d_xx, d_xy, d_yy});
            pass = pass && d_xx <= 4.0 && d_xy <= 4.0 && d_yy <= 4.0;
        }
    }
    return {pass, fmt("coupling covariance, worst deviation %.2f of 4 se", worst)};
}

// 5. Hoelder-norm rate (C^gamma([0,T];E) moment slope)
std::pair<bool, std::string> criterion5() {
    SweepConfig sc = heat_base(512);
    sc.n_grid = {8, 16, 32, 64, 128, 256};
    sc.m = 1024;
    sc.M = 200;
    sc.alpha = 0.0;
    sc.gamma = 0.1;
    sc.p = 2.0;
    sc.seed = 0x5EEDF00Dull;
    const ErrorTable table = pathwise_error_sweep(sc);
    const double slope = fit_loglog(table).slope;
    const double tmax = theta_max(sc.alpha, sc.noise.beta, sc.gamma);
    return {slope >= 0.30 && slope <= 0.60,
            fmt("Hoelder sweep slope %.4f in [0.30,0.60] (theta_max %.2f)", slope, tmax)};
}

// 6. heat-equation spatial rate (sup in time of the spatial norm)
std::pair<bool, std::string> criterion6() {
    SweepConfig sc = heat_base(256);
    sc.n_grid = {8, 16, 32, 64, 128};
    sc.m = 512;
    sc.M = 64;
    sc.alpha = 0.35; // encoding feasibility: alpha + sigma_E > delta_space
    sc.gamma = 0.0;
    sc.delta_space = 0.0;
    sc.spatial_points = 256;
    sc.p = 2.0;
    sc.seed = 0x5EEDF00Dull;
    const HeatDemoResult res = heat_demo(sc);
    return {res.fit.slope >= 0.15 && res.fit.slope <= 0.35,
            fmt("heat spatial slope %.4f in [0.15,0.35] (ceiling %.2f)", res.fit.slope,
                res.theta_ceiling)};
}

// 7. almost-sure rate stability across 10 seeds
std::pair<bool, std::string> criterion7() {
    SweepConfig sc = heat_base(128);
    sc.n_grid = {8, 16, 32, 64, 128, 256};
    sc.m = 512;
    sc.alpha = 0.0;
    sc.gamma = 0.1;
    const double theta = 0.8 * theta_max(sc.alpha, sc.noise.beta, sc.gamma);

    std::vector<double> stats;
    std::vector<double> mean_per_n(sc.n_grid.size(), 0.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        sc.seed = seed * 7919;
        const ASRateResult res = as_rate_check(sc, theta);
        stats.push_back(res.statistic);
        for (std::size_t i = 0; i < res.per_n.size(); ++i) mean_per_n[i] += res.per_n[i].second;
    }
    double lo = stats[0], hi = stats[0];
    for (double s : stats) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    bool monotone_growth = true;
    for (std::size_t i = 1; i < mean_per_n.size(); ++i) {
        if (mean_per_n[i] <= mean_per_n[i - 1]) monotone_growth = false;
    }
    const bool pass = (hi / lo < 3.0) && !monotone_growth;
    return {pass, fmt("as-rate statistic spread %.2fx (< 3), mean sequence monotone growth: %s",
                      hi / lo, monotone_growth ? "yes" : "no")};
}

// 8. scalar multiplier identity on 100 random piecewise-constant cases
std::pair<bool, std::string> criterion8() {
    oracle::UniformGen gen(808);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        PiecewiseConstantG g;
        const int cells = 1 + static_cast<int>(gen.in(0.0, 40.0));
        double t = 0.0;
        g.breakpoints.push_back(t);
        for (int c = 0; c < cells; ++c) {
            t += gen.in(0.01, 0.2);
            g.breakpoints.push_back(t);
            g.values.push_back(gen.in(-3.0, 3.0));
        }
        const double R = gen.in(0.1, 10.0);
        const auto id = scalar_multiplier_identity(g, R);
        const double rel = std::abs(id.lhs_sq - id.rhs_sq) /
                           std::max({std::abs(id.lhs_sq), std::abs(id.rhs_sq), 1e-300});
        worst = std::max(worst, rel);
    }
    return {worst <= 1e-12, fmt("gR identity, worst relative deviation %.3g", worst)};
}

// 9. C1 domination bound on a 200-case random sweep + documented instance
std::pair<bool, std::string> criterion9() {
    const auto instance = [] {
        GeneratorSpectrum spec;
        spec.eigenvalues = {-1.0};
        NoiseModel noise;
        noise.sigma_E = 0.0;
        return c1_bound_check(spec, noise, 0.0, 1.0, 0.0);
    }();
    const double lhs_oracle =
        std::sqrt(oracle::romberg([](double s) { return std::exp(-2.0 * s); }, 0.0, 1.0));
    const double rhs_oracle =
        std::exp(-1.0) +
        oracle::romberg([](double s) { return std::sqrt(s) * std::exp(-s); }, 0.0, 1.0);
    bool pass = std::abs(instance.lhs - lhs_oracle) < 1e-9 &&
                std::abs(instance.rhs - rhs_oracle) < 1e-6 && instance.lhs <= instance.rhs;

    oracle::UniformGen gen(909);
    int violations = 0;
    for (int rep = 0; rep < 200; ++rep) {
        GeneratorSpectrum spec;
        const int K = 1 + static_cast<int>(gen.in(0.0, 5.0));
        for (int k = 0; k < K; ++k) {
            spec.eigenvalues.push_back(-std::exp(gen.in(std::log(1e-3), std::log(100.0))));
        }
        NoiseModel noise;
        noise.sigma_E = gen.in(-0.4, 0.2);
        const double a = gen.in(0.0, 0.7);
        const double b = a + gen.in(0.02, 1.0 - a > 0.02 ? 1.0 - a : 0.02);
        const double alpha = gen.in(0.0, 0.25);
        const auto chk = c1_bound_check(spec, noise, a, b, alpha);
        if (!(chk.lhs <= chk.rhs * (1.0 + 1e-12))) ++violations;
    }
    pass = pass && violations == 0;
    return {pass, fmt("C1 bound: instance lhs %.4f <= rhs %.4f, sweep violations %d/200",
                      instance.lhs, instance.rhs, violations)};
}

// 10. divergence counterexample
std::pair<bool, std::string> criterion10() {
    DivergenceConfig dc; // defaults: p=1, u=3, r=0.25, q=16, n=4..8, M=400
    dc.threads = hw_threads();
    const auto rows = mc_divergence_estimate(dc);

    bool increasing = true, bounded = true;
    double moment_lo = rows.front().exact_moment, moment_hi = rows.front().exact_moment;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && !(rows[i].mc_estimate > rows[i - 1].mc_estimate)) increasing = false;
        if (!(rows[i].subwindow_quantity >= rows[i].lower_bound)) bounded = false;
        moment_lo = std::min(moment_lo, rows[i].exact_moment);
        moment_hi = std::max(moment_hi, rows[i].exact_moment);
    }
    // exact moment: finite, spread across rows within the geometric tail bound
    const double tail =
        exact_integral_moment(DyadicProfile{dc.p, dc.u, dc.r,
                                            dc.n_list.front() + dc.level_margin})
            .tail;
    const bool stable = std::isfinite(moment_hi) && (moment_hi - moment_lo) <= tail * 1.01;
    const bool pass = increasing && bounded && stable;
    return {pass, fmt("divergence: increasing=%s, subwindow>=bound=%s, moment spread %.2e <= "
                      "tail %.2e",
                      increasing ? "yes" : "no", bounded ? "yes" : "no", moment_hi - moment_lo,
                      tail)};
}

// 11. zero-mode exactness
std::pair<bool, std::string> criterion11() {
    GeneratorSpectrum spec;
    spec.eigenvalues = {0.0, -1.0, -5.0};
    spec.shift = 0.5;
    NoiseModel noise;
    noise.sigma_E = 0.0;

    const auto res = error_gamma_norm_sq(spec, noise, 4, 1.0, 0.0, 1.0);
    bool pass = res.per_mode[0] <= 1e-14;

    const GridSpec grid{1.0, 4, 32};
    const FinePath path = sample_fine_path(spec, grid, 6021);
    const auto exact = exact_path(path, spec);
    const auto approx = discretized_path(path, spec, 4);
    double worst = 0.0;
    for (std::size_t i = 0; i <= grid.m; ++i) {
        worst = std::max(worst, std::abs(approx.coeffs[0][i] - exact.coeffs[0][i]));
    }
    pass = pass && worst <= 1e-14;
    return {pass, fmt("zero-mode closed-form contribution %.1e, pathwise deviation %.1e",
                      res.per_mode[0], worst)};
}

} // namespace

int main() {
    std::printf("splitflow acceptance suite (%u threads)\n", hw_threads());
    run_criterion(1, criterion1);
    run_criterion(2, criterion2);
    run_criterion(3, criterion3);
    run_criterion(4, criterion4);
    run_criterion(5, criterion5);
    run_criterion(6, criterion6);
    run_criterion(7, criterion7);
    run_criterion(8, criterion8);
    run_criterion(9, criterion9);
    run_criterion(10, criterion10);
    run_criterion(11, criterion11);
    std::printf("%s (%d failure%s)\n", g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES",
                g_failures, g_failures == 1 ? "" : "s");
    return g_failures;
}
