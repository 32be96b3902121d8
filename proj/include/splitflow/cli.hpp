#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitflow/counterexample.hpp"
#include "splitflow/errors.hpp"
#include "splitflow/gamma_calculus.hpp"
#include "splitflow/norms_stats.hpp"
#include "splitflow/path_sim.hpp"
#include "splitflow/rate_lab.hpp"
#include "splitflow/spectral_model.hpp"

namespace splitflow::cli {

using nlohmann::json;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0; // 0 = hardware concurrency
    std::string out_dir = ".";
};

namespace detail {

inline unsigned effective_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

inline json load_config(const GlobalOptions& opts) {
    if (opts.config_path.empty()) return json::object();
    std::ifstream in(opts.config_path);
    if (!in) throw constraint_error("cannot open config file: " + opts.config_path);
    json cfg;
    in >> cfg;
    return cfg;
}

inline std::uint64_t resolve_seed(const GlobalOptions& opts, const json& cfg,
                                  std::uint64_t fallback) {
    if (opts.seed) return *opts.seed;
    if (const char* env = std::getenv("SPLITFLOW_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    if (cfg.contains("mc") && cfg["mc"].contains("seed")) {
        return cfg["mc"]["seed"].get<std::uint64_t>();
    }
    return fallback;
}

inline std::vector<std::size_t> pow2_range(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> out;
    for (std::size_t n = lo; n <= hi; n *= 2) out.push_back(n);
    return out;
}

inline SweepConfig sweep_from_json(const json& cfg, const SweepConfig& defaults) {
    SweepConfig sc = defaults;
    if (cfg.contains("model")) {
        const json& mj = cfg["model"];
        const std::string kind = mj.value("kind", "dirichlet");
        const auto K = mj.value("K", static_cast<std::uint64_t>(defaults.spectrum.size()));
        if (kind == "dirichlet") {
            sc.spectrum = dirichlet_spectrum(K);
        } else if (kind == "general") {
            sc.spectrum.kind = SpectrumKind::general;
            sc.spectrum.eigenvalues = mj.at("eigenvalues").get<std::vector<double>>();
            sc.spectrum.shift = mj.value("w", 0.0);
        } else {
            throw constraint_error("unknown model kind: " + kind);
        }
        sc.noise.sigma_E = mj.value("sigma_E", defaults.noise.sigma_E);
        sc.noise.beta = mj.value("beta", defaults.noise.beta);
        if (mj.contains("iota")) sc.noise.iota = mj["iota"].get<std::vector<double>>();
    }
    if (cfg.contains("grid")) {
        const json& gj = cfg["grid"];
        sc.T = gj.value("T", defaults.T);
        sc.m = gj.value("m", static_cast<std::uint64_t>(defaults.m));
        if (gj.contains("n")) sc.n_grid = gj["n"].get<std::vector<std::size_t>>();
    }
    if (cfg.contains("norm")) {
        const json& nj = cfg["norm"];
        sc.alpha = nj.value("alpha", defaults.alpha);
        sc.gamma = nj.value("gamma", defaults.gamma);
        sc.p = nj.value("p", defaults.p);
        sc.spatial = nj.value("spatial", defaults.spatial);
        sc.delta_space = nj.value("delta_space", defaults.delta_space);
        sc.spatial_points =
            nj.value("spatial_points", static_cast<std::uint64_t>(defaults.spatial_points));
        const std::string policy = nj.value("pair_policy", "dyadic-gaps");
        if (policy == "dyadic-gaps") {
            sc.policy = PairPolicy::dyadic_gaps;
        } else if (policy == "all-pairs") {
            sc.policy = PairPolicy::all_pairs;
        } else {
            throw constraint_error("unknown pair_policy: " + policy);
        }
    }
    if (cfg.contains("mc")) {
        const json& mcj = cfg["mc"];
        sc.M = mcj.value("M", static_cast<std::uint64_t>(defaults.M));
    }
    return sc;
}

inline void write_rate_csv(const std::filesystem::path& path, const ErrorTable& table) {
    std::ofstream os(path);
    if (!os) throw numerical_error("cannot write " + path.string());
    os << "# splitflow-v1\n";
    os << "n,error,ci_low,ci_high,bound_theta1,bound_theta2\n";
    char line[256];
    for (const auto& r : table.rows) {
        std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.n, r.error,
                      r.ci_low, r.ci_high, r.bound_theta1, r.bound_theta2);
        os << line;
    }
}

inline void write_divergence_csv(const std::filesystem::path& path,
                                 const std::vector<DivergenceRow>& rows) {
    std::ofstream os(path);
    if (!os) throw numerical_error("cannot write " + path.string());
    os << "# splitflow-v1\n";
    os << "n,mc_estimate,ci_low,ci_high,subwindow_quantity,lower_bound,exact_moment\n";
    char line[320];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%u,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.n,
                      r.mc_estimate, r.ci_low, r.ci_high, r.subwindow_quantity, r.lower_bound,
                      r.exact_moment);
        os << line;
    }
}

inline void write_summary(const std::filesystem::path& path, const std::string& experiment,
                          const json& theta_max_value, double slope, double r2, bool pass,
                          double runtime_s) {
    json summary;
    summary["experiment"] = experiment;
    summary["theta_max"] = theta_max_value;
    summary["slope"] = slope;
    summary["r2"] = r2;
    summary["pass"] = pass;
    summary["runtime_s"] = runtime_s;
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    summary["timestamp"] = stamp; // timestamps live only in the JSON summary
    std::ofstream os(path);
    if (!os) throw numerical_error("cannot write " + path.string());
    os << summary.dump(2) << "\n";
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// Rows of a rate CSV: first column n, second err; '#' lines and a non-numeric
// header line are skipped.
inline std::vector<std::pair<double, double>> read_fit_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw constraint_error("cannot open CSV: " + path);
    std::vector<std::pair<double, double>> points;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double n = 0.0, err = 0.0;
        if (row >> n >> err) points.emplace_back(n, err);
    }
    if (points.size() < 3) throw constraint_error("CSV has fewer than 3 parseable rows");
    return points;
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline int run_selftest() {
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
        if (!ok) ++failures;
    };
    const double pi = std::numbers::pi;
    check(close_rel(dirichlet_spectrum(1).eigenvalues[0], -pi * pi, 1e-12),
          "dirichlet lambda_1 = -pi^2");
    check(semigroup_factor(-3.0, 0.0) == 1.0, "S(0) = I");
    check(close_rel(semigroup_factor(-1.0, 1.0), std::exp(-1.0), 1e-15), "S(1) on lambda=-1");
    check(close_rel(discretized_semigroup_factor(-1.0, 0.3, 2, 1.0), std::exp(-0.5), 1e-12),
          "staircase factor ceil(0.6) = 1");
    check(fractional_weight(-pi * pi, 0.0, 0.5) == pi, "(pi^2)^{1/2} = pi");
    check(j_factor(0.0, 0.7) == 0.7, "J(0,t) = t");
    check(error_kernel_integral(0.0, 4, 1.0, 1.0) == 0.0, "zero mode is exact");
    check(close_rel(discretized_kernel_integral(-1.0, 1, 1.0, 1.0), std::exp(-2.0), 1e-12),
          "single-cell discretised kernel");
    check(close_rel(gaussian_abs_moment(2.0), 1.0, 1e-12), "E gamma^2 = 1");
    check(close_rel(gaussian_abs_moment(4.0), 3.0, 1e-12), "E gamma^4 = 3");
    check(close_rel(divergence_threshold(1.0, 3.0, 0.25), 12.0, 1e-12), "divergence threshold");
    check(close_rel(theta_max(0.0, 0.0, 0.0), 0.5, 1e-12), "theta_max base case");
    check(close_rel(theta_max(0.0, 1.0, 0.0), 1.0, 1e-12), "theta_max smooth-noise cap");
    {
        const StepCov cov = coupled_step_cov(0.0, 0.1);
        check(cov.cov == 0.1 && cov.var_eta == 0.1, "degenerate coupling at lambda=0");
    }
    {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t n = 4; n <= 64; n *= 2)
            pts.emplace_back(static_cast<double>(n), 3.0 / std::sqrt(static_cast<double>(n)));
        const RateFit fit = fit_loglog(pts);
        check(close_rel(fit.slope, 0.5, 1e-12) && close_rel(fit.r2, 1.0, 1e-12),
              "exact power law fit");
    }
    {
        const auto prof = DyadicProfile{1.0, 3.0, 0.25, 4};
        check(eval_profile(-0.5, prof).entries.empty() && eval_profile(0.5, prof).entries.empty(),
              "profile support and half-open slots");
        const auto v = eval_profile(0.51, prof);
        check(v.entries.size() == 1 && v.entries[0].index == 1 &&
                  close_rel(v.entries[0].value, std::exp2(-0.25), 1e-14),
              "profile at t=0.51 hits level 1 only");
    }
    std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 3;
}

} // namespace detail

// Runs a parsed experiment. Exit codes: 0 success, 2 constraint violation or
// malformed invocation, 3 numerical failure.
inline int run(const std::vector<std::string>& args) {
    CLI::App app{"splitflow: splitting-scheme rate experiments for the linear "
                 "stochastic Cauchy problem"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "JSON config file");
    std::uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "RNG seed (overrides config/env)");
    app.add_option("--threads", opts.threads, "worker threads (0 = hardware)");
    app.add_option("--out", opts.out_dir, "output directory");

    auto* ms = app.add_subcommand("ms-sweep", "deterministic mean-square rate sweep");
    auto* ps = app.add_subcommand("path-sweep", "Monte Carlo pathwise Hoelder-norm sweep");
    std::string dump_path;
    ps->add_option("--dump-path", dump_path, "dump the first sample's fine path (binary)");
    auto* hd = app.add_subcommand("heat-demo", "stochastic heat equation spatial-norm demo");
    auto* ce = app.add_subcommand("counterexample", "divergence counterexample table");
    auto* fit_cmd = app.add_subcommand("fit", "log-log slope fit of a rate CSV");
    std::string fit_csv;
    fit_cmd->add_option("csv", fit_csv, "CSV with columns n,error")->required();
    auto* st = app.add_subcommand("selftest", "run the built-in example checks");

    std::vector<const char*> argv;
    argv.push_back("splitflow");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const json cfg = detail::load_config(opts);
        if (seed_opt->count() > 0) opts.seed = seed_flag;
        const unsigned threads = detail::effective_threads(
            opts.threads > 0 ? opts.threads : cfg.value("threads", 0u));
        std::filesystem::create_directories(opts.out_dir);
        const std::filesystem::path out_dir(opts.out_dir);

        if (st->parsed()) return detail::run_selftest();

        if (fit_cmd->parsed()) {
            detail::Timer timer;
            const auto points = detail::read_fit_csv(fit_csv);
            const RateFit fit = fit_loglog(points);
            bool pass = true;
            if (cfg.contains("slope_band")) {
                const auto band = cfg["slope_band"].get<std::vector<double>>();
                pass = fit.slope >= band.at(0) && fit.slope <= band.at(1);
            }
            detail::write_summary(out_dir / "fit_summary.json", "fit", nullptr, fit.slope,
                                  fit.r2, pass, timer.seconds());
            std::cout << "slope " << fit.slope << "  r2 " << fit.r2 << "\n";
            return pass ? 0 : 2;
        }

        if (ms->parsed()) {
            detail::Timer timer;
            SweepConfig defaults;
            defaults.spectrum = dirichlet_spectrum(4096);
            defaults.noise.sigma_E = -0.3;
            defaults.noise.beta = 0.0;
            defaults.n_grid = detail::pow2_range(4, 1024);
            defaults.m = defaults.n_grid.back();
            defaults.alpha = 0.0;
            SweepConfig sc = detail::sweep_from_json(cfg, defaults);
            sc.m = sc.n_grid.back(); // deterministic sweep needs no fine grid
            sc.threads = threads;
            const ErrorTable table = ms_error_sweep(sc);
            const RateFit fit = fit_loglog(table);
            const double target = std::min(1.0, 0.5 - sc.alpha + sc.noise.beta);
            std::vector<double> band{target - 0.05, target + 0.05};
            if (cfg.contains("slope_band")) band = cfg["slope_band"].get<std::vector<double>>();
            const bool pass = fit.slope >= band.at(0) && fit.slope <= band.at(1);
            detail::write_rate_csv(out_dir / "ms_sweep.csv", table);
            detail::write_summary(out_dir / "ms_sweep_summary.json", "ms-sweep", target,
                                  fit.slope, fit.r2, pass, timer.seconds());
            std::cout << "ms-sweep slope " << fit.slope << " (target " << target << ")  pass="
                      << pass << "\n";
            return pass ? 0 : 2;
        }

        if (ps->parsed()) {
            detail::Timer timer;
            SweepConfig defaults;
            defaults.spectrum = dirichlet_spectrum(512);
            defaults.noise.sigma_E = -0.3;
            defaults.noise.beta = 0.0;
            defaults.n_grid = detail::pow2_range(8, 256);
            defaults.m = 1024;
            defaults.M = 200;
            defaults.gamma = 0.1;
            defaults.alpha = 0.0;
            defaults.p = 2.0;
            SweepConfig sc = detail::sweep_from_json(cfg, defaults);
            sc.seed = detail::resolve_seed(opts, cfg, sc.seed);
            sc.threads = threads;
            if (!dump_path.empty()) {
                GridSpec grid{sc.T, sc.n_grid.front(), sc.m};
                const FinePath path =
                    sample_fine_path(sc.spectrum, grid, sample_seed(sc.seed, 0));
                std::ofstream os(dump_path, std::ios::binary);
                dump_fine_path(path, os);
            }
            const ErrorTable table = pathwise_error_sweep(sc);
            const RateFit fit = fit_loglog(table);
            const double tmax = theta_max(sc.alpha, sc.noise.beta, sc.gamma);
            std::vector<double> band{tmax - 0.1, tmax + 0.2};
            if (cfg.contains("slope_band")) band = cfg["slope_band"].get<std::vector<double>>();
            const bool pass = fit.slope >= band.at(0) && fit.slope <= band.at(1);
            detail::write_rate_csv(out_dir / "path_sweep.csv", table);
            detail::write_summary(out_dir / "path_sweep_summary.json", "path-sweep", tmax,
                                  fit.slope, fit.r2, pass, timer.seconds());
            std::cout << "path-sweep slope " << fit.slope << " (theta_max " << tmax
                      << ")  pass=" << pass << "\n";
            return pass ? 0 : 2;
        }

        if (hd->parsed()) {
            detail::Timer timer;
            SweepConfig defaults;
            defaults.spectrum = dirichlet_spectrum(256);
            defaults.noise.sigma_E = -0.3;
            defaults.noise.beta = 0.0;
            defaults.n_grid = detail::pow2_range(8, 128);
            defaults.m = 512;
            defaults.M = 64;
            defaults.gamma = 0.0;
            defaults.alpha = 0.35;
            defaults.p = 2.0;
            defaults.spatial = true;
            defaults.delta_space = 0.0;
            defaults.spatial_points = 256;
            SweepConfig sc = detail::sweep_from_json(cfg, defaults);
            sc.seed = detail::resolve_seed(opts, cfg, sc.seed);
            sc.threads = threads;
            const HeatDemoResult result = heat_demo(sc);
            std::vector<double> band{result.theta_ceiling - 0.1, result.theta_ceiling + 0.1};
            if (cfg.contains("slope_band")) band = cfg["slope_band"].get<std::vector<double>>();
            const bool pass = result.fit.slope >= band.at(0) && result.fit.slope <= band.at(1);
            detail::write_rate_csv(out_dir / "heat_demo.csv", result.table);
            detail::write_summary(out_dir / "heat_demo_summary.json", "heat-demo",
                                  result.theta_ceiling, result.fit.slope, result.fit.r2, pass,
                                  timer.seconds());
            std::cout << "heat-demo slope " << result.fit.slope << " (ceiling "
                      << result.theta_ceiling << ")  pass=" << pass << "\n";
            return pass ? 0 : 2;
        }

        if (ce->parsed()) {
            detail::Timer timer;
            DivergenceConfig dc;
            if (cfg.contains("counterexample")) {
                const json& cj = cfg["counterexample"];
                dc.p = cj.value("p", dc.p);
                dc.u = cj.value("u", dc.u);
                dc.r = cj.value("r", dc.r);
                dc.q = cj.value("q", dc.q);
                if (cj.contains("n")) dc.n_list = cj["n"].get<std::vector<unsigned>>();
                dc.M = cj.value("M", static_cast<std::uint64_t>(dc.M));
                dc.s_uniform = cj.value("s_uniform", static_cast<std::uint64_t>(dc.s_uniform));
                dc.s_per_octave = cj.value("s_per_octave", dc.s_per_octave);
                dc.level_margin = cj.value("level_margin", dc.level_margin);
            }
            dc.seed = detail::resolve_seed(opts, cfg, dc.seed);
            dc.threads = threads;
            const auto rows = mc_divergence_estimate(dc);
            bool increasing = true;
            bool bounded = true;
            double moment_lo = rows.front().exact_moment, moment_hi = rows.front().exact_moment;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (i > 0 && !(rows[i].mc_estimate > rows[i - 1].mc_estimate)) increasing = false;
                if (!(rows[i].subwindow_quantity >= rows[i].lower_bound)) bounded = false;
                moment_lo = std::min(moment_lo, rows[i].exact_moment);
                moment_hi = std::max(moment_hi, rows[i].exact_moment);
            }
            const bool moment_stable = (moment_hi - moment_lo) <= 0.01 * moment_hi;
            const bool pass = increasing && bounded && moment_stable;
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : rows)
                pts.emplace_back(static_cast<double>(r.n), r.mc_estimate);
            const RateFit fit = fit_loglog(pts); // negative slope = growth
            detail::write_divergence_csv(out_dir / "counterexample.csv", rows);
            detail::write_summary(out_dir / "counterexample_summary.json", "counterexample",
                                  nullptr, fit.slope, fit.r2, pass, timer.seconds());
            std::cout << "counterexample increasing=" << increasing << " bounded=" << bounded
                      << " pass=" << pass << "\n";
            return pass ? 0 : 2;
        }
    } catch (const constraint_error& e) {
        std::cerr << "constraint violation: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "malformed config: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

inline int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace splitflow::cli
