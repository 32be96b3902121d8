#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

#include "splitflow/errors.hpp"
#include "splitflow/norms_stats.hpp"
#include "splitflow/parallel.hpp"
#include "splitflow/rng.hpp"
#include "splitflow/summation.hpp"

namespace splitflow {

// Dyadic profile f in L^inf(R; l^p): at level k = 1..k_max and slot
// j = 0..2^{k-1}-1, f takes the value 2^{-rk/p} e_{2^{k-1}+j} on the interval
// ((2j+1) 2^{-k}, (2j+1) 2^{-k} + 2^{-uk}]. u > 1 keeps the slots of one
// level disjoint, so at most one slot per level contains any given t.
struct DyadicProfile {
    double p = 1.0;
    double u = 3.0;
    double r = 0.25;
    unsigned k_max = 12;

    void validate() const {
        if (!(p >= 1.0 && p < 2.0)) throw constraint_error("profile requires p in [1,2)");
        if (!(u > 2.0 / p)) throw constraint_error("profile requires u > 2/p");
        if (!(r > 0.0 && r < 1.0 - 0.5 * p))
            throw constraint_error("profile requires r in (0, 1 - p/2)");
        if (k_max == 0 || k_max > 50) throw constraint_error("profile requires 1 <= k_max <= 50");
    }
};

struct SparseEntry {
    std::uint64_t index = 0; // 1-based l^p coordinate
    double value = 0.0;
};

struct SparseVec {
    std::vector<SparseEntry> entries; // sorted by index, indices distinct

    double lp_norm_p_pow(double p) const {
        CompensatedSum acc;
        for (const auto& e : entries) acc.add(std::pow(std::abs(e.value), p));
        return acc.value();
    }
};

namespace detail {

// Slot of level k whose interval could contain t, or -1.
inline std::int64_t profile_slot(double t, unsigned k) {
    const double scale = std::exp2(static_cast<double>(k));
    return static_cast<std::int64_t>(std::floor((t * scale - 1.0) * 0.5));
}

inline bool in_profile_interval(double t, unsigned k, std::int64_t j, double width) {
    const double left =
        static_cast<double>(2 * j + 1) / std::exp2(static_cast<double>(k));
    return t > left && t <= left + width;
}

} // namespace detail

// f(t) as a sparse l^p element; at most one entry per level, empty outside (0,1).
inline SparseVec eval_profile(double t, const DyadicProfile& prof) {
    prof.validate();
    SparseVec out;
    if (t <= 0.0 || t >= 1.0) return out; // u > 1 keeps every slot inside (0,1)
    for (unsigned k = 1; k <= prof.k_max; ++k) {
        const std::int64_t half = std::int64_t{1} << (k - 1);
        const std::int64_t j = detail::profile_slot(t, k);
        if (j < 0 || j >= half) continue;
        const double width = std::exp2(-prof.u * static_cast<double>(k));
        if (detail::in_profile_interval(t, k, j, width)) {
            out.entries.push_back({static_cast<std::uint64_t>(half + j),
                                   std::exp2(-prof.r * static_cast<double>(k) / prof.p)});
        }
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
    return out;
}

// E|gamma|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi) for a standard Gaussian.
inline double gaussian_abs_moment(double p) {
    if (!(p >= 0.0)) throw constraint_error("gaussian_abs_moment requires p >= 0");
    return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) / std::sqrt(std::numbers::pi);
}

// E || int_0^1 f dw ||_{l^p}^p truncated at k_max:
//   sum_{k<=k_max} 2^{k(1-r-up/2)-1} E|gamma|^p,
// a geometric series with ratio 2^{1-r-up/2} < 1; `tail` bounds the truncation.
struct TruncatedMoment {
    double value = 0.0;
    double tail = 0.0;
};

inline TruncatedMoment exact_integral_moment(const DyadicProfile& prof) {
    prof.validate();
    const double moment = gaussian_abs_moment(prof.p);
    const double expo = 1.0 - prof.r - 0.5 * prof.u * prof.p; // < 0 by the invariants
    CompensatedSum acc;
    double last = 0.0;
    for (unsigned k = 1; k <= prof.k_max; ++k) {
        last = std::exp2(static_cast<double>(k) * expo - 1.0) * moment;
        acc.add(last);
    }
    const double ratio = std::exp2(expo);
    TruncatedMoment out;
    out.value = acc.value();
    out.tail = last * ratio / (1.0 - ratio);
    return out;
}

// sum_{k=1}^{N} f(k/N + s) dw_k as a sparse accumulation (reference path;
// the Monte Carlo driver uses the streaming norm evaluation below).
inline std::vector<SparseVec> simulate_discretized_field(std::size_t N,
                                                         const std::vector<double>& dw,
                                                         const std::vector<double>& s_grid,
                                                         const DyadicProfile& prof) {
    prof.validate();
    if (dw.size() != N) throw constraint_error("need exactly N increments");
    std::vector<SparseVec> out(s_grid.size());
    for (std::size_t si = 0; si < s_grid.size(); ++si) {
        const double s = s_grid[si];
        std::vector<SparseEntry> acc;
        for (std::size_t i = 1; i <= N; ++i) {
            if (dw[i - 1] == 0.0) continue;
            const double t = static_cast<double>(i) / static_cast<double>(N) + s;
            const SparseVec f = eval_profile(t, prof);
            for (const auto& e : f.entries) {
                auto it = std::find_if(acc.begin(), acc.end(),
                                       [&](const SparseEntry& a) { return a.index == e.index; });
                if (it == acc.end()) {
                    acc.push_back({e.index, e.value * dw[i - 1]});
                } else {
                    it->value += e.value * dw[i - 1];
                }
            }
        }
        std::sort(acc.begin(), acc.end(),
                  [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
        out[si].entries = std::move(acc);
    }
    return out;
}

// Trapezoidal L^q(R; l^p) norm of a field sampled on s_grid.
inline double lq_lp_norm(const std::vector<SparseVec>& field, const std::vector<double>& s_grid,
                         double p, double q) {
    if (field.empty() || field.size() != s_grid.size())
        throw constraint_error("lq_lp_norm requires one field value per grid point");
    std::vector<double> lp(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        lp[i] = std::pow(field[i].lp_norm_p_pow(p), 1.0 / p);
    }
    CompensatedSum acc;
    for (std::size_t i = 0; i < lp.size(); ++i) {
        double w = 0.0;
        if (i > 0) w += 0.5 * (s_grid[i] - s_grid[i - 1]);
        if (i + 1 < lp.size()) w += 0.5 * (s_grid[i + 1] - s_grid[i]);
        acc.add(w * std::pow(lp[i], q));
    }
    return std::pow(acc.value(), 1.0 / q);
}

// Closed-form divergence lower bound for the window s in (0, 2^{-un}]:
//   2^{-un-1} 2^{n(1-r-p/2) q/p} (E|gamma|^p)^{q/p}.
inline double lower_bound(unsigned n, double p, double u, double r, double q) {
    const double gp = gaussian_abs_moment(p);
    return std::exp2(-u * static_cast<double>(n) - 1.0) *
           std::exp2(static_cast<double>(n) * (1.0 - r - 0.5 * p) * q / p) *
           std::pow(gp, q / p);
}

// Scheme moments blow up iff q exceeds u p / (1 - r - p/2).
inline double divergence_threshold(double p, double u, double r) {
    const double denom = 1.0 - r - 0.5 * p;
    if (!(denom > 0.0)) throw constraint_error("divergence_threshold requires 1 - r - p/2 > 0");
    return u * p / denom;
}

// --- Monte Carlo divergence experiment --------------------------------------

struct DivergenceConfig {
    double p = 1.0;
    double u = 3.0;
    double r = 0.25;
    double q = 16.0;
    std::vector<unsigned> n_list = {4, 5, 6, 7, 8};
    std::size_t M = 400;
    std::size_t s_uniform = 4096;   // uniform points across (-1,1)
    unsigned s_per_octave = 8;      // geometric refinement toward 0+
    unsigned level_margin = 4;      // simulate levels k <= n + margin
    // Alignment bands narrower than this are dropped from the bulk quadrature
    // (see mc_divergence_estimate); fixed width, so the kept mass does not
    // depend on the uniform resolution.
    double bulk_min_feature = 9.765625e-4; // 2^-10
    std::uint64_t seed = 0x5EEDF00Dull;
    unsigned threads = 1;

    void validate() const {
        DyadicProfile{p, u, r, 1}.validate();
        if (n_list.empty()) throw constraint_error("n list must be nonempty");
        if (!std::is_sorted(n_list.begin(), n_list.end()))
            throw constraint_error("n list must be ascending");
        if (n_list.back() > 24) throw constraint_error("n too large (N = 2^n increments)");
        if (M < 2) throw constraint_error("M must be >= 2");
        if (s_uniform < 16 || s_per_octave == 0) throw constraint_error("s grid too coarse");
    }
};

// Union of a uniform grid on [-1,1] and a geometric refinement near 0+ that
// resolves the divergence window (0, 2^{-u n_max}]; sorted ascending.
inline std::vector<double> make_s_grid(const DivergenceConfig& config) {
    std::vector<double> grid;
    const std::size_t U = config.s_uniform;
    for (std::size_t i = 0; i <= U; ++i) {
        grid.push_back(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(U));
    }
    const double floor_exp = config.u * static_cast<double>(config.n_list.back()) + 2.0;
    const unsigned J = static_cast<unsigned>(std::ceil(floor_exp * config.s_per_octave));
    for (unsigned j = 0; j <= J; ++j) {
        grid.push_back(std::exp2(-static_cast<double>(j) / config.s_per_octave));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

namespace detail {

// ||field(s)||_{l^p}^p for one shifted profile sum, from Brownian prefix sums.
// Levels whose slots are wider than one increment are walked slot by slot with
// an increment-index range (endpoints re-verified against the canonical
// membership predicate); finer levels catch at most one increment per slot and
// are scanned increment by increment.
class ProfileNormEvaluator {
  public:
    ProfileNormEvaluator(const DyadicProfile& prof, std::size_t N,
                         const std::vector<double>& prefix)
        : prof_(prof), N_(N), prefix_(prefix) {}

    double norm_p_pow(double s) const {
        CompensatedSum tot;
        const auto Nd = static_cast<double>(N_);
        for (unsigned k = 1; k <= prof_.k_max; ++k) {
            const std::int64_t half = std::int64_t{1} << (k - 1);
            const double width = std::exp2(-prof_.u * static_cast<double>(k));
            const double coef = std::exp2(-prof_.r * static_cast<double>(k));
            if (static_cast<std::size_t>(half) <= N_) {
                const std::int64_t j_lo = std::max<std::int64_t>(0, profile_slot(s, k));
                const std::int64_t j_hi =
                    std::min<std::int64_t>(half - 1, profile_slot(1.0 + s, k) + 1);
                for (std::int64_t j = j_lo; j <= j_hi; ++j) {
                    const double left =
                        static_cast<double>(2 * j + 1) / std::exp2(static_cast<double>(k));
                    std::int64_t i_lo =
                        static_cast<std::int64_t>(std::floor(Nd * (left - s))) + 1;
                    std::int64_t i_hi =
                        static_cast<std::int64_t>(std::floor(Nd * (left + width - s)));
                    // snap range endpoints to the canonical predicate
                    while (i_lo <= i_hi && !member(i_lo, s, k, j, width)) ++i_lo;
                    while (i_lo > 1 && member(i_lo - 1, s, k, j, width)) --i_lo;
                    i_lo = std::max<std::int64_t>(i_lo, 1);
                    i_hi = std::min<std::int64_t>(i_hi, static_cast<std::int64_t>(N_));
                    while (i_hi >= i_lo && !member(i_hi, s, k, j, width)) --i_hi;
                    while (i_hi < static_cast<std::int64_t>(N_) &&
                           member(i_hi + 1, s, k, j, width))
                        ++i_hi;
                    if (i_lo <= i_hi) {
                        tot.add(coef * pow_p(prefix_[static_cast<std::size_t>(i_hi)] -
                                             prefix_[static_cast<std::size_t>(i_lo - 1)]));
                    }
                }
            } else {
                for (std::size_t i = 1; i <= N_; ++i) {
                    const double t = static_cast<double>(i) / Nd + s;
                    const std::int64_t j = profile_slot(t, k);
                    if (j < 0 || j >= half) continue;
                    if (in_profile_interval(t, k, j, width)) {
                        tot.add(coef * pow_p(prefix_[i] - prefix_[i - 1]));
                    }
                }
            }
        }
        return tot.value();
    }

  private:
    bool member(std::int64_t i, double s, unsigned k, std::int64_t j, double width) const {
        if (i < 1 || i > static_cast<std::int64_t>(N_)) return false;
        const double t = static_cast<double>(i) / static_cast<double>(N_) + s;
        return in_profile_interval(t, k, j, width);
    }

    double pow_p(double x) const {
        const double a = std::abs(x);
        if (prof_.p == 1.0) return a;
        return std::pow(a, prof_.p);
    }

    const DyadicProfile& prof_;
    std::size_t N_;
    const std::vector<double>& prefix_;
};

} // namespace detail

struct DivergenceRow {
    unsigned n = 0;
    double mc_estimate = 0.0; // MC mean of || int S^(2^n) f dw ||_{L^q(R;l^p)}^p
    double ci_low = 0.0;
    double ci_high = 0.0;
    double subwindow_quantity = 0.0; // int_(0,2^{-un}] (E ||.||^p)^{q/p} ds
    double lower_bound = 0.0;
    double exact_moment = 0.0; // truncated exact-integral moment (finite in n)
};

// Monte Carlo divergence table. One finest-grid Brownian increment path per
// sample serves every n (block sums give the coarser increments), so the
// estimates across n are positively coupled.
inline std::vector<DivergenceRow> mc_divergence_estimate(const DivergenceConfig& config) {
    config.validate();
    const std::vector<double> s_grid = make_s_grid(config);
    const std::size_t S = s_grid.size();
    const std::size_t N_max = std::size_t{1} << config.n_list.back();
    const std::size_t n_count = config.n_list.size();

    // Subwindow s indices per n (0 < s <= 2^{-u n}).
    std::vector<std::vector<std::size_t>> window_idx(n_count);
    for (std::size_t ni = 0; ni < n_count; ++ni) {
        const double win = std::exp2(-config.u * static_cast<double>(config.n_list[ni]));
        for (std::size_t si = 0; si < S; ++si) {
            if (s_grid[si] > 0.0 && s_grid[si] <= win) window_idx[ni].push_back(si);
        }
        if (window_idx[ni].empty())
            throw constraint_error("s grid does not resolve the window (0, 2^{-un}]");
    }

    // Bulk trapezoid weights per n. For each level k <= n the slots align at
    // multiples of 2^{-k} (hence of 2^{-n}) over bands of width 2^{-uk}; bands
    // narrower than bulk_min_feature are far below any affordable uniform
    // resolution, and whether a grid point grazes one flips with the
    // resolution. Dropping those bands from the bulk keeps the quadrature
    // stable under refinement. The ladder at s = 0+ (floor(s 2^k) = 0) is
    // resolved explicitly by the geometric points and always keeps its weight.
    std::vector<std::vector<double>> quad_w(n_count, std::vector<double>(S, 0.0));
    for (std::size_t ni = 0; ni < n_count; ++ni) {
        const unsigned n = config.n_list[ni];
        std::vector<std::size_t> kept;
        for (std::size_t si = 0; si < S; ++si) {
            const double s = s_grid[si];
            bool in_band = false;
            for (unsigned k = 1; k <= n && !in_band; ++k) {
                const double width = std::exp2(-config.u * static_cast<double>(k));
                if (width >= config.bulk_min_feature) continue; // resolved by the grid
                const double y = s * std::exp2(static_cast<double>(k));
                const double fl = std::floor(y);
                if (fl == 0.0) continue; // the 0+ ladder stays
                const double offset = (y - fl) * std::exp2(-static_cast<double>(k));
                if (offset > 0.0 && offset <= width) in_band = true;
            }
            if (!in_band) kept.push_back(si);
        }
        for (std::size_t j = 0; j < kept.size(); ++j) {
            if (j > 0) quad_w[ni][kept[j]] += 0.5 * (s_grid[kept[j]] - s_grid[kept[j - 1]]);
            if (j + 1 < kept.size())
                quad_w[ni][kept[j]] += 0.5 * (s_grid[kept[j + 1]] - s_grid[kept[j]]);
        }
    }

    std::vector<std::vector<double>> lqp(n_count, std::vector<double>(config.M));
    std::vector<std::vector<std::vector<double>>> window_vals(n_count);
    for (std::size_t ni = 0; ni < n_count; ++ni) {
        window_vals[ni].assign(config.M, std::vector<double>(window_idx[ni].size()));
    }

    parallel_for(config.M, config.threads, [&](std::size_t sample) {
        const std::uint64_t seed = sample_seed(config.seed, sample);
        std::vector<double> fine(N_max);
        const double sd = std::sqrt(1.0 / static_cast<double>(N_max));
        for (std::size_t i = 0; i < N_max; ++i) fine[i] = sd * rng_stream(seed, 0, i).first;

        std::vector<double> prefix;
        std::vector<double> norm_p(S);
        for (std::size_t ni = 0; ni < n_count; ++ni) {
            const unsigned n = config.n_list[ni];
            const std::size_t N = std::size_t{1} << n;
            const std::size_t block = N_max / N;
            prefix.assign(N + 1, 0.0);
            for (std::size_t i = 0; i < N; ++i) {
                double sum = 0.0;
                for (std::size_t b = 0; b < block; ++b) sum += fine[i * block + b];
                prefix[i + 1] = prefix[i] + sum;
            }
            DyadicProfile prof{config.p, config.u, config.r, n + config.level_margin};
            const detail::ProfileNormEvaluator eval(prof, N, prefix);
            for (std::size_t si = 0; si < S; ++si) norm_p[si] = eval.norm_p_pow(s_grid[si]);

            CompensatedSum acc; // trapezoid of ||.||^q over the kept s points
            for (std::size_t si = 0; si < S; ++si) {
                const double w = quad_w[ni][si];
                if (w > 0.0) acc.add(w * std::pow(norm_p[si], config.q / config.p));
            }
            lqp[ni][sample] = std::pow(acc.value(), config.p / config.q);
            for (std::size_t wi = 0; wi < window_idx[ni].size(); ++wi) {
                window_vals[ni][sample][wi] = norm_p[window_idx[ni][wi]];
            }
        }
    });

    std::vector<DivergenceRow> rows(n_count);
    for (std::size_t ni = 0; ni < n_count; ++ni) {
        const unsigned n = config.n_list[ni];
        DivergenceRow row;
        row.n = n;
        CompensatedSum mean_acc;
        for (double v : lqp[ni]) mean_acc.add(v);
        const double mean = mean_acc.value() / static_cast<double>(config.M);
        CompensatedSum var_acc;
        for (double v : lqp[ni]) var_acc.add((v - mean) * (v - mean));
        const double se =
            std::sqrt(var_acc.value() / static_cast<double>(config.M - 1) /
                      static_cast<double>(config.M));
        row.mc_estimate = mean;
        row.ci_low = mean - 1.96 * se;
        row.ci_high = mean + 1.96 * se;

        // E||.||^p averaged pointwise over paths, then integrated over the
        // window; the leftmost piece extends the first value down to 0+.
        const auto& idx = window_idx[ni];
        std::vector<double> emean(idx.size(), 0.0);
        for (std::size_t sample = 0; sample < config.M; ++sample) {
            for (std::size_t wi = 0; wi < idx.size(); ++wi) {
                emean[wi] += window_vals[ni][sample][wi];
            }
        }
        for (double& v : emean) v /= static_cast<double>(config.M);
        CompensatedSum win_acc;
        win_acc.add(s_grid[idx.front()] * std::pow(emean.front(), config.q / config.p));
        for (std::size_t wi = 0; wi + 1 < idx.size(); ++wi) {
            const double h = s_grid[idx[wi + 1]] - s_grid[idx[wi]];
            win_acc.add(0.5 * h *
                        (std::pow(emean[wi], config.q / config.p) +
                         std::pow(emean[wi + 1], config.q / config.p)));
        }
        row.subwindow_quantity = win_acc.value();
        row.lower_bound = splitflow::lower_bound(n, config.p, config.u, config.r, config.q);
        row.exact_moment =
            exact_integral_moment(DyadicProfile{config.p, config.u, config.r,
                                                n + config.level_margin})
                .value;
        rows[ni] = row;
    }
    return rows;
}

} // namespace splitflow
