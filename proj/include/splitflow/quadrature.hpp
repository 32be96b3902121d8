#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "splitflow/errors.hpp"

namespace splitflow {

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    // second disjunct: refinement has reached round-off on this piece
    if (std::abs(delta) <= 15.0 * tol ||
        std::abs(delta) <= 64.0 * std::numeric_limits<double>::epsilon() *
                               (std::abs(left) + std::abs(right))) {
        return left + right + delta / 15.0;
    }
    if (depth <= 0) {
        throw numerical_error("adaptive quadrature did not converge");
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson rule with Richardson correction. Used where a norm has no
// closed form (the derivative term of the C1 domination bound). Throws
// numerical_error when the requested tolerance is unreachable.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-12, int max_depth = 48) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

namespace detail {

// 10-point Gauss-Legendre nodes/weights on [-1,1] (positive half; symmetric).
inline constexpr double kGL10Nodes[5] = {
    0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
    0.8650633666889845, 0.9739065285171717};
inline constexpr double kGL10Weights[5] = {
    0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
    0.1494513491505806, 0.0666713443086881};

} // namespace detail

// Fixed 10-point Gauss-Legendre rule; exact to machine precision for the
// gentle exponential integrands it is applied to (|lambda|*(b-a) < 1).
template <typename F>
double gauss10(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double x = h * detail::kGL10Nodes[i];
        acc += detail::kGL10Weights[i] * (f(c - x) + f(c + x));
    }
    return acc * h;
}

} // namespace splitflow
