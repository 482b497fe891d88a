#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <cstddef>

#include "l0lab/errors.hpp"

namespace l0lab {

/// Controls for adaptive integration over [-truncation_radius, truncation_radius].
struct QuadratureSpec {
    double truncation_radius = 10.0;
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    std::size_t max_subdivisions = 1u << 16;
};

namespace detail {

template <typename F>
double eval_checked(F&& f, double z) {
    double v = f(z);
    if (!std::isfinite(v)) throw NonFinite("integrand non-finite at z=" + std::to_string(z));
    return v;
}

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double width, double fa, double fm, double fb,
                        double whole, double tol, std::size_t& budget, int depth) {
    // width is halved exactly on recursion; deriving it from b - a instead
    // makes parent and child disagree at roundoff once panels are tiny.
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = eval_checked(f, lm), frm = eval_checked(f, rm);
    const double left = (width / 12.0) * (fa + 4.0 * flm + fm);
    const double right = (width / 12.0) * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    // |delta|/15 is the classic Richardson error estimate for Simpson bisection.
    // A minimum depth guards against accidental agreement on coarse stencils;
    // the epsilon floor stops the halved tolerance from demanding sub-roundoff
    // accuracy on panels whose values are already at machine precision.
    const double floor = std::numeric_limits<double>::epsilon() *
                         (std::abs(left) + std::abs(right) + std::abs(whole));
    if (depth >= 6 && std::abs(delta) <= 15.0 * std::max(tol, floor))
        return left + right + delta / 15.0;
    if (depth >= 48)
        throw NonConvergent("interval subdivision reached the maximum depth");
    if (budget == 0) throw NonConvergent("subdivision budget exhausted before tolerance met");
    --budget;
    const double half = 0.5 * width;
    return adaptive_simpson(f, a, m, half, fa, flm, fm, left, 0.5 * tol, budget, depth + 1) +
           adaptive_simpson(f, m, b, half, fm, frm, fb, right, 0.5 * tol, budget, depth + 1);
}

} // namespace detail

/// Adaptive-Simpson integral of f over [a, b] under the given tolerances.
template <typename F>
    requires std::invocable<F&, double>
double integrate_interval(F&& f, double a, double b, const QuadratureSpec& spec) {
    if (a == b) return 0.0;
    const double fa = detail::eval_checked(f, a);
    const double fb = detail::eval_checked(f, b);
    const double fm = detail::eval_checked(f, 0.5 * (a + b));
    const double width = b - a;
    const double whole = (width / 6.0) * (fa + 4.0 * fm + fb);
    const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(whole));
    std::size_t budget = spec.max_subdivisions;
    return detail::adaptive_simpson(f, a, b, width, fa, fm, fb, whole, tol, budget, 0);
}

/// Integral of f over [-R, R], R = spec.truncation_radius.
template <typename F>
    requires std::invocable<F&, double>
double integrate(F&& f, const QuadratureSpec& spec) {
    return integrate_interval(f, -spec.truncation_radius, spec.truncation_radius, spec);
}

} // namespace l0lab
