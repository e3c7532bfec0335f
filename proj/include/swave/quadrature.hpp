#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "swave/error.hpp"

namespace swave {

/// Integral value together with the quadrature's own error estimate.
struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

/// Default tolerances for one-dimensional pieces of the kernel integrals.
struct QuadratureTolerance {
    double absolute = 1e-6;
    double relative = 1e-4;
};

namespace detail {

inline constexpr unsigned gk_max_depth = 15;

template <class F>
QuadratureResult gk_piece(F&& f, double a, double b, double rel_tol)
{
    QuadratureResult r;
    if (b <= a)
        return r;
    double err = 0;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, gk_max_depth, rel_tol, &err);
    r.error = err;
    return r;
}

} // namespace detail

/// Adaptive Gauss-Kronrod over [a, b], split at the given interior points
/// (kinks, regularization radii, near-singular points).
template <class F>
QuadratureResult integrate_split(F&& f, double a, double b, std::vector<double> breaks = {},
                                 double rel_tol = 1e-9)
{
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    QuadratureResult total;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = breaks[i], hi = breaks[i + 1];
        if (hi <= a || lo >= b || hi <= lo)
            continue;
        auto piece = detail::gk_piece(f, lo, hi, rel_tol);
        total.value += piece.value;
        total.error += piece.error;
    }
    return total;
}

/// Integral of a function with an integrable power-type singularity at
/// the lower end `a` (typically the origin): [a, b] is cut into
/// geometrically shrinking pieces towards `a`.
template <class F>
QuadratureResult integrate_singular_lower(F&& f, double a, double b, std::vector<double> breaks = {},
                                          double rel_tol = 1e-9, int levels = 40)
{
    const double width = b - a;
    double edge = width;
    for (int i = 0; i < levels; ++i) {
        edge *= 0.5;
        breaks.push_back(a + edge);
    }
    auto r = integrate_split(f, a, b, std::move(breaks), rel_tol);
    if (!std::isfinite(r.value))
        throw Error(ErrorCode::quadrature, "non-finite integral");
    return r;
}

/// Fixed-order Gauss-Legendre on panels graded geometrically towards each
/// of `points` (kinks, endpoint singularities, regularization radii).
/// Each panel is a single Gauss-Kronrod 15 evaluation; the error is the
/// summed Kronrod-Gauss discrepancy. Non-adaptive, so cost is fixed.
template <class F>
QuadratureResult integrate_graded(F&& f, double a, double b, const std::vector<double>& points, int levels = 30)
{
    QuadratureResult total;
    if (b <= a)
        return total;
    std::vector<double> breaks{a, b};
    for (double p : points) {
        if (p < a || p > b)
            continue;
        breaks.push_back(p);
        double left = p - a, right = b - p;
        for (int i = 0; i < levels; ++i) {
            left *= 0.5;
            right *= 0.5;
            if (left > 0)
                breaks.push_back(p - left);
            if (right > 0)
                breaks.push_back(p + right);
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] <= breaks[i])
            continue;
        double err = 0;
        total.value += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, breaks[i], breaks[i + 1], 0,
                                                                                   0.0, &err);
        total.error += err;
    }
    if (!std::isfinite(total.value))
        throw Error(ErrorCode::quadrature, "non-finite integral");
    return total;
}

} // namespace swave
