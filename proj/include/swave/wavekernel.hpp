#pragma once

// Actions of the 3D wave kernel G(t) = sigma_t / (4 pi t): Kirchhoff's
// formula for the initial-condition term and double-sphere pairings of
// G(s), G(s') against the covariance f.

#include <cmath>
#include <functional>
#include <numbers>

#include "swave/error.hpp"
#include "swave/geometry.hpp"
#include "swave/kernels.hpp"
#include "swave/sphere.hpp"

namespace swave {

/// Initial position v0 (with its gradient) and initial velocity.
struct InitialData {
    std::function<double(const Vec3&)> v0;
    std::function<Vec3(const Vec3&)> grad_v0;
    std::function<double(const Vec3&)> velocity; ///< the velocity datum
    double gamma1 = 1.0;                         ///< Hoelder exponent of grad v0
    double gamma2 = 1.0;                         ///< Hoelder exponent of the velocity
    bool is_zero = false;                        ///< lets solvers skip X0 altogether

    static InitialData zero()
    {
        return {[](const Vec3&) { return 0.0; }, [](const Vec3&) { return Vec3::Zero().eval(); },
                [](const Vec3&) { return 0.0; }, 1.0, 1.0, true};
    }

    /// v0 = c, velocity = v.
    static InitialData constant(double c, double v = 0.0)
    {
        return {[c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3::Zero().eval(); },
                [v](const Vec3&) { return v; }};
    }

    /// v0(x) = |x|^2, zero velocity.
    static InitialData quadratic()
    {
        return {[](const Vec3& x) { return x.squaredNorm(); }, [](const Vec3& x) { return (2.0 * x).eval(); },
                [](const Vec3&) { return 0.0; }};
    }

    /// Smooth bump amp * (1 - |x|^2/r^2)^3 supported in the ball B(0, r).
    static InitialData bump(double radius, double amp = 1.0)
    {
        const double r2 = radius * radius;
        auto v0 = [=](const Vec3& x) {
            const double u = 1.0 - x.squaredNorm() / r2;
            return u > 0 ? amp * u * u * u : 0.0;
        };
        auto grad = [=](const Vec3& x) -> Vec3 {
            const double u = 1.0 - x.squaredNorm() / r2;
            if (u <= 0)
                return Vec3::Zero();
            return (-6.0 * amp * u * u / r2) * x;
        };
        return {v0, grad, [](const Vec3&) { return 0.0; }, 1.0, 1.0};
    }
};

/// X0(t, x) = [G(t) * velocity](x) + d/dt [G(t) * v0](x) by Kirchhoff:
/// t avg velocity(x + t xi) + avg v0(x + t xi) + t avg <grad v0(x + t xi), xi>.
inline double kirchhoff_ic(const InitialData& data, double t, const Vec3& x, const SphereQuadrature& quad)
{
    require(t > 0, ErrorCode::parameter, "kirchhoff_ic needs t > 0");
    return quad.average([&](const Vec3& xi) {
        const Vec3 y = x + t * xi;
        return t * data.velocity(y) + data.v0(y) + t * data.grad_v0(y).dot(xi);
    });
}

/// Integral of f(offset + u - v) against G(s, du) G(s', dv).
///
/// Node pairs closer than the quadrature cell radius 2 max(s, s')/sqrt(N)
/// use the disc average of f instead of a point value, so the singular
/// diagonal of a Riesz kernel stays finite and close to its true mean.
inline double sphere_pair_pairing(const CovarianceSpec& spec, double s, double s_prime, const Vec3& offset,
                                  const SphereQuadrature& quad)
{
    require(s > 0 && s_prime > 0, ErrorCode::parameter, "sphere_pair_pairing needs s, s' > 0");
    const std::size_t n = quad.size();
    const double cell = 2.0 * std::max(s, s_prime) / std::sqrt(double(n));
    double acc = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        const Vec3 u = offset + s * quad.nodes[a];
        double row = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double d = (u - s_prime * quad.nodes[b]).norm();
            const double fv = d < cell ? disc_average(spec, d, cell) : eval_radial(spec, d);
            row += quad.weights[b] * fv;
        }
        acc += quad.weights[a] * row;
    }
    const double four_pi = 4.0 * std::numbers::pi;
    return acc * (s / four_pi) * (s_prime / four_pi);
}

} // namespace swave
