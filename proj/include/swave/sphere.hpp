#pragma once

// Quadrature rules on the unit sphere S^2 and the total mass of G(t).

#include <cmath>
#include <numbers>
#include <vector>

#include "swave/error.hpp"
#include "swave/geometry.hpp"

namespace swave {

enum class SphereFamily {
    fibonacci, ///< antipodally symmetric spiral, equal weights 4 pi / N
    product,   ///< Gauss-Legendre in z times uniform azimuth, exact to `degree`
};

/// Nodes on S^2 with weights summing to 4 pi (steradians).
struct SphereQuadrature {
    std::vector<Vec3> nodes;
    std::vector<double> weights;
    SphereFamily family = SphereFamily::fibonacci;
    int degree = 1; ///< spherical harmonics up to this degree are integrated exactly

    std::size_t size() const { return nodes.size(); }

    /// Mean of g over the sphere, sum_k w_k g(xi_k) / (4 pi).
    template <class F>
    double average(F&& g) const
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k)
            acc += weights[k] * g(nodes[k]);
        return acc / (4.0 * std::numbers::pi);
    }
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton on P_m.
inline void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(m, 0.0);
    w.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = z;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (z * p1 - p0) / (z * z - 1);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1 - z * z) * dp * dp);
    }
}

} // namespace detail

/// Node counts accepted for the Fibonacci family.
inline bool supported_fibonacci_order(int n) { return n >= 16 && n <= 16384 && n % 2 == 0; }

/// The quadrature rule of the requested family.
///
/// fibonacci: `order` is the node count N (even, 16..16384). Half the
/// spiral covers the upper hemisphere and is mirrored through the origin,
/// so every odd moment vanishes exactly; z is rescaled so that the z^2
/// moment is exact as well.
///
/// product: `order` is the polynomial degree p (0..63); uses ceil((p+1)/2)
/// Gauss-Legendre nodes in z and p+1 equally spaced azimuths.
inline SphereQuadrature sphere_nodes(int order, SphereFamily family = SphereFamily::fibonacci)
{
    SphereQuadrature q;
    q.family = family;
    if (family == SphereFamily::fibonacci) {
        if (!supported_fibonacci_order(order))
            throw Error(ErrorCode::unsupported_order,
                        "Fibonacci sphere rule needs an even node count in [16, 16384], got " +
                            std::to_string(order));
        const int half = order / 2;
        const double n = order;
        const double stretch = std::sqrt(1.0 / (1.0 - 1.0 / (n * n)));
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        q.nodes.reserve(order);
        for (int k = 0; k < half; ++k) {
            const double z = (1.0 - (2.0 * k + 1.0) / n) * stretch;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * k;
            q.nodes.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
        }
        for (int k = 0; k < half; ++k)
            q.nodes.push_back(-q.nodes[k]);
        q.weights.assign(order, 4.0 * std::numbers::pi / n);
        q.degree = 1;
        return q;
    }
    if (order < 0 || order > 63)
        throw Error(ErrorCode::unsupported_order,
                    "product sphere rule supports degrees 0..63, got " + std::to_string(order));
    const int m = std::max(1, (order + 2) / 2);
    const int naz = order + 1;
    std::vector<double> z, wz;
    detail::gauss_legendre(m, z, wz);
    for (int i = 0; i < m; ++i) {
        const double r = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
        for (int k = 0; k < naz; ++k) {
            const double phi = 2.0 * std::numbers::pi * (k + 0.5) / naz;
            q.nodes.emplace_back(r * std::cos(phi), r * std::sin(phi), z[i]);
            q.weights.push_back(wz[i] * 2.0 * std::numbers::pi / naz);
        }
    }
    q.degree = order;
    return q;
}

/// Total mass of the wave kernel G(t): (1 / 4 pi t) times the area 4 pi t^2.
inline double green_mass(double t)
{
    require(t >= 0, ErrorCode::parameter, "green_mass needs t >= 0");
    return t;
}

} // namespace swave
