#pragma once

// Radial covariance kernels f and the hypothesis integrals that control
// the regularity of the wave-equation solution driven by them.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "swave/error.hpp"
#include "swave/fit.hpp"
#include "swave/geometry.hpp"
#include "swave/quadrature.hpp"

namespace swave {

/// f(x) = |x|^{-beta}, 0 < beta < 2.
struct RieszKernel {
    double beta = 1.0;
};

/// Radial profile f(r) sampled on a strictly increasing r-grid (r > 0),
/// interpolated linearly in log r. No extrapolation.
struct TabulatedKernel {
    std::vector<double> r;
    std::vector<double> f;
};

struct CovarianceSpec {
    std::variant<RieszKernel, TabulatedKernel> kind = RieszKernel{};
    double reg_radius = 0.125; ///< |x| is floored at this radius
    double horizon = 1.0;      ///< T; hypothesis integrals use the 2T ball

    bool is_riesz() const { return std::holds_alternative<RieszKernel>(kind); }
    double beta() const { return std::get<RieszKernel>(kind).beta; }
};

inline void validate(const CovarianceSpec& spec)
{
    require(spec.reg_radius > 0, ErrorCode::invalid_kernel, "reg_radius must be positive");
    require(spec.horizon > 0, ErrorCode::invalid_kernel, "horizon must be positive");
    if (const auto* r = std::get_if<RieszKernel>(&spec.kind)) {
        require(r->beta > 0 && r->beta < 2, ErrorCode::invalid_kernel, "Riesz exponent must lie in (0, 2)");
        return;
    }
    const auto& tab = std::get<TabulatedKernel>(spec.kind);
    require(tab.r.size() >= 2 && tab.r.size() == tab.f.size(), ErrorCode::invalid_kernel,
            "tabulated kernel needs at least two (r, f) samples");
    for (std::size_t i = 0; i < tab.r.size(); ++i) {
        require(tab.r[i] > 0, ErrorCode::invalid_kernel, "tabulated radii must be positive");
        require(tab.f[i] >= 0 && std::isfinite(tab.f[i]), ErrorCode::invalid_kernel,
                "tabulated kernel has a negative sample");
        if (i > 0)
            require(tab.r[i] > tab.r[i - 1], ErrorCode::invalid_kernel, "tabulated radii must increase strictly");
    }
}

/// Reads whitespace-separated (r, f(r)) rows; '#' starts a comment.
inline TabulatedKernel load_tabulated_kernel(const std::string& path)
{
    std::ifstream in(path);
    require(bool(in), ErrorCode::io, "cannot open kernel table " + path);
    TabulatedKernel tab;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream row(line);
        double r, f;
        if (!(row >> r))
            continue;
        require(bool(row >> f), ErrorCode::invalid_kernel, "kernel table row needs two columns: " + line);
        tab.r.push_back(r);
        tab.f.push_back(f);
    }
    CovarianceSpec probe{tab, tab.r.front(), 1.0};
    validate(probe);
    return tab;
}

/// f at radius r, with r floored at the regularization radius.
inline double eval_radial(const CovarianceSpec& spec, double r)
{
    r = std::max(std::abs(r), spec.reg_radius);
    if (const auto* riesz = std::get_if<RieszKernel>(&spec.kind))
        return std::pow(r, -riesz->beta);
    const auto& tab = std::get<TabulatedKernel>(spec.kind);
    if (r < tab.r.front() || r > tab.r.back())
        throw Error(ErrorCode::invalid_kernel, "radius " + std::to_string(r) + " outside tabulated range");
    auto hi = std::upper_bound(tab.r.begin(), tab.r.end(), r);
    if (hi == tab.r.end())
        return tab.f.back();
    const auto i = std::size_t(hi - tab.r.begin()) - 1;
    const double u = std::log(r / tab.r[i]) / std::log(tab.r[i + 1] / tab.r[i]);
    const double v = tab.f[i] + u * (tab.f[i + 1] - tab.f[i]);
    require(v >= 0, ErrorCode::invalid_kernel, "tabulated kernel evaluates negative");
    return v;
}

inline double eval_kernel(const CovarianceSpec& spec, const Vec3& x) { return eval_radial(spec, x.norm()); }

/// The same kernel with the regularization pushed as far down as the
/// kernel allows: 1e-12 for Riesz, the first table radius otherwise.
inline CovarianceSpec continuum_kernel(CovarianceSpec spec)
{
    if (spec.is_riesz())
        spec.reg_radius = 1e-12;
    else
        spec.reg_radius = std::get<TabulatedKernel>(spec.kind).r.front();
    return spec;
}

/// Area average of f(sqrt(d^2 + rho^2)) over a disc of radius a.
///
/// Used for node pairs closer than a quadrature cell, where point
/// evaluation of a singular kernel is meaningless. Closed form for Riesz
/// when the regularization floor does not reach the disc.
inline double disc_average(const CovarianceSpec& spec, double d, double a)
{
    if (spec.is_riesz() && spec.reg_radius <= d) {
        const double beta = spec.beta();
        const double e = 1.0 - 0.5 * beta;
        return (std::pow(d * d + a * a, e) - std::pow(d * d, e)) / (e * a * a);
    }
    auto g = [&](double v) { return eval_radial(spec, std::sqrt(d * d + a * a * v * v)) * 2.0 * v; };
    return integrate_split(g, 0.0, 1.0).value;
}

/// Divergence guard for the radial integrals.
inline constexpr double integral_overflow_guard = 1e12;

namespace detail {

// 4 pi int_0^h r f(r) dr
inline double radial_ball_integral(const CovarianceSpec& spec, double h)
{
    auto g = [&](double r) { return r * eval_radial(spec, r); };
    std::vector<double> breaks;
    if (spec.reg_radius < h)
        breaks.push_back(spec.reg_radius);
    const double v = 4.0 * std::numbers::pi * integrate_singular_lower(g, 0.0, h, breaks).value;
    if (!std::isfinite(v) || v > integral_overflow_guard)
        throw Error(ErrorCode::non_integrable_kernel, "int f(x)/|x| dx diverges");
    return v;
}

} // namespace detail

/// int_{|x| <= 1} f(x)/|x| dx.
inline double basic_integrability(const CovarianceSpec& spec)
{
    validate(spec);
    return detail::radial_ball_integral(spec, 1.0);
}

/// int_{|z| <= h} f(z)/|z| dz, 0 < h <= 2T.
inline double h2_small_ball_integral(const CovarianceSpec& spec, double h)
{
    validate(spec);
    require(h > 0 && h <= 2 * spec.horizon, ErrorCode::parameter, "small-ball radius must lie in (0, 2T]");
    return detail::radial_ball_integral(spec, h);
}

/// int_{|z| <= 2T} |f(z+w) - f(z)| / |z| dz.
///
/// Axial symmetry around w reduces this to
///   (2 pi / |w|) int_0^{2T} dr int_{|r-|w||}^{r+|w|} |f(rho) - f(r)| rho drho.
inline QuadratureResult h1_increment_integral(const CovarianceSpec& spec, const Vec3& w_vec)
{
    validate(spec);
    const double w = w_vec.norm();
    if (w == 0.0)
        return {};
    const double R = 2 * spec.horizon;
    const double reg = spec.reg_radius;
    auto inner = [&](double r) {
        const double fr = eval_radial(spec, r);
        auto g = [&](double rho) { return std::abs(eval_radial(spec, rho) - fr) * rho; };
        return integrate_graded(g, std::abs(r - w), r + w, {std::abs(r - w), r, reg}, 12).value;
    };
    auto res = integrate_graded(inner, 0.0, R, {0.0, w, reg}, 30);
    const double scale = 2 * std::numbers::pi / w;
    return {scale * res.value, scale * res.error};
}

/// int_{|z| <= 2T} |f(z+w) - 2 f(z) + f(z-w)| / |z| dz, by the same axial
/// reduction using the mu -> -mu symmetry of the symmetric difference.
inline QuadratureResult h1_second_difference_integral(const CovarianceSpec& spec, const Vec3& w_vec)
{
    validate(spec);
    const double w = w_vec.norm();
    if (w == 0.0)
        return {};
    const double R = 2 * spec.horizon;
    const double reg = spec.reg_radius;
    auto inner = [&](double r) {
        const double fr = eval_radial(spec, r);
        const double s2 = 2 * (r * r + w * w);
        auto g = [&](double rho) {
            const double other = std::sqrt(std::max(s2 - rho * rho, 0.0));
            return std::abs(eval_radial(spec, rho) - 2 * fr + eval_radial(spec, other)) * rho;
        };
        const double lo = std::sqrt(r * r + w * w), hi = r + w;
        const double mirror_reg = std::sqrt(std::max(s2 - reg * reg, 0.0));
        return integrate_graded(g, lo, hi, {lo, hi, reg, mirror_reg}, 12).value;
    };
    auto res = integrate_graded(inner, 0.0, R, {0.0, w, reg}, 30);
    const double scale = 4 * std::numbers::pi / w;
    return {scale * res.value, scale * res.error};
}

struct SpherePairIntegrals {
    double first = 0.0;  ///< the rho_1 integral
    double second = 0.0; ///< the rho_2 integral
    double first_error = 0.0;
    double second_error = 0.0;
};

/// The two double-sphere integrals over s in [0, T] with unit vectors xi, eta.
///
/// For radial f both integrands depend on xi and eta only through
/// q = |xi + eta| in [0, 2], and sigma x sigma pushes forward to
/// 8 pi^2 q dq (sigma has mass 4 pi).
inline SpherePairIntegrals h2_sphere_pair_integrals(const CovarianceSpec& spec, double h)
{
    validate(spec);
    require(h >= 0 && h <= 1, ErrorCode::parameter, "sphere-pair shift must lie in [0, 1]");
    SpherePairIntegrals out;
    if (h == 0.0)
        return out;
    const double T = spec.horizon;
    auto f = [&](double r) { return eval_radial(spec, r); };

    auto inner_points = [&](double s) {
        std::vector<double> p{0.0, 2.0};
        for (double c : {s + h, s})
            if (c > 0)
                p.push_back(spec.reg_radius / c);
        return p;
    };
    auto inner1 = [&](double s) {
        auto g = [&](double q) {
            return std::abs(f((s + h) * q) - f(std::sqrt(q * q * s * (s + h) + h * h))) * q;
        };
        return s * integrate_graded(g, 0.0, 2.0, inner_points(s), 12).value;
    };
    auto inner2 = [&](double s) {
        auto g = [&](double q) {
            return std::abs(f((s + h) * q) - 2 * f(std::sqrt(q * q * s * (s + h) + h * h)) + f(s * q)) * q;
        };
        return s * s * integrate_graded(g, 0.0, 2.0, inner_points(s), 12).value;
    };
    const double c = 8 * std::numbers::pi * std::numbers::pi;
    auto r1 = integrate_graded(inner1, 0.0, T, {0.0}, 20);
    auto r2 = integrate_graded(inner2, 0.0, T, {0.0}, 20);
    out.first = c * r1.value;
    out.second = c * r2.value;
    out.first_error = c * r1.error;
    out.second_error = c * r2.error;
    for (auto [v, e] : {std::pair{out.first, out.first_error}, std::pair{out.second, out.second_error}}) {
        if (!std::isfinite(v) || e > 1e-2 * std::abs(v) + 1e-6)
            throw Error(ErrorCode::quadrature,
                        "sphere-pair integral did not converge (estimate " + std::to_string(v) + ", error " +
                            std::to_string(e) + ")");
    }
    return out;
}

/// Default scale grid for the exponent fits: six geometric points.
inline std::vector<double> default_fit_scales() { return geometric_grid(0.01, 0.3, 6); }

/// gamma-hat: slope of the first-difference integral in |w|, capped at 1.
inline ExponentEstimate fit_h1_increment_exponent(const CovarianceSpec& spec,
                                                  const std::vector<double>& scales = default_fit_scales())
{
    std::vector<double> v;
    for (double s : scales)
        v.push_back(h1_increment_integral(spec, Vec3(s, 0, 0)).value);
    return fit_power_law(scales, v, 1.0);
}

/// gamma'-hat: slope of the second-difference integral, capped at 2.
inline ExponentEstimate fit_h1_second_difference_exponent(const CovarianceSpec& spec,
                                                          const std::vector<double>& scales = default_fit_scales())
{
    std::vector<double> v;
    for (double s : scales)
        v.push_back(h1_second_difference_integral(spec, Vec3(s, 0, 0)).value);
    return fit_power_law(scales, v, 2.0);
}

/// nu-hat = min(slope of the small-ball integral, 1).
inline ExponentEstimate fit_small_ball_exponent(const CovarianceSpec& spec,
                                                const std::vector<double>& scales = default_fit_scales())
{
    std::vector<double> v;
    for (double s : scales)
        v.push_back(h2_small_ball_integral(spec, s));
    return fit_power_law(scales, v, 1.0);
}

/// (rho_1-hat, rho_2-hat), capped at 1 and 2.
inline std::pair<ExponentEstimate, ExponentEstimate>
fit_sphere_pair_exponents(const CovarianceSpec& spec, const std::vector<double>& scales = default_fit_scales())
{
    std::vector<double> v1, v2;
    for (double s : scales) {
        auto r = h2_sphere_pair_integrals(spec, s);
        v1.push_back(r.first);
        v2.push_back(r.second);
    }
    return {fit_power_law(scales, v1, 1.0), fit_power_law(scales, v2, 2.0)};
}

struct HolderExponents {
    double gamma1 = 1, gamma2 = 1; ///< initial-data regularity
    double gamma = 1, gamma_prime = 2;
    double nu = 1;
    double rho1 = 1, rho2 = 2;
};

struct HolderWindow {
    double kappa_max = 0.0;
    double rho_max = 0.0;
};

/// Upper ends of the admissible kappa and rho ranges for the support theorem.
inline HolderWindow admissible_holder_window(const HolderExponents& e)
{
    auto in = [](double v, double hi) { return v > 0 && v <= hi; };
    require(in(e.gamma1, 1) && in(e.gamma2, 1) && in(e.gamma, 1) && in(e.nu, 1) && in(e.rho1, 1),
            ErrorCode::parameter, "gamma1, gamma2, gamma, nu, rho1 must lie in (0, 1]");
    require(in(e.gamma_prime, 2) && in(e.rho2, 2), ErrorCode::parameter, "gamma', rho2 must lie in (0, 2]");
    HolderWindow w;
    w.kappa_max = std::min({e.gamma1, e.gamma2, e.gamma, e.gamma_prime / 2});
    w.rho_max = std::min({w.kappa_max, (e.nu + 1) / 2, (e.rho1 + w.kappa_max) / 2, e.rho2 / 2});
    return w;
}

} // namespace swave
