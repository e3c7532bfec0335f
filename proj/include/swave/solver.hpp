#pragma once

// Causal explicit scheme (and its Picard cross-check) for the mild form of
//
//   X(t,x) = X0(t,x) + int G(t-s, x-y) A(X) M(ds,dy) + <G B(X), w^n>_H
//            + <G D(X), h>_H + int [G(t-s) * b(X(s))](x) ds
//
// and its variants, on the noise lattice.
//
// Discretization. G(s) is represented by sphere nodes x - s xi_k of mass
// s w_k / 4 pi, each deposited on its nearest lattice site, so every lag
// L = k - m has a translation-invariant stencil c_L. The lag is taken at
// the step midpoint s_L = (L - 1/2) dt while the integrand is evaluated at
// the left point t_m (adapted). Per step the lattice source
//
//   Q_m = A(X_m) dM_m + dt [B(X_m) F(w_m) + D(X_m) F(h_m) + b(X_m)]
//
// is convolved with c_L, F(c) being the lattice field that represents
// sum_j c_j e_j in H. The sub-lattice part of the noise, which no lattice
// stencil can resolve, is restored by an independent per-site term
// kappa_L A(X_m) eps_m whose variance kappa_L^2 |c_L|^2 makes up the gap
// between the continuum ||G(s_L)||_H^2 and the lattice c_L' Sigma c_L.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swave/error.hpp"
#include "swave/geometry.hpp"
#include "swave/kernels.hpp"
#include "swave/noise.hpp"
#include "swave/sphere.hpp"
#include "swave/wavekernel.hpp"

namespace swave {

/// c0 + c1 u + c2 sin(omega u); globally Lipschitz with constant
/// |c1| + |c2 omega|.
struct Coefficient {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double omega = 1.0;

    double operator()(double u) const { return c0 + c1 * u + (c2 != 0.0 ? c2 * std::sin(omega * u) : 0.0); }
    double lipschitz() const { return std::abs(c1) + std::abs(c2 * omega); }
    bool is_constant() const { return c1 == 0.0 && c2 == 0.0; }
    bool is_zero() const { return is_constant() && c0 == 0.0; }

    static Coefficient constant(double c) { return {c, 0.0, 0.0, 1.0}; }
    static Coefficient linear(double c0, double c1) { return {c0, c1, 0.0, 1.0}; }
    static Coefficient sine(double c0, double c2, double omega = 1.0) { return {c0, 0.0, c2, omega}; }

    Coefficient operator+(const Coefficient& o) const
    {
        // Only sums with matching frequency (or a missing sine) stay in the family.
        require(c2 == 0.0 || o.c2 == 0.0 || omega == o.omega, ErrorCode::parameter,
                "cannot add coefficients with different sine frequencies");
        return {c0 + o.c0, c1 + o.c1, c2 + o.c2, c2 != 0.0 ? omega : o.omega};
    }
    Coefficient operator-() const { return {-c0, -c1, -c2, omega}; }
};

enum class Variant {
    full,        ///< A on M, B on w^n, D on h, drift b
    reference,   ///< (A + B) on M, D on h, drift b
    delayed_n,   ///< full, with every integral stopped at t_n
    delayed_ref, ///< reference, with every integral stopped at t_n
    skeleton,    ///< D on h, drift b; no noise
    shifted,     ///< A on M and on h - w^n, drift b
    base,        ///< A on M, drift b
};

inline const char* to_string(Variant v)
{
    switch (v) {
    case Variant::full: return "full";
    case Variant::reference: return "reference";
    case Variant::delayed_n: return "delayed_n";
    case Variant::delayed_ref: return "delayed_ref";
    case Variant::skeleton: return "skeleton";
    case Variant::shifted: return "shifted";
    case Variant::base: return "base";
    }
    return "unknown";
}

inline Variant variant_from_string(const std::string& s)
{
    for (Variant v : {Variant::full, Variant::reference, Variant::delayed_n, Variant::delayed_ref, Variant::skeleton,
                      Variant::shifted, Variant::base})
        if (s == to_string(v))
            return v;
    throw Error(ErrorCode::config, "unknown equation variant '" + s + "'");
}

struct EquationSpec {
    Coefficient A, B, D, b;
    Variant variant = Variant::base;
    int delay_level = 0; ///< n for the delayed variants (0: take it from w^n)
};

/// Largest k 2^{-n} T <= t with 1 <= k <= 2^n - 1 (0 if none), and t_n,
/// one dyadic interval earlier, floored at 0.
inline std::pair<double, double> dyadic_delay(double t, int n, double T)
{
    require(n >= 1 && n < 31 && T > 0 && t >= 0 && t <= T * (1 + 1e-12), ErrorCode::parameter,
            "dyadic_delay needs 0 <= t <= T and n >= 1");
    const int parts = 1 << n;
    const int k = std::clamp(int(std::floor(t * parts / T + 1e-9)), 0, parts - 1);
    const double under = k * T / parts;
    return {under, std::max(under - T / parts, 0.0)};
}

enum class Scheme { explicit_causal, picard };

/// Record of every (target step, source step) read made by the recursion.
struct AccessLog {
    std::vector<std::pair<int, int>> reads;
};

struct SolverConfig {
    int sphere_order = 256;
    SphereFamily sphere_family = SphereFamily::fibonacci;
    Scheme scheme = Scheme::explicit_causal; ///< trilinear is the only interpolation offered
    double picard_tol = 1e-8;
    int picard_max_iter = 50;
    bool subgrid_closure = true;
    std::vector<Vec3> eval_points; ///< empty: every lattice site
    double t0 = 0.0;
    AccessLog* access_log = nullptr; ///< test instrumentation; not thread-safe

    void validate() const
    {
        require(picard_tol > 0, ErrorCode::parameter, "picard_tol must be positive");
        require(picard_max_iter >= 1, ErrorCode::parameter, "picard_max_iter must be >= 1");
    }
};

/// One realization of X on the time grid at the evaluation points.
struct FieldSample {
    NoiseGrid grid;
    double t0 = 0.0;
    std::vector<double> times;     ///< t_0 .. t_N
    std::vector<Vec3> eval_points;
    Eigen::MatrixXd values;        ///< times x points
    std::uint64_t seed = 0;
    std::string variant;
    int level = 0;
};

struct PicardResult {
    FieldSample field;
    int iterations = 0;
    double final_delta = 0.0;
};

namespace detail {

struct StencilEntry {
    int di, dj, dk;
    double c;
};

struct InterpWeights {
    std::array<int, 8> site{};
    std::array<double, 8> weight{};
};

inline double snap(double v)
{
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

inline InterpWeights trilinear(const NoiseGrid& g, const Vec3& x)
{
    if (!g.contains(x))
        throw Error(ErrorCode::parameter, "evaluation point outside the lattice hull");
    InterpWeights w;
    std::array<int, 3> i0{};
    std::array<double, 3> fr{};
    for (int a = 0; a < 3; ++a) {
        const double u = std::clamp(snap((x[a] - g.origin[a]) / g.spacing), 0.0, double(g.dims[a] - 1));
        i0[a] = std::min(int(std::floor(u)), std::max(g.dims[a] - 2, 0));
        fr[a] = g.dims[a] > 1 ? u - i0[a] : 0.0;
    }
    int n = 0;
    for (int dx = 0; dx < 2; ++dx)
        for (int dy = 0; dy < 2; ++dy)
            for (int dz = 0; dz < 2; ++dz) {
                const double wt = (dx ? fr[0] : 1 - fr[0]) * (dy ? fr[1] : 1 - fr[1]) * (dz ? fr[2] : 1 - fr[2]);
                const int ii = std::min(i0[0] + dx, g.dims[0] - 1);
                const int jj = std::min(i0[1] + dy, g.dims[1] - 1);
                const int kk = std::min(i0[2] + dz, g.dims[2] - 1);
                w.site[n] = g.index(ii, jj, kk);
                w.weight[n] = wt;
                ++n;
            }
    return w;
}

} // namespace detail

/// Solver bound to one lattice covariance, initial datum and configuration.
/// Stencils, the sub-lattice closure and X0 are built once and shared by
/// every solve; solves themselves are const and thread-compatible.
class MildSolver {
public:
    MildSolver(std::shared_ptr<const LatticeCovariance> cov, InitialData ic, SolverConfig config)
        : cov_(std::move(cov)), ic_(std::move(ic)), config_(std::move(config)),
          quad_(sphere_nodes(config_.sphere_order, config_.sphere_family))
    {
        config_.validate();
        const NoiseGrid& g = cov_->grid;
        if (config_.eval_points.empty())
            config_.eval_points = g.lattice();
        for (const auto& p : config_.eval_points)
            interp_.push_back(detail::trilinear(g, p));
        build_stencils();
        build_initial_term();
    }

    const NoiseGrid& grid() const { return cov_->grid; }
    const SolverConfig& config() const { return config_; }
    const LatticeCovariance& covariance() const { return *cov_; }
    const SphereQuadrature& quadrature() const { return quad_; }
    double closure_factor(int lag) const { return kappa_[lag]; }
    const std::vector<detail::StencilEntry>& stencil(int lag) const { return stencils_[lag]; }

    /// X0 at lattice site `a` and step k.
    double initial_term(int k, int a) const { return x0_.size() == 0 ? 0.0 : x0_(a, k); }

    FieldSample solve_mild(const EquationSpec& eq, const NoisePath* path, const SmoothedNoise* w,
                           const ControlH* h) const
    {
        check_arguments(eq, path, w, h);
        Problem p = make_problem(eq, path, w, h);
        Eigen::MatrixXd X = explicit_pass(p);
        return finish(p, X);
    }

    FieldSample solve_skeleton(const EquationSpec& eq, const ControlH& h) const
    {
        require(eq.variant == Variant::skeleton, ErrorCode::parameter, "solve_skeleton needs the skeleton variant");
        return solve_mild(eq, nullptr, nullptr, &h);
    }

    /// v_n driven by path with control h - w^n, w^n built from path.
    FieldSample solve_shifted(const EquationSpec& eq, const NoisePath& path, const ControlH& h, int n) const
    {
        require(eq.variant == Variant::shifted, ErrorCode::parameter, "solve_shifted needs the shifted variant");
        const SmoothedNoise w = build_smoothed(path, n);
        FieldSample f = solve_mild(eq, &path, &w, &h);
        f.level = n;
        return f;
    }

    /// Z^{(0)} = X0, Z^{(i+1)} = X0 + [convolutions of Z^{(i)}] on the same
    /// discretization; stops once the grid sup of the update is below tol.
    PicardResult picard_solve(const EquationSpec& eq, const NoisePath* path, const SmoothedNoise* w,
                              const ControlH* h) const
    {
        check_arguments(eq, path, w, h);
        Problem p = make_problem(eq, path, w, h);
        const int N = grid().num_steps;
        const int S = grid().num_sites();
        Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(S, N + 1);
        for (int k = 0; k <= N; ++k)
            for (int a : p.active)
                Z(a, k) = initial_term(k, a);
        double delta = 0;
        for (int it = 1; it <= config_.picard_max_iter; ++it) {
            for (int m = 0; m < N; ++m)
                fill_sources(p, Z, m);
            Eigen::MatrixXd next = Z;
            for (int k = 1; k <= N; ++k)
                for (int a : p.active)
                    next(a, k) = initial_term(k, a) + convolve(p, k, a, k);
            delta = 0;
            for (int k = 0; k <= N; ++k)
                for (int a : p.active)
                    delta = std::max(delta, std::abs(next(a, k) - Z(a, k)));
            Z = std::move(next);
            check_finite(p, Z);
            if (delta < config_.picard_tol)
                return {finish(p, Z), it, delta};
        }
        throw IterationLimitError(config_.picard_max_iter, delta);
    }

private:
    struct Problem {
        EquationSpec eq;
        Coefficient noise_coef;   ///< coefficient on dM
        Coefficient smooth_coef;  ///< coefficient on F(w^n)
        Coefficient control_coef; ///< coefficient on F(h)
        const NoisePath* path = nullptr;
        Eigen::MatrixXd Fw, Fh;   ///< sites x steps
        bool use_noise = false, use_w = false, use_h = false, use_closure = false;
        std::vector<int> active;  ///< sites whose values are computed
        std::vector<int> cutoff;  ///< delayed variants: output at step k sums m < cutoff[k]
        Eigen::MatrixXd Q, R;     ///< sources per step
        std::uint64_t seed = 0;
        int level = 0;
    };

    void build_stencils()
    {
        const NoiseGrid& g = grid();
        const int N = g.num_steps;
        const double dt = g.dt();
        const CovarianceSpec continuum = continuum_kernel(cov_->spec);
        stencils_.assign(N + 1, {});
        kappa_.assign(N + 1, 0.0);
        const double four_pi = 4.0 * std::numbers::pi;
        for (int L = 1; L <= N; ++L) {
            const double s = (L - 0.5) * dt;
            std::map<std::array<int, 3>, double> dep;
            for (std::size_t q = 0; q < quad_.size(); ++q) {
                const Vec3 y = -s * quad_.nodes[q] / g.spacing;
                dep[{int(std::lround(y.x())), int(std::lround(y.y())), int(std::lround(y.z()))}] +=
                    s * quad_.weights[q] / four_pi;
            }
            auto& st = stencils_[L];
            for (const auto& [o, c] : dep)
                st.push_back({o[0], o[1], o[2], c});
            if (!config_.subgrid_closure)
                continue;
            double lattice_var = 0, mass2 = 0;
            for (const auto& e : st) {
                mass2 += e.c * e.c;
                for (const auto& e2 : st) {
                    const Vec3 d = g.spacing * Vec3(e.di - e2.di, e.dj - e2.dj, e.dk - e2.dk);
                    lattice_var += e.c * e2.c * eval_kernel(cov_->spec, d);
                }
            }
            const double target = sphere_pair_pairing(continuum, s, s, Vec3::Zero(), quad_);
            kappa_[L] = std::sqrt(std::max(0.0, target - lattice_var) / mass2);
        }
    }

    void build_initial_term()
    {
        if (ic_.is_zero)
            return;
        const NoiseGrid& g = grid();
        x0_.resize(g.num_sites(), g.num_steps + 1);
        for (int a = 0; a < g.num_sites(); ++a) {
            const Vec3 x = g.site(a);
            x0_(a, 0) = ic_.v0(x);
            for (int k = 1; k <= g.num_steps; ++k)
                x0_(a, k) = kirchhoff_ic(ic_, g.time(k), x, quad_);
        }
    }

    void check_arguments(const EquationSpec& eq, const NoisePath* path, const SmoothedNoise* w,
                         const ControlH* h) const
    {
        const bool needs_path = eq.variant != Variant::skeleton;
        if (needs_path)
            require(path != nullptr, ErrorCode::parameter,
                    std::string("variant ") + to_string(eq.variant) + " needs a noise path");
        else
            require(path == nullptr, ErrorCode::parameter, "the skeleton equation takes no noise path");
        if (eq.variant == Variant::full || eq.variant == Variant::delayed_n || eq.variant == Variant::shifted)
            require(w != nullptr, ErrorCode::parameter,
                    std::string("variant ") + to_string(eq.variant) + " needs the smoothed noise");
        if (eq.variant == Variant::skeleton || eq.variant == Variant::shifted)
            require(h != nullptr, ErrorCode::parameter,
                    std::string("variant ") + to_string(eq.variant) + " needs a control h");
        if (path) {
            require(path->grid.num_steps == grid().num_steps && path->grid.num_sites() == grid().num_sites() &&
                        std::abs(path->grid.T - grid().T) < 1e-12,
                    ErrorCode::grid_mismatch, "noise path and solver use different grids");
            require(path->covariance.get() == cov_.get() ||
                        (path->covariance->grid.spacing == grid().spacing &&
                         path->covariance->grid.origin == grid().origin),
                    ErrorCode::grid_mismatch, "noise path lattice differs from the solver lattice");
        }
        if (w) {
            const int parts = 1 << w->level;
            if (grid().num_steps % parts != 0)
                throw Error(ErrorCode::config, "smoothed noise intervals do not align with the time grid");
        }
        if (h)
            require(h->num_steps() == grid().num_steps && std::abs(h->T - grid().T) < 1e-12,
                    ErrorCode::grid_mismatch, "control lives on a different time grid");
    }

    Problem make_problem(const EquationSpec& eq, const NoisePath* path, const SmoothedNoise* w,
                         const ControlH* h) const
    {
        Problem p;
        p.eq = eq;
        p.path = path;
        const NoiseGrid& g = grid();
        const int N = g.num_steps;
        switch (eq.variant) {
        case Variant::full:
        case Variant::delayed_n:
            p.noise_coef = eq.A;
            p.smooth_coef = eq.B;
            p.control_coef = eq.D;
            break;
        case Variant::reference:
        case Variant::delayed_ref:
            p.noise_coef = eq.A + eq.B;
            p.control_coef = eq.D;
            break;
        case Variant::skeleton:
            p.control_coef = eq.D;
            break;
        case Variant::shifted:
            p.noise_coef = eq.A;
            p.smooth_coef = -eq.A;
            p.control_coef = eq.A;
            break;
        case Variant::base:
            p.noise_coef = eq.A;
            break;
        }
        p.use_noise = path != nullptr && !p.noise_coef.is_zero();
        p.use_w = w != nullptr && !p.smooth_coef.is_zero();
        p.use_h = h != nullptr && !p.control_coef.is_zero();
        p.use_closure = p.use_noise && config_.subgrid_closure;
        if (p.use_w)
            p.Fw = synthesize_steps(w->step_coefficients(N, std::min(w->level, cov_->num_sites())));
        if (p.use_h)
            p.Fh = synthesize_steps(h->coefficients);
        if (path)
            p.seed = path->seed;
        if (w)
            p.level = w->level;

        if (eq.variant == Variant::delayed_n || eq.variant == Variant::delayed_ref) {
            const int n = eq.delay_level > 0 ? eq.delay_level : (w ? w->level : 0);
            require(n >= 1, ErrorCode::parameter, "delayed variants need a dyadic level");
            require(N % (1 << n) == 0, ErrorCode::config, "2^n must divide num_steps for the delayed variants");
            p.level = n;
            p.cutoff.resize(N + 1);
            for (int k = 0; k <= N; ++k)
                p.cutoff[k] = int(std::lround(dyadic_delay(g.time(k), n, g.T).second / g.dt()));
        }

        const bool all_constant = p.noise_coef.is_constant() && p.smooth_coef.is_constant() &&
                                  p.control_coef.is_constant() && eq.b.is_constant();
        if (all_constant) {
            std::vector<char> mark(g.num_sites(), 0);
            for (const auto& iw : interp_)
                for (int c = 0; c < 8; ++c)
                    if (iw.weight[c] != 0.0)
                        mark[iw.site[c]] = 1;
            for (int a = 0; a < g.num_sites(); ++a)
                if (mark[a])
                    p.active.push_back(a);
        } else {
            p.active.resize(g.num_sites());
            for (int a = 0; a < g.num_sites(); ++a)
                p.active[a] = a;
        }
        p.Q = Eigen::MatrixXd::Zero(g.num_sites(), N);
        if (p.use_closure)
            p.R = Eigen::MatrixXd::Zero(g.num_sites(), N);
        return p;
    }

    Eigen::MatrixXd synthesize_steps(const Eigen::MatrixXd& coeffs) const
    {
        const int m = int(coeffs.rows());
        require(m <= cov_->num_sites(), ErrorCode::parameter, "more control modes than lattice sites");
        return cov_->eigenvectors.leftCols(m) * (cov_->eigenvalues.head(m).cwiseSqrt().asDiagonal() * coeffs);
    }

    // Sources for step m from the field values at t_m.
    void fill_sources(Problem& p, const Eigen::MatrixXd& X, int m) const
    {
        const double dt = grid().dt();
        const int S = grid().num_sites();
        for (int a = 0; a < S; ++a) {
            const double u = X(a, m);
            double q = dt * p.eq.b(u);
            if (p.use_noise)
                q += p.noise_coef(u) * p.path->increments(a, m);
            if (p.use_w)
                q += dt * p.smooth_coef(u) * p.Fw(a, m);
            if (p.use_h)
                q += dt * p.control_coef(u) * p.Fh(a, m);
            p.Q(a, m) = q;
            if (p.use_closure)
                p.R(a, m) = p.noise_coef(u) * p.path->subgrid(a, m);
        }
    }

    // Sum over m < upto of the lag-(k-m) stencil applied to the sources at site a.
    double convolve(const Problem& p, int k, int a, int upto) const
    {
        const NoiseGrid& g = grid();
        const auto c = g.coords(a);
        double acc = 0;
        for (int m = 0; m < upto; ++m) {
            if (config_.access_log)
                config_.access_log->reads.emplace_back(k, m);
            const int L = k - m;
            const double kap = p.use_closure ? kappa_[L] : 0.0;
            const double* q = p.Q.data() + std::size_t(m) * p.Q.rows();
            const double* r = p.use_closure ? p.R.data() + std::size_t(m) * p.R.rows() : nullptr;
            for (const auto& e : stencils_[L]) {
                const int i = c[0] + e.di, j = c[1] + e.dj, l = c[2] + e.dk;
                if (i < 0 || j < 0 || l < 0 || i >= g.dims[0] || j >= g.dims[1] || l >= g.dims[2])
                    continue;
                const int y = g.index(i, j, l);
                acc += e.c * (r ? q[y] + kap * r[y] : q[y]);
            }
        }
        return acc;
    }

    Eigen::MatrixXd explicit_pass(Problem& p) const
    {
        const int N = grid().num_steps;
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(grid().num_sites(), N + 1);
        for (int a : p.active)
            X(a, 0) = initial_term(0, a);
        for (int k = 1; k <= N; ++k) {
            fill_sources(p, X, k - 1);
            for (int a : p.active) {
                const double v = initial_term(k, a) + convolve(p, k, a, k);
                if (!std::isfinite(v))
                    throw BlowUpError(grid().time(k), to_array(grid().site(a)),
                                      "non-finite field value at step " + std::to_string(k));
                X(a, k) = v;
            }
        }
        return X;
    }

    void check_finite(const Problem& p, const Eigen::MatrixXd& X) const
    {
        for (int k = 0; k < X.cols(); ++k)
            for (int a : p.active)
                if (!std::isfinite(X(a, k)))
                    throw BlowUpError(grid().time(k), to_array(grid().site(a)), "non-finite Picard iterate");
    }

    FieldSample finish(const Problem& p, const Eigen::MatrixXd& X) const
    {
        const NoiseGrid& g = grid();
        const int N = g.num_steps;
        FieldSample f;
        f.grid = g;
        f.t0 = config_.t0;
        f.eval_points = config_.eval_points;
        f.seed = p.seed;
        f.variant = to_string(p.eq.variant);
        f.level = p.level;
        f.times.resize(N + 1);
        for (int k = 0; k <= N; ++k)
            f.times[k] = g.time(k);
        f.values.resize(N + 1, f.eval_points.size());
        const bool delayed = p.eq.variant == Variant::delayed_n || p.eq.variant == Variant::delayed_ref;
        for (int k = 0; k <= N; ++k) {
            for (std::size_t e = 0; e < interp_.size(); ++e) {
                double v = 0;
                for (int c = 0; c < 8; ++c) {
                    const double wt = interp_[e].weight[c];
                    if (wt == 0.0)
                        continue;
                    const int a = interp_[e].site[c];
                    // The delayed fields reuse the undelayed integrands.
                    const double site_val = delayed ? initial_term(k, a) + convolve(p, k, a, p.cutoff[k]) : X(a, k);
                    v += wt * site_val;
                }
                f.values(k, e) = v;
            }
        }
        return f;
    }

    std::shared_ptr<const LatticeCovariance> cov_;
    InitialData ic_;
    SolverConfig config_;
    SphereQuadrature quad_;
    std::vector<detail::InterpWeights> interp_;
    std::vector<std::vector<detail::StencilEntry>> stencils_;
    std::vector<double> kappa_;
    Eigen::MatrixXd x0_;
};

/// One-shot wrappers that build a solver for a single call.
inline FieldSample solve_mild(const EquationSpec& eq, const NoisePath& path, const SmoothedNoise* w,
                              const ControlH* h, const InitialData& ic, const SolverConfig& config)
{
    return MildSolver(path.covariance, ic, config).solve_mild(eq, &path, w, h);
}

inline FieldSample solve_skeleton(const EquationSpec& eq, std::shared_ptr<const LatticeCovariance> cov,
                                  const ControlH& h, const InitialData& ic, const SolverConfig& config)
{
    return MildSolver(std::move(cov), ic, config).solve_skeleton(eq, h);
}

inline FieldSample solve_shifted(const EquationSpec& eq, const NoisePath& path, const ControlH& h, int n,
                                 const InitialData& ic, const SolverConfig& config)
{
    return MildSolver(path.covariance, ic, config).solve_shifted(eq, path, h, n);
}

inline PicardResult picard_solve(const EquationSpec& eq, const NoisePath& path, const SmoothedNoise* w,
                                 const ControlH* h, const InitialData& ic, const SolverConfig& config)
{
    return MildSolver(path.covariance, ic, config).picard_solve(eq, &path, w, h);
}

} // namespace swave
