#pragma once

// Correlated Gaussian noise on a spatial lattice, its eigenmode (Brownian)
// decomposition, dyadic Wong-Zakai smoothings, localization events and
// Girsanov shifts.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "swave/error.hpp"
#include "swave/geometry.hpp"
#include "swave/kernels.hpp"

namespace swave {

/// Time grid on [0, T] plus a regular box lattice of spatial sites.
struct NoiseGrid {
    double T = 1.0;
    int num_steps = 64;
    Vec3 origin = Vec3::Zero(); ///< position of site (0, 0, 0)
    double spacing = 0.25;
    std::array<int, 3> dims{1, 1, 1};

    double dt() const { return T / num_steps; }
    double time(int k) const { return T * double(k) / num_steps; }
    int num_sites() const { return dims[0] * dims[1] * dims[2]; }
    int index(int i, int j, int k) const { return (i * dims[1] + j) * dims[2] + k; }
    std::array<int, 3> coords(int idx) const
    {
        return {idx / (dims[1] * dims[2]), (idx / dims[2]) % dims[1], idx % dims[2]};
    }
    Vec3 site(int idx) const
    {
        const auto c = coords(idx);
        return origin + spacing * Vec3(c[0], c[1], c[2]);
    }
    std::vector<Vec3> lattice() const
    {
        std::vector<Vec3> out(num_sites());
        for (int i = 0; i < num_sites(); ++i)
            out[i] = site(i);
        return out;
    }
    Vec3 upper() const { return origin + spacing * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1); }

    /// Inside the lattice's convex hull, with a relative tolerance.
    bool contains(const Vec3& x) const
    {
        const double tol = 1e-9 * spacing;
        const Vec3 hi = upper();
        for (int a = 0; a < 3; ++a)
            if (x[a] < origin[a] - tol || x[a] > hi[a] + tol)
                return false;
        return true;
    }

    /// The hull contains {x : d(x, K) <= T} for the box K = [lo, hi].
    bool covers_dependence_domain(const Vec3& lo, const Vec3& hi) const
    {
        return contains(lo - Vec3::Constant(T)) && contains(hi + Vec3::Constant(T));
    }

    void validate() const
    {
        require(T > 0, ErrorCode::parameter, "T must be positive");
        require(num_steps >= 1, ErrorCode::parameter, "num_steps must be >= 1");
        require(spacing > 0, ErrorCode::parameter, "lattice spacing must be positive");
        require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, ErrorCode::parameter, "lattice must be nonempty");
    }

    /// n^3 sites with the given spacing, centred on `center`.
    static NoiseGrid cube(double T, int num_steps, int n, double spacing, const Vec3& center = Vec3::Zero())
    {
        NoiseGrid g;
        g.T = T;
        g.num_steps = num_steps;
        g.spacing = spacing;
        g.dims = {n, n, n};
        g.origin = center - Vec3::Constant(0.5 * spacing * (n - 1));
        return g;
    }

    /// n^3 sites spanning the box [lo - T, hi + T], i.e. exactly the
    /// domain of dependence of [0, T] x K for the cube K = [lo, hi]^3.
    static NoiseGrid covering(double T, int num_steps, double lo, double hi, int n)
    {
        require(n >= 2 && hi >= lo, ErrorCode::parameter, "covering lattice needs n >= 2 and lo <= hi");
        const double spacing = (hi - lo + 2 * T) / (n - 1);
        return cube(T, num_steps, n, spacing, Vec3::Constant(0.5 * (lo + hi)));
    }
};

/// Sigma_ab = f(y_a - y_b) on a lattice with its eigendecomposition,
/// eigenvalues in decreasing order. Shared read-only between paths.
struct LatticeCovariance {
    CovarianceSpec spec;
    NoiseGrid grid;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd eigenvalues;  ///< decreasing, clamped at 0 after jitter
    Eigen::MatrixXd eigenvectors; ///< orthonormal columns phi_j
    double jitter = 0.0;          ///< diagonal shift applied, 0 if none

    int num_sites() const { return int(sigma.rows()); }

    /// e_j = phi_j / sqrt(lambda_j), orthonormal in the covariance inner product.
    Eigen::VectorXd mode_vector(int j) const { return eigenvectors.col(j) / std::sqrt(eigenvalues[j]); }

    /// Lattice field representing sum_j c_j e_j in the covariance (Riesz)
    /// sense: sum_j sqrt(lambda_j) phi_j c_j. Pairs a lattice measure g
    /// with the control via g . synthesize(c) = sum_j <g, e_j>_H c_j.
    Eigen::VectorXd synthesize(const Eigen::Ref<const Eigen::VectorXd>& c) const
    {
        const auto m = c.size();
        return eigenvectors.leftCols(m) * (eigenvalues.head(m).cwiseSqrt().cwiseProduct(c));
    }
};

/// Assemble and diagonalize the lattice covariance.
inline std::shared_ptr<const LatticeCovariance> build_lattice_covariance(const CovarianceSpec& spec,
                                                                         const NoiseGrid& grid)
{
    validate(spec);
    grid.validate();
    auto cov = std::make_shared<LatticeCovariance>();
    cov->spec = spec;
    cov->grid = grid;
    const int n = grid.num_sites();
    const auto sites = grid.lattice();
    cov->sigma.resize(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b <= a; ++b)
            cov->sigma(a, b) = cov->sigma(b, a) = eval_kernel(spec, sites[a] - sites[b]);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov->sigma);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::degenerate_covariance, "eigendecomposition of the lattice covariance failed");
    // Eigen returns ascending order.
    cov->eigenvalues = solver.eigenvalues().reverse();
    cov->eigenvectors = solver.eigenvectors().rowwise().reverse();

    const double scale = std::max(1.0, std::abs(cov->eigenvalues[0]));
    if (cov->eigenvalues[n - 1] < -1e-12 * scale) {
        cov->jitter = 1e-10 * cov->sigma.trace();
        cov->eigenvalues.array() += cov->jitter;
        if (cov->eigenvalues[n - 1] < -1e-12 * scale)
            throw Error(ErrorCode::degenerate_covariance,
                        "covariance is not positive semidefinite after jitter (min eigenvalue " +
                            std::to_string(cov->eigenvalues[n - 1]) + ")");
    }
    // Eigenvalues at roundoff level are numerically zero (rank tolerance n eps lambda_max).
    const double rank_tol = n * std::numeric_limits<double>::epsilon() * scale;
    cov->eigenvalues = cov->eigenvalues.unaryExpr([rank_tol](double v) { return v > rank_tol ? v : 0.0; });
    return cov;
}

/// One realization of the noise over the whole time grid.
///
/// Matrices are stored site-by-step (column-major), so memory is laid out
/// step-major: increments.col(m) is the lattice increment over
/// [t_m, t_{m+1}).
struct NoisePath {
    NoiseGrid grid;
    std::shared_ptr<const LatticeCovariance> covariance;
    int num_modes = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd increments;      ///< sites x steps, covariance dt * Sigma per step
    Eigen::MatrixXd mode_increments; ///< modes x steps, W_j(step); standard Brownian increments
    Eigen::MatrixXd subgrid;         ///< sites x steps, iid N(0, dt) per site (sub-lattice residual)

    /// The first num_modes eigenvectors (lattice-orthonormal columns).
    Eigen::MatrixXd eigenbasis() const { return covariance->eigenvectors.leftCols(num_modes); }
};

/// Draw increments from N(0, dt Sigma) via the eigendecomposition.
inline NoisePath sample_noise(std::shared_ptr<const LatticeCovariance> cov, int num_modes, std::uint64_t seed)
{
    const NoiseGrid& grid = cov->grid;
    const int n = cov->num_sites();
    require(num_modes >= 1 && num_modes <= n, ErrorCode::parameter, "num_modes must lie in [1, lattice size]");
    require(cov->eigenvalues[num_modes - 1] > 0, ErrorCode::degenerate_covariance,
            "requested eigenmodes include a zero eigenvalue");
    NoisePath path;
    path.grid = grid;
    path.covariance = cov;
    path.num_modes = num_modes;
    path.seed = seed;

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(grid.dt());
    const int steps = grid.num_steps;
    Eigen::MatrixXd xi(n, steps);
    for (int m = 0; m < steps; ++m)
        for (int a = 0; a < n; ++a)
            xi(a, m) = sd * normal(gen);
    path.subgrid.resize(n, steps);
    for (int m = 0; m < steps; ++m)
        for (int a = 0; a < n; ++a)
            path.subgrid(a, m) = sd * normal(gen);

    const Eigen::VectorXd root = cov->eigenvalues.cwiseSqrt();
    path.increments.noalias() = cov->eigenvectors * (root.asDiagonal() * xi);
    path.mode_increments.noalias() = root.head(num_modes).cwiseInverse().asDiagonal() *
                                     (cov->eigenvectors.leftCols(num_modes).transpose() * path.increments);
    return path;
}

inline NoisePath sample_noise(const CovarianceSpec& spec, const NoiseGrid& grid, int num_modes, std::uint64_t seed)
{
    return sample_noise(build_lattice_covariance(spec, grid), num_modes, seed);
}

/// Rebuild increments from the mode increments of the first `modes`
/// eigenvectors: sum_j sqrt(lambda_j) phi_j W_j.
inline Eigen::MatrixXd reconstruct_increments(const NoisePath& path)
{
    const auto& cov = *path.covariance;
    const int m = path.num_modes;
    return cov.eigenvectors.leftCols(m) *
           (cov.eigenvalues.head(m).cwiseSqrt().asDiagonal() * path.mode_increments);
}

namespace detail {

inline int dyadic_ratio(const NoiseGrid& grid, int n)
{
    require(n >= 1 && n < 31, ErrorCode::parameter, "dyadic level must lie in [1, 30]");
    const int parts = 1 << n;
    if (grid.num_steps % parts != 0)
        throw Error(ErrorCode::alignment, "2^" + std::to_string(n) + " does not divide num_steps = " +
                                              std::to_string(grid.num_steps));
    return grid.num_steps / parts;
}

// W_j over the dyadic interval Delta_i.
inline double dyadic_increment(const NoisePath& path, int j, int i, int ratio)
{
    return path.mode_increments.row(j).segment(i * ratio, ratio).sum();
}

} // namespace detail

/// Level-n smoothing: piecewise-constant slopes on the 2^n dyadic intervals.
struct SmoothedNoise {
    int level = 1;
    double T = 1.0;
    Eigen::MatrixXd slopes; ///< n x 2^n; column i is the slope on Delta_i

    int intervals() const { return int(slopes.cols()); }

    /// Dyadic interval containing t; intervals are closed on the left.
    int interval_of(double t) const
    {
        const int i = int(std::floor(t * intervals() / T + 1e-9));
        return std::clamp(i, 0, intervals() - 1);
    }

    double value(int j, double t) const { return j < slopes.rows() ? slopes(j, interval_of(t)) : 0.0; }

    /// Slopes sampled on a time grid of `num_steps` steps (left points),
    /// padded with zero rows up to `num_modes`.
    Eigen::MatrixXd step_coefficients(int num_steps, int num_modes) const
    {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(num_modes, num_steps);
        const int rows = std::min<int>(num_modes, int(slopes.rows()));
        for (int m = 0; m < num_steps; ++m)
            out.col(m).head(rows) = slopes.col(interval_of(T * double(m) / num_steps)).head(rows);
        return out;
    }
};

/// The slope on Delta_{i+1} is 2^n / T * W_j(Delta_i); Delta_0 carries 0.
inline SmoothedNoise build_smoothed(const NoisePath& path, int n)
{
    require(n <= path.num_modes, ErrorCode::parameter, "smoothing level exceeds the number of modes");
    const int ratio = detail::dyadic_ratio(path.grid, n);
    const int parts = 1 << n;
    SmoothedNoise w;
    w.level = n;
    w.T = path.grid.T;
    w.slopes = Eigen::MatrixXd::Zero(n, parts);
    const double scale = parts / path.grid.T;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i + 1 < parts; ++i)
            w.slopes(j, i + 1) = scale * detail::dyadic_increment(path, j, i, ratio);
    return w;
}

/// A Cameron-Martin control: per-mode coefficients, constant on each time step.
struct ControlH {
    double T = 1.0;
    Eigen::MatrixXd coefficients; ///< modes x steps

    int num_modes() const { return int(coefficients.rows()); }
    int num_steps() const { return int(coefficients.cols()); }
    double dt() const { return T / num_steps(); }
    double squared_norm() const { return dt() * coefficients.squaredNorm(); }

    static ControlH zero(int modes, int steps, double T)
    {
        return {T, Eigen::MatrixXd::Zero(modes, steps)};
    }

    /// h_j = value for one mode j, zero elsewhere.
    static ControlH constant(int modes, int steps, double T, int j, double value)
    {
        ControlH h = zero(modes, steps, T);
        h.coefficients.row(j).setConstant(value);
        return h;
    }

    /// The smoothed noise viewed as a control on the step grid.
    static ControlH from_smoothed(const SmoothedNoise& w, int steps, int modes)
    {
        return {w.T, w.step_coefficients(steps, modes)};
    }
};

struct TimeInterval {
    double lo = 0.0;
    double hi = 1.0;
};

namespace detail {

inline double overlap(double a0, double a1, double b0, double b1)
{
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

} // namespace detail

/// ||w^n 1_[lo,hi]||_{H_T}: the square root of sum_j int_lo^hi (w_j)^2 dt.
inline double ht_norm(const SmoothedNoise& w, TimeInterval r)
{
    require(r.lo >= 0 && r.hi <= w.T + 1e-12 && r.lo <= r.hi, ErrorCode::parameter, "interval outside [0, T]");
    const double width = w.T / w.intervals();
    double acc = 0;
    for (int i = 0; i < w.intervals(); ++i) {
        const double len = detail::overlap(i * width, (i + 1) * width, r.lo, r.hi);
        if (len > 0)
            acc += len * w.slopes.col(i).squaredNorm();
    }
    return std::sqrt(acc);
}

inline double ht_norm(const ControlH& h, TimeInterval r)
{
    require(r.lo >= 0 && r.hi <= h.T + 1e-12 && r.lo <= r.hi, ErrorCode::parameter, "interval outside [0, T]");
    const double dt = h.dt();
    double acc = 0;
    for (int m = 0; m < h.num_steps(); ++m) {
        const double len = detail::overlap(m * dt, (m + 1) * dt, r.lo, r.hi);
        if (len > 0)
            acc += len * h.coefficients.col(m).squaredNorm();
    }
    return std::sqrt(acc);
}

/// sqrt(2 ln 2): the localization constant must exceed it.
inline double localization_alpha_threshold() { return std::sqrt(2.0 * std::numbers::ln2); }

/// Number of dyadic intervals examined by L_n(t): [2^n t / T - 1]^+ + 1,
/// with [.] the integer part.
inline int localization_interval_count(int n, double t, double T)
{
    const int parts = 1 << n;
    const int last = std::max(0, int(std::floor(parts * t / T - 1.0 + 1e-9)));
    return std::min(last, parts - 1) + 1;
}

/// L_n(t): every |W_j(Delta_i)|, j < n, i up to the integer part of
/// 2^n t / T - 1, stays below alpha sqrt(n) 2^{-n/2}.
inline bool localization_indicator(const NoisePath& path, int n, double t, double alpha)
{
    require(alpha > localization_alpha_threshold(), ErrorCode::parameter, "alpha must exceed sqrt(2 ln 2)");
    require(n >= 1 && n <= path.num_modes, ErrorCode::parameter, "localization level must lie in [1, num_modes]");
    require(t >= 0 && t <= path.grid.T, ErrorCode::parameter, "t outside [0, T]");
    const int ratio = detail::dyadic_ratio(path.grid, n);
    const double bound = alpha * std::sqrt(double(n)) * std::pow(2.0, -0.5 * n);
    const int count = localization_interval_count(n, t, path.grid.T);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < count; ++i)
            if (std::abs(detail::dyadic_increment(path, j, i, ratio)) > bound)
                return false;
    return true;
}

/// P(L_n(t)) in closed form: the n * count dyadic increments are iid
/// N(0, T 2^{-n}), so the probability is erf(alpha sqrt(n / (2 T)))^(n count).
inline double localization_probability(int n, double t, double alpha, double T = 1.0)
{
    require(alpha > localization_alpha_threshold(), ErrorCode::parameter, "alpha must exceed sqrt(2 ln 2)");
    const double p = std::erf(alpha * std::sqrt(n / (2.0 * T)));
    return std::pow(p, double(n) * localization_interval_count(n, t, T));
}

/// ||w^n 1_[lo,hi]||_{H_T}, reported only on the event L_n(hi).
struct Localization {
    double alpha = 2.0;
    const NoisePath* path = nullptr;
};

inline std::optional<double> ht_norm(const SmoothedNoise& w, TimeInterval r, const Localization& loc)
{
    require(loc.path != nullptr, ErrorCode::parameter, "localized norm needs the source path");
    if (!localization_indicator(*loc.path, w.level, r.hi, loc.alpha))
        return std::nullopt;
    return ht_norm(w, r);
}

/// The path omega + h - w^n.
///
/// Every stored mode j is moved by the step integral of h_j - w^n_j
/// (w^n vanishes for j >= n); lattice increments move by the synthesized
/// field of that shift, and the sub-lattice residual is left unchanged.
inline NoisePath girsanov_shift(const NoisePath& path, const ControlH& h, int n)
{
    require(h.num_steps() == path.grid.num_steps && std::abs(h.T - path.grid.T) < 1e-12, ErrorCode::grid_mismatch,
            "control and noise live on different time grids");
    require(h.num_modes() <= path.num_modes, ErrorCode::parameter, "control has more modes than the path");
    const SmoothedNoise w = build_smoothed(path, n);
    Eigen::MatrixXd shift = -w.step_coefficients(path.grid.num_steps, path.num_modes);
    shift.topRows(h.num_modes()) += h.coefficients;
    shift *= path.grid.dt();

    NoisePath out = path;
    out.mode_increments += shift;
    const auto& cov = *path.covariance;
    out.increments.noalias() += cov.eigenvectors.leftCols(path.num_modes) *
                                (cov.eigenvalues.head(path.num_modes).cwiseSqrt().asDiagonal() * shift);
    return out;
}

} // namespace swave
