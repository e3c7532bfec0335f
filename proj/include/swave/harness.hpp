#pragma once

// Experiment runner: strict JSON configs, replica ensembles with derived
// seeds, the acceptance experiments, and CSV/JSON reports.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <nlohmann/json.hpp>

#include "swave/holder.hpp"
#include "swave/io.hpp"
#include "swave/kernels.hpp"
#include "swave/noise.hpp"
#include "swave/solver.hpp"

namespace swave {

inline constexpr const char* software_version = "swave 1.0.0";
inline constexpr const char* run_record_schema = "swave-run-record/1";

// ---- oracles and statistics -------------------------------------------------

/// int_0^inf u^{beta-3} sin^2 u du by panel quadrature over [0, X] plus
/// the mean tail (1/2) X^{beta-2} / (2 - beta); X is a multiple of pi so
/// the oscillating tail starts at O(X^{beta-4}).
inline double spectral_sine_integral(double beta)
{
    require(beta > 0 && beta < 2, ErrorCode::parameter, "spectral integral needs 0 < beta < 2");
    // (sin u / u)^2 u^{beta-1} stays finite down to the smallest abscissae.
    auto f = [beta](double u) {
        const double s = u < 1e-8 ? 1.0 : std::sin(u) / u;
        return s * s * std::pow(u, beta - 1);
    };
    const double pi = std::numbers::pi;
    boost::math::quadrature::tanh_sinh<double> ts;
    double acc = ts.integrate(f, 0.0, pi);
    constexpr int panels = 20000;
    for (int k = 1; k < panels; ++k)
        acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, k * pi, (k + 1) * pi, 0, 0.0);
    const double X = panels * pi;
    return acc + 0.5 * std::pow(X, beta - 2) / (2 - beta);
}

/// K_beta with ||G(s)||_H^2 = K_beta s^{2-beta} for the Riesz kernel:
/// (2 pi)^{-3} C_beta 4 pi I_beta, where |xi|^{beta-3} C_beta is the
/// Fourier transform of |x|^{-beta}.
inline double riesz_spectral_constant(double beta)
{
    const double pi = std::numbers::pi;
    const double c = std::pow(pi, 1.5) * std::pow(2.0, 3 - beta) * std::tgamma((3 - beta) / 2) / std::tgamma(beta / 2);
    return c * 4 * pi * spectral_sine_integral(beta) / std::pow(2 * pi, 3);
}

/// Var X(t, x) = K_beta t^{3-beta} / (3 - beta) for the additive equation.
inline double additive_variance_oracle(double beta, double t)
{
    return riesz_spectral_constant(beta) * std::pow(t, 3 - beta) / (3 - beta);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval at confidence 95%.
inline Interval wilson_interval(std::size_t successes, std::size_t n)
{
    require(n > 0, ErrorCode::parameter, "Wilson interval needs n > 0");
    const double z = boost::math::quantile(boost::math::normal(), 0.975);
    const double p = double(successes) / n, z2n = z * z / n;
    const double centre = (p + z2n / 2) / (1 + z2n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2n / (4.0 * n)) / (1 + z2n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct Exceedance {
    double probability = 0.0;
    Interval wilson;
    std::size_t exceed = 0, total = 0;
};

/// Fraction of samples strictly above lambda with its Wilson interval.
inline Exceedance estimate_exceedance(const std::vector<double>& samples, double lambda)
{
    require(!samples.empty(), ErrorCode::parameter, "estimate_exceedance needs samples");
    require(lambda > 0, ErrorCode::parameter, "lambda must be positive");
    Exceedance e;
    e.total = samples.size();
    e.exceed = std::size_t(std::count_if(samples.begin(), samples.end(), [&](double s) { return s > lambda; }));
    e.probability = double(e.exceed) / e.total;
    e.wilson = wilson_interval(e.exceed, e.total);
    return e;
}

inline double median(std::vector<double> v)
{
    require(!v.empty(), ErrorCode::parameter, "median of an empty sample");
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    const double hi = v[h];
    if (v.size() % 2)
        return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + h));
}

struct VarianceEstimate {
    double mean = 0.0, variance = 0.0;
    Interval ci; ///< 95% chi-square interval for the variance
};

inline VarianceEstimate sample_variance(const std::vector<double>& x)
{
    require(x.size() >= 2, ErrorCode::parameter, "variance needs two samples");
    VarianceEstimate v;
    const double n = double(x.size());
    for (double a : x)
        v.mean += a;
    v.mean /= n;
    for (double a : x)
        v.variance += (a - v.mean) * (a - v.mean);
    v.variance /= n - 1;
    const boost::math::chi_squared chi(n - 1);
    v.ci = {(n - 1) * v.variance / boost::math::quantile(chi, 0.975),
            (n - 1) * v.variance / boost::math::quantile(chi, 0.025)};
    return v;
}

/// splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Seed of replica r: the r-th output of a splitmix64 stream started at base.
inline std::uint64_t replica_seed(std::uint64_t base, std::size_t r)
{
    return splitmix64(base + 0x9E3779B97F4A7C15ull * std::uint64_t(r));
}

// ---- configuration ------------------------------------------------------------

enum class Experiment {
    variance_oracle,
    increment_exponent,
    wongzakai_growth,
    localization_prob,
    support_probe,
    hypotheses,
    picard_check,
};

inline const std::vector<std::pair<Experiment, std::string>>& experiment_names()
{
    static const std::vector<std::pair<Experiment, std::string>> names{
        {Experiment::variance_oracle, "variance-oracle"},     {Experiment::increment_exponent, "increment-exponent"},
        {Experiment::wongzakai_growth, "wongzakai-growth"},   {Experiment::localization_prob, "localization-prob"},
        {Experiment::support_probe, "support-probe"},         {Experiment::hypotheses, "hypotheses"},
        {Experiment::picard_check, "picard-check"}};
    return names;
}

inline std::string to_string(Experiment e)
{
    for (const auto& [k, v] : experiment_names())
        if (k == e)
            return v;
    return "unknown";
}

inline std::optional<Experiment> experiment_from_string(const std::string& s)
{
    for (const auto& [k, v] : experiment_names())
        if (v == s)
            return k;
    return std::nullopt;
}

/// A config rejected for one or more reasons, all listed.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(ErrorCode::config, join(problems)), problems_(std::move(problems))
    {
    }
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p)
    {
        std::string s = std::to_string(p.size()) + " problem(s)";
        for (const auto& m : p)
            s += "\n  " + m;
        return s;
    }
    std::vector<std::string> problems_;
};

struct InitialConfig {
    std::string kind = "zero"; ///< zero | constant | quadratic | bump
    double value = 0.0;        ///< constant: v0; bump: amplitude
    double velocity = 0.0;     ///< constant: initial velocity
    double radius = 0.5;       ///< bump support radius

    InitialData build() const
    {
        if (kind == "constant")
            return InitialData::constant(value, velocity);
        if (kind == "quadratic")
            return InitialData::quadratic();
        if (kind == "bump")
            return InitialData::bump(radius, value);
        return InitialData::zero();
    }
};

/// Everything an experiment needs. Defaults form the desk profile.
struct ExperimentConfig {
    Experiment experiment = Experiment::variance_oracle;
    CovarianceSpec kernel;            ///< reg_radius defaults to half the lattice spacing
    bool reg_radius_given = false;
    std::string kernel_file;          ///< tabulated profile source, if any
    double T = 1.0;
    int num_steps = 64;
    int sites_per_axis = 9;
    std::optional<double> spacing;    ///< absent: cover the domain of dependence of K exactly
    double domain_lo = -0.5, domain_hi = 0.5;
    int points_per_axis = 5;
    EquationSpec equation{Coefficient::constant(1.0), {}, {}, {}, Variant::base, 0};
    InitialConfig initial;
    std::vector<int> n_levels{2, 3, 4, 5};
    int replicas = 200;
    double alpha = 2.0;
    double rho = 0.25;
    double lambda = 0.0;              ///< 0: use the median at the first level
    std::uint64_t seed = 1;
    std::string output_dir = "runs";
    double t0 = 0.25;
    int num_modes = 16;
    int sphere_order = 256;
    bool subgrid_closure = true;
    int workers = 1;                  ///< 0: hardware concurrency
    std::vector<double> times{0.5, 1.0};
    std::vector<double> moments{2.0, 4.0};
    std::string direction = "space";
    int control_mode = 0;             ///< support-probe: h = value on this mode
    double control_value = 0.0;       ///< 0 disables the shifted-equation probe

    NoiseGrid grid() const
    {
        if (spacing)
            return NoiseGrid::cube(T, num_steps, sites_per_axis, *spacing,
                                   Vec3::Constant(0.5 * (domain_lo + domain_hi)));
        return NoiseGrid::covering(T, num_steps, domain_lo, domain_hi, sites_per_axis);
    }

    std::vector<Vec3> eval_points() const
    {
        std::vector<Vec3> pts;
        const int n = points_per_axis;
        auto coord = [&](int i) { return n == 1 ? 0.5 * (domain_lo + domain_hi)
                                                : domain_lo + (domain_hi - domain_lo) * i / (n - 1); };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    pts.emplace_back(coord(i), coord(j), coord(k));
        return pts;
    }

    CovarianceSpec covariance() const
    {
        CovarianceSpec s = kernel;
        if (!reg_radius_given)
            s.reg_radius = 0.5 * grid().spacing;
        s.horizon = T;
        return s;
    }

    SolverConfig solver_config() const
    {
        SolverConfig c;
        c.sphere_order = sphere_order;
        c.subgrid_closure = subgrid_closure;
        c.eval_points = eval_points();
        c.t0 = t0;
        return c;
    }

    bool uses_solver() const
    {
        return experiment == Experiment::variance_oracle || experiment == Experiment::increment_exponent ||
               experiment == Experiment::support_probe || experiment == Experiment::picard_check;
    }
};

namespace detail {

// Reads keys of one JSON object, collecting problems instead of throwing,
// and reports keys nobody asked for.
class KeyReader {
public:
    KeyReader(const nlohmann::json& j, std::string where, std::vector<std::string>& problems)
        : j_(j), where_(std::move(where)), problems_(problems)
    {
        if (!j_.is_object())
            fail("", "must be an object");
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        seen_.insert(key);
        if (!j_.is_object() || !j_.contains(key))
            return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            fail(key, "has the wrong type");
        }
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    const nlohmann::json* child(const std::string& key)
    {
        seen_.insert(key);
        return has(key) ? &j_.at(key) : nullptr;
    }

    void fail(const std::string& key, const std::string& msg)
    {
        problems_.push_back((key.empty() ? where_ : path(key)) + ": " + msg);
    }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish()
    {
        if (!j_.is_object())
            return;
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k))
                problems_.push_back(path(k) + ": unknown key");
    }

private:
    const nlohmann::json& j_;
    std::string where_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

inline void read_coefficient(const nlohmann::json& j, const std::string& where, Coefficient& c,
                             std::vector<std::string>& problems)
{
    KeyReader r(j, where, problems);
    r.get("c0", c.c0);
    r.get("c1", c.c1);
    r.get("c2", c.c2);
    r.get("omega", c.omega);
    r.finish();
}

} // namespace detail

/// Parses and validates a config; every violated field is reported at once.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {})
{
    std::vector<std::string> problems;
    ExperimentConfig c;
    detail::KeyReader top(j, "", problems);

    std::string exp;
    top.get("experiment", exp);
    if (auto e = experiment_from_string(exp))
        c.experiment = *e;
    else
        problems.push_back("experiment: '" + exp + "' is not one of the known experiments");

    if (const auto* k = top.child("kernel")) {
        detail::KeyReader r(*k, "kernel", problems);
        std::string kind = "riesz";
        double beta = 1.0;
        r.get("kind", kind);
        r.get("beta", beta);
        r.get("file", c.kernel_file);
        c.reg_radius_given = r.has("reg_radius");
        r.get("reg_radius", c.kernel.reg_radius);
        if (kind == "riesz") {
            c.kernel.kind = RieszKernel{beta};
            if (!(beta > 0 && beta < 2))
                r.fail("beta", "Riesz exponent must lie in (0, 2)");
        } else if (kind == "tabulated") {
            if (c.kernel_file.empty()) {
                r.fail("file", "tabulated kernels need a profile file");
            } else {
                std::filesystem::path p = c.kernel_file;
                if (p.is_relative() && !base_dir.empty())
                    p = base_dir / p;
                c.kernel_file = p.string(); // snapshots must replay from any directory
                try {
                    c.kernel.kind = load_tabulated_kernel(p.string());
                } catch (const Error& e) {
                    r.fail("file", e.what());
                }
            }
        } else {
            r.fail("kind", "must be 'riesz' or 'tabulated'");
        }
        if (c.reg_radius_given && !(c.kernel.reg_radius > 0))
            r.fail("reg_radius", "must be positive");
        r.finish();
    }

    if (const auto* g = top.child("grid")) {
        detail::KeyReader r(*g, "grid", problems);
        r.get("T", c.T);
        r.get("num_steps", c.num_steps);
        r.get("sites_per_axis", c.sites_per_axis);
        double spacing = 0;
        r.get("spacing", spacing);
        if (r.has("spacing"))
            c.spacing = spacing;
        r.finish();
    }
    if (const auto* d = top.child("domain")) {
        detail::KeyReader r(*d, "domain", problems);
        r.get("lo", c.domain_lo);
        r.get("hi", c.domain_hi);
        r.get("points_per_axis", c.points_per_axis);
        r.finish();
    }
    if (const auto* e = top.child("equation")) {
        detail::KeyReader r(*e, "equation", problems);
        std::string variant = to_string(c.equation.variant);
        r.get("variant", variant);
        try {
            c.equation.variant = variant_from_string(variant);
        } catch (const Error&) {
            r.fail("variant", "unknown variant '" + variant + "'");
        }
        r.get("delay_level", c.equation.delay_level);
        for (auto [key, coef] : {std::pair{"A", &c.equation.A}, std::pair{"B", &c.equation.B},
                                 std::pair{"D", &c.equation.D}, std::pair{"b", &c.equation.b}})
            if (const auto* cj = r.child(key)) {
                *coef = Coefficient{};
                detail::read_coefficient(*cj, r.path(key), *coef, problems);
            }
        r.finish();
    }
    if (const auto* ic = top.child("initial")) {
        detail::KeyReader r(*ic, "initial", problems);
        r.get("kind", c.initial.kind);
        r.get("value", c.initial.value);
        r.get("velocity", c.initial.velocity);
        r.get("radius", c.initial.radius);
        if (c.initial.kind != "zero" && c.initial.kind != "constant" && c.initial.kind != "quadratic" &&
            c.initial.kind != "bump")
            r.fail("kind", "must be zero, constant, quadratic or bump");
        if (c.initial.kind == "bump" && !(c.initial.radius > 0))
            r.fail("radius", "must be positive");
        r.finish();
    }
    if (const auto* h = top.child("control")) {
        detail::KeyReader r(*h, "control", problems);
        r.get("mode", c.control_mode);
        r.get("value", c.control_value);
        r.finish();
    }
    top.get("n_levels", c.n_levels);
    top.get("replicas", c.replicas);
    top.get("alpha", c.alpha);
    top.get("rho", c.rho);
    top.get("lambda", c.lambda);
    top.get("seed", c.seed);
    top.get("output_dir", c.output_dir);
    top.get("t0", c.t0);
    top.get("num_modes", c.num_modes);
    top.get("sphere_order", c.sphere_order);
    top.get("subgrid_closure", c.subgrid_closure);
    top.get("workers", c.workers);
    top.get("times", c.times);
    top.get("moments", c.moments);
    top.get("direction", c.direction);
    top.finish();

    // Semantic checks.
    auto bad = [&](const std::string& key, const std::string& msg) { problems.push_back(key + ": " + msg); };
    if (c.replicas < 1)
        bad("replicas", "must be >= 1");
    if (c.workers < 0)
        bad("workers", "must be >= 0");
    if (!(c.T > 0))
        bad("grid.T", "must be positive");
    if (c.num_steps < 1)
        bad("grid.num_steps", "must be >= 1");
    if (c.sites_per_axis < 2)
        bad("grid.sites_per_axis", "must be >= 2");
    else if (std::pow(double(c.sites_per_axis), 3) > 4000)
        bad("grid.sites_per_axis", "lattices above 4000 sites are out of scope");
    if (c.spacing && !(*c.spacing > 0))
        bad("grid.spacing", "must be positive");
    if (!(c.domain_hi >= c.domain_lo))
        bad("domain", "hi must be >= lo");
    if (c.points_per_axis < 1)
        bad("domain.points_per_axis", "must be >= 1");
    if (c.n_levels.empty())
        bad("n_levels", "must not be empty");
    for (std::size_t i = 0; i < c.n_levels.size(); ++i) {
        if (c.n_levels[i] < 1 || c.n_levels[i] > 20)
            bad("n_levels", "levels must lie in [1, 20]");
        if (i > 0 && c.n_levels[i] <= c.n_levels[i - 1])
            bad("n_levels", "must be sorted ascending without repeats");
    }
    if (!(c.alpha > localization_alpha_threshold()))
        bad("alpha", "must exceed sqrt(2 ln 2) = " + std::to_string(localization_alpha_threshold()));
    if (!(c.rho > 0 && c.rho < 1))
        bad("rho", "must lie in (0, 1)");
    if (c.lambda < 0)
        bad("lambda", "must be >= 0 (0 selects the first-level median)");
    if (!(c.t0 >= 0 && c.t0 < c.T))
        bad("t0", "must lie in [0, T)");
    if (c.num_modes < 1)
        bad("num_modes", "must be >= 1");
    if (!supported_fibonacci_order(c.sphere_order))
        bad("sphere_order", "must be an even node count in [16, 16384]");
    for (double t : c.times)
        if (!(t > 0 && t <= c.T))
            bad("times", "every time must lie in (0, T]");
    for (double p : c.moments)
        if (!(p > 0))
            bad("moments", "moment orders must be positive");
    if (c.direction != "space" && c.direction != "time")
        bad("direction", "must be 'space' or 'time'");
    if (c.control_mode < 0 || c.control_mode >= c.num_modes)
        bad("control.mode", "must index one of the num_modes modes");
    if (problems.empty()) {
        const int top_level = c.n_levels.back();
        if (c.num_steps % (1 << top_level) != 0)
            bad("grid.num_steps", "must be a multiple of 2^" + std::to_string(top_level) + " for the dyadic levels");
        if (top_level > c.num_modes)
            bad("num_modes", "must be at least the largest level in n_levels");
        if (c.num_modes > int(std::pow(c.sites_per_axis, 3)))
            bad("num_modes", "cannot exceed the lattice size");
        const NoiseGrid g = c.grid();
        if (c.uses_solver() &&
            !g.covers_dependence_domain(Vec3::Constant(c.domain_lo), Vec3::Constant(c.domain_hi)))
            bad("grid", "lattice does not cover the domain of dependence {x : d(x, K) <= T}");
        if (c.experiment == Experiment::picard_check && c.equation.delay_level > 0)
            bad("equation.delay_level", "picard-check draws its own equations");
    }
    if (!problems.empty())
        throw ConfigError(std::move(problems));
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw ConfigError({p.string() + ": cannot open"});
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError({p.string() + ": " + e.what()});
    }
    return parse_config(j, p.parent_path());
}

/// The resolved config as it was run (defaults filled in).
inline nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json kernel = to_json(c.covariance());
    if (!c.kernel_file.empty()) {
        kernel = {{"kind", "tabulated"}, {"file", c.kernel_file}, {"reg_radius", c.covariance().reg_radius}};
    } else {
        kernel.erase("horizon");
    }
    nlohmann::json grid{{"T", c.T}, {"num_steps", c.num_steps}, {"sites_per_axis", c.sites_per_axis}};
    if (c.spacing)
        grid["spacing"] = *c.spacing;
    auto coef = [](const Coefficient& k) { return to_json(k); };
    return {{"experiment", to_string(c.experiment)},
            {"kernel", kernel},
            {"grid", grid},
            {"domain", {{"lo", c.domain_lo}, {"hi", c.domain_hi}, {"points_per_axis", c.points_per_axis}}},
            {"equation",
             {{"variant", to_string(c.equation.variant)},
              {"A", coef(c.equation.A)},
              {"B", coef(c.equation.B)},
              {"D", coef(c.equation.D)},
              {"b", coef(c.equation.b)},
              {"delay_level", c.equation.delay_level}}},
            {"initial",
             {{"kind", c.initial.kind},
              {"value", c.initial.value},
              {"velocity", c.initial.velocity},
              {"radius", c.initial.radius}}},
            {"control", {{"mode", c.control_mode}, {"value", c.control_value}}},
            {"n_levels", c.n_levels},
            {"replicas", c.replicas},
            {"alpha", c.alpha},
            {"rho", c.rho},
            {"lambda", c.lambda},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"t0", c.t0},
            {"num_modes", c.num_modes},
            {"sphere_order", c.sphere_order},
            {"subgrid_closure", c.subgrid_closure},
            {"workers", c.workers},
            {"times", c.times},
            {"moments", c.moments},
            {"direction", c.direction}};
}

// ---- records ---------------------------------------------------------------------

/// A CSV-shaped table; each row is a JSON array of numbers or strings.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<nlohmann::json> rows;

    bool operator==(const Table&) const = default;
};

struct RunRecord {
    std::string schema = run_record_schema;
    std::string version = software_version;
    std::string experiment;
    nlohmann::json config;
    int replicas = 0;
    int excluded = 0;             ///< replicas aborted by a blow-up
    std::vector<Table> tables;    ///< tables[0] holds one row per kept replica
    nlohmann::json aggregates = nlohmann::json::object();
    double wall_time_s = 0.0;     ///< the only field that varies between identical runs

    bool operator==(const RunRecord&) const = default;
    const Table& table(const std::string& name) const
    {
        for (const auto& t : tables)
            if (t.name == name)
                return t;
        throw Error(ErrorCode::parameter, "run record has no table '" + name + "'");
    }
};

inline nlohmann::json to_json(const Table& t) { return {{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}}; }

inline nlohmann::json to_json(const RunRecord& r)
{
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : r.tables)
        tables.push_back(to_json(t));
    return {{"schema", r.schema},     {"version", r.version},       {"experiment", r.experiment},
            {"config", r.config},     {"replicas", r.replicas},     {"excluded", r.excluded},
            {"tables", tables},       {"aggregates", r.aggregates}, {"wall_time_s", r.wall_time_s}};
}

inline RunRecord run_record_from_json(const nlohmann::json& j)
{
    RunRecord r;
    r.schema = j.at("schema").get<std::string>();
    require(r.schema == run_record_schema, ErrorCode::io, "unsupported run record schema '" + r.schema + "'");
    r.version = j.at("version").get<std::string>();
    r.experiment = j.at("experiment").get<std::string>();
    r.config = j.at("config");
    r.replicas = j.at("replicas").get<int>();
    r.excluded = j.at("excluded").get<int>();
    for (const auto& t : j.at("tables"))
        r.tables.push_back({t.at("name").get<std::string>(), t.at("columns").get<std::vector<std::string>>(),
                            t.at("rows").get<std::vector<nlohmann::json>>()});
    r.aggregates = j.at("aggregates");
    r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
}

namespace detail {

inline std::string csv_cell(const nlohmann::json& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned() || v.is_boolean())
        return v.dump();
    if (v.is_null())
        return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
}

} // namespace detail

inline std::string to_csv(const Table& t)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << detail::csv_cell(row[i]);
        out << '\n';
    }
    return out.str();
}

enum class ReportFormat { csv, json };

/// Writes the config snapshot plus either one CSV per table or the JSON record.
inline std::vector<std::filesystem::path> emit_report(const RunRecord& record, ReportFormat format,
                                                      const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorCode::io, "cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        require(bool(out), ErrorCode::io, "cannot write " + p.string());
        out << text;
        require(bool(out), ErrorCode::io, "write failed for " + p.string());
        written.push_back(p);
    };
    put(dir / "config.json", record.config.dump(2) + "\n");
    if (format == ReportFormat::csv)
        for (const auto& t : record.tables)
            put(dir / (t.name + ".csv"), to_csv(t));
    else
        put(dir / "record.json", to_json(record).dump(2) + "\n");
    return written;
}

// ---- replica execution -----------------------------------------------------------

/// One replica's output row, or nothing if it blew up.
using ReplicaFn = std::function<std::optional<nlohmann::json>(std::size_t replica, std::uint64_t seed)>;

struct ReplicaResults {
    std::vector<std::pair<std::size_t, nlohmann::json>> rows; ///< sorted by replica index
    int excluded = 0;
};

/// Runs replicas 0..n-1 on `workers` threads; BlowUpError excludes a replica.
/// Rows come back in replica order whatever the scheduling.
inline ReplicaResults run_replicas(std::size_t n, std::uint64_t base_seed, int workers, const ReplicaFn& fn)
{
    if (workers <= 0)
        workers = int(std::max(1u, std::thread::hardware_concurrency()));
    workers = int(std::min<std::size_t>(std::size_t(workers), std::max<std::size_t>(n, 1)));
    std::vector<std::optional<nlohmann::json>> slots(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t r = next++; r < n; r = next++) {
            try {
                slots[r] = fn(r, replica_seed(base_seed, r));
            } catch (const BlowUpError&) {
                slots[r].reset();
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    ReplicaResults out;
    for (std::size_t r = 0; r < n; ++r) {
        if (slots[r])
            out.rows.emplace_back(r, std::move(*slots[r]));
        else
            ++out.excluded;
    }
    return out;
}

// ---- experiments -----------------------------------------------------------------

namespace detail {

inline RunRecord start_record(const ExperimentConfig& c)
{
    RunRecord r;
    r.experiment = to_string(c.experiment);
    r.config = to_json(c);
    r.replicas = c.replicas;
    return r;
}

inline Table replica_table(std::vector<std::string> columns, const ReplicaResults& res)
{
    Table t{"replicas", std::move(columns), {}};
    for (const auto& [r, row] : res.rows)
        t.rows.push_back(row);
    return t;
}

inline std::uint64_t row_seed(const nlohmann::json& row) { return row.at(1).get<std::uint64_t>(); }

} // namespace detail

/// Var X(t, centre) against the spectral oracle.
inline RunRecord run_variance_oracle(const ExperimentConfig& c)
{
    RunRecord rec = detail::start_record(c);
    auto cov = build_lattice_covariance(c.covariance(), c.grid());
    SolverConfig sc = c.solver_config();
    sc.eval_points = {Vec3::Constant(0.5 * (c.domain_lo + c.domain_hi))};
    const MildSolver solver(cov, c.initial.build(), sc);
    std::vector<int> steps;
    for (double t : c.times)
        steps.push_back(int(std::lround(t / c.grid().dt())));
    auto res = run_replicas(c.replicas, c.seed, c.workers, [&](std::size_t r, std::uint64_t seed) {
        const NoisePath path = sample_noise(cov, c.num_modes, seed);
        const FieldSample f = solver.solve_mild(c.equation, &path, nullptr, nullptr);
        nlohmann::json row{r, seed};
        for (int k : steps)
            row.push_back(f.values(k, 0));
        return std::optional<nlohmann::json>(row);
    });
    std::vector<std::string> cols{"replica", "seed"};
    for (double t : c.times)
        cols.push_back("X_t" + detail::csv_cell(t));
    rec.tables.push_back(detail::replica_table(cols, res));
    rec.excluded = res.excluded;

    Table summary{"summary", {"t", "variance", "ci_lo", "ci_hi", "oracle", "ratio"}, {}};
    const bool riesz = c.kernel_file.empty() && c.covariance().is_riesz();
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        std::vector<double> x;
        for (const auto& [r, row] : res.rows)
            x.push_back(row.at(2 + i).get<double>());
        if (x.size() < 2)
            continue;
        const auto v = sample_variance(x);
        nlohmann::json row{c.times[i], v.variance, v.ci.lo, v.ci.hi};
        if (riesz) {
            const double o = additive_variance_oracle(c.covariance().beta(), c.times[i]);
            row.push_back(o);
            row.push_back(v.variance / o);
        } else {
            row.push_back(nullptr);
            row.push_back(nullptr);
        }
        summary.rows.push_back(row);
    }
    if (riesz)
        rec.aggregates["K_beta"] = riesz_spectral_constant(c.covariance().beta());
    rec.tables.push_back(summary);
    return rec;
}

/// Structure-function exponent of the field ensemble, per moment order.
inline RunRecord run_increment_exponent(const ExperimentConfig& c)
{
    RunRecord rec = detail::start_record(c);
    auto cov = build_lattice_covariance(c.covariance(), c.grid());
    const MildSolver solver(cov, c.initial.build(), c.solver_config());
    std::vector<FieldSample> fields(c.replicas);
    auto res = run_replicas(c.replicas, c.seed, c.workers, [&](std::size_t r, std::uint64_t seed) {
        const NoisePath path = sample_noise(cov, c.num_modes, seed);
        fields[r] = solver.solve_mild(c.equation, &path, nullptr, nullptr);
        const auto& v = fields[r].values;
        return std::optional<nlohmann::json>(nlohmann::json{r, seed, v(v.rows() - 1, 0)});
    });
    rec.tables.push_back(detail::replica_table({"replica", "seed", "X_T_first_point"}, res));
    rec.excluded = res.excluded;
    std::vector<FieldSample> kept;
    for (const auto& [r, row] : res.rows)
        kept.push_back(std::move(fields[r]));
    const auto dir = c.direction == "space" ? IncrementDirection::space : IncrementDirection::time;
    Table summary{"summary", {"p", "exponent", "intercept", "r_squared"}, {}};
    Table scales{"scales", {"p", "scale", "moment"}, {}};
    for (double p : c.moments) {
        if (kept.size() < 2)
            break;
        const auto est = fit_increment_exponent(kept, dir, p, std::min<std::size_t>(100, kept.size()));
        summary.rows.push_back({p, est.exponent, est.intercept, est.r_squared});
        for (const auto& [s, v] : est.sample_points)
            scales.rows.push_back({p, s, v});
    }
    rec.tables.push_back(summary);
    rec.tables.push_back(scales);
    return rec;
}

/// L2(Omega; H_T) size of w^n, plain and on the localization event.
inline RunRecord run_wongzakai_growth(const ExperimentConfig& c)
{
    RunRecord rec = detail::start_record(c);
    auto cov = build_lattice_covariance(c.covariance(), c.grid());
    const double T = c.T;
    auto res = run_replicas(c.replicas, c.seed, c.workers, [&](std::size_t r, std::uint64_t seed) {
        const NoisePath path = sample_noise(cov, c.num_modes, seed);
        nlohmann::json row{r, seed};
        for (int n : c.n_levels) {
            const SmoothedNoise w = build_smoothed(path, n);
            const bool on_l = localization_indicator(path, n, T, c.alpha);
            double worst = 0; // largest one-interval norm, on L_n(T)
            if (on_l)
                for (int i = 0; i < w.intervals(); ++i)
                    worst = std::max(worst, ht_norm(w, {i * T / w.intervals(), (i + 1) * T / w.intervals()}));
            const double norm = ht_norm(w, {0, T});
            row.push_back(norm * norm);
            row.push_back(on_l ? 1 : 0);
            row.push_back(worst);
        }
        return std::optional<nlohmann::json>(row);
    });
    std::vector<std::string> cols{"replica", "seed"};
    for (int n : c.n_levels) {
        cols.push_back("sq_norm_n" + std::to_string(n));
        cols.push_back("on_L_n" + std::to_string(n));
        cols.push_back("max_interval_norm_n" + std::to_string(n));
    }
    rec.tables.push_back(detail::replica_table(cols, res));
    rec.excluded = res.excluded;

    Table summary{"summary",
                  {"n", "l2_norm", "growth_ratio", "localized_l2_norm", "localized_ratio", "max_interval_norm",
                   "interval_ratio", "p_localized"},
                  {}};
    for (std::size_t li = 0; li < c.n_levels.size(); ++li) {
        const int n = c.n_levels[li];
        double sq = 0, sq_loc = 0, worst = 0, on = 0;
        for (const auto& [r, row] : res.rows) {
            const double v = row.at(2 + 3 * li).get<double>();
            const bool l = row.at(3 + 3 * li).get<int>() == 1;
            sq += v;
            if (l) {
                sq_loc += v;
                on += 1;
            }
            worst = std::max(worst, row.at(4 + 3 * li).get<double>());
        }
        const double m = std::max<double>(1, res.rows.size());
        const double l2 = std::sqrt(sq / m), l2_loc = std::sqrt(sq_loc / m);
        const double env = std::sqrt(double(n)) * std::pow(2.0, 0.5 * n);
        const double env_loc = std::pow(double(n), 1.5) * std::pow(2.0, 0.5 * n);
        summary.rows.push_back({n, l2, l2 / env, l2_loc, l2_loc / env_loc, worst,
                                worst / std::pow(double(n), 1.5), on / m});
    }
    rec.tables.push_back(summary);
    return rec;
}

/// Monte Carlo P(L_n(T)) against the Gaussian product formula.
inline RunRecord run_localization_prob(const ExperimentConfig& c)
{
    RunRecord rec = detail::start_record(c);
    auto cov = build_lattice_covariance(c.covariance(), c.grid());
    auto res = run_replicas(c.replicas, c.seed, c.workers, [&](std::size_t r, std::uint64_t seed) {
        const NoisePath path = sample_noise(cov, c.num_modes, seed);
        nlohmann::json row{r, seed};
        for (int n : c.n_levels)
            row.push_back(localization_indicator(path, n, c.T, c.alpha) ? 1 : 0);
        return std::optional<nlohmann::json>(row);
    });
    std::vector<std::string> cols{"replica", "seed"};
    for (int n : c.n_levels)
        cols.push_back("on_L_n" + std::to_string(n));
    rec.tables.push_back(detail::replica_table(cols, res));
    rec.excluded = res.excluded;
    Table summary{"summary", {"n", "closed_form", "estimate", "wilson_lo", "wilson_hi", "closed_form_complement"}, {}};
    for (std::size_t li = 0; li < c.n_levels.size(); ++li) {
        std::size_t hits = 0;
        for (const auto& [r, row] : res.rows)
            hits += row.at(2 + li).get<int>();
        const std::size_t m = res.rows.size();
        const double exact = localization_probability(c.n_levels[li], c.T, c.alpha, c.T);
        if (m == 0) {
            summary.rows.push_back({c.n_levels[li], exact, nullptr, nullptr, nullptr, 1 - exact});
            continue;
        }
        const auto w = wilson_interval(hits, m);
        summary.rows.push_back({c.n_levels[li], exact, double(hits) / m, w.lo, w.hi, 1 - exact});
    }
    rec.tables.push_back(summary);
    return rec;
}

/// ||Phi^{w^n} - u|| per level on coupled replicas; optionally also
/// ||v_n - Phi^h|| for the shifted equation with a constant control.
inline RunRecord run_support_probe(const ExperimentConfig& c)
{
    RunRecord rec = detail::start_record(c);
    auto cov = build_lattice_covariance(c.covariance(), c.grid());
    const MildSolver solver(cov, c.initial.build(), c.solver_config());
    const Coefficient sigma = c.equation.A;
    const Coefficient drift = c.equation.b;
    const EquationSpec u_eq{sigma, {}, {}, drift, Variant::base, 0};
    const EquationSpec phi_w_eq{{}, sigma, {}, drift, Variant::full, 0};
    const bool shifted = c.control_value != 0.0;
    const EquationSpec shift_eq{sigma, {}, {}, drift, Variant::shifted, 0};
    const EquationSpec skel_eq{{}, {}, sigma, drift, Variant::skeleton, 0};
    const ControlH h = ControlH::constant(c.num_modes, c.num_steps, c.T, c.control_mode, c.control_value);
    std::optional<FieldSample> phi_h;
    if (shifted)
        phi_h = solver.solve_skeleton(skel_eq, h);

    auto res = run_replicas(c.replicas, c.seed, c.workers, [&](std::size_t r, std::uint64_t seed) {
        const NoisePath path = sample_noise(cov, c.num_modes, seed);
        const FieldSample u = solver.solve_mild(u_eq, &path, nullptr, nullptr);
        nlohmann::json row{r, seed};
        for (int n : c.n_levels) {
            const SmoothedNoise w = build_smoothed(path, n);
            const FieldSample phi = solver.solve_mild(phi_w_eq, &path, &w, nullptr);
            row.push_back(holder_distance(phi, u, c.rho, c.t0));
            if (shifted) {
                const FieldSample v = solver.solve_shifted(shift_eq, path, h, n);
                row.push_back(holder_distance(v, *phi_h, c.rho, c.t0));
            }
        }
        return std::optional<nlohmann::json>(row);
    });
    std::vector<std::string> cols{"replica", "seed"};
    for (int n : c.n_levels) {
        cols.push_back("dist_n" + std::to_string(n));
        if (shifted)
            cols.push_back("shifted_dist_n" + std::to_string(n));
    }
    rec.tables.push_back(detail::replica_table(cols, res));
    rec.excluded = res.excluded;

    const std::size_t stride = shifted ? 2 : 1;
    auto column = [&](std::size_t li, std::size_t off) {
        std::vector<double> v;
        for (const auto& [r, row] : res.rows)
            v.push_back(row.at(2 + stride * li + off).get<double>());
        return v;
    };
    Table summary{"summary", {"n", "median", "lambda", "exceedance", "wilson_lo", "wilson_hi"}, {}};
    if (shifted)
        summary.columns.push_back("shifted_median");
    if (!res.rows.empty()) {
        const double lambda = c.lambda > 0 ? c.lambda : median(column(0, 0));
        rec.aggregates["lambda"] = lambda;
        for (std::size_t li = 0; li < c.n_levels.size(); ++li) {
            const auto d = column(li, 0);
            nlohmann::json row{c.n_levels[li], median(d), lambda};
            if (lambda > 0) {
                const auto e = estimate_exceedance(d, lambda);
                row.push_back(e.probability);
                row.push_back(e.wilson.lo);
                row.push_back(e.wilson.hi);
            } else {
                row.insert(row.end(), {nullptr, nullptr, nullptr});
            }
            if (shifted)
                row.push_back(median(column(li, 1)));
            summary.rows.push_back(row);
        }
    }
    rec.tables.push_back(summary);
    return rec;
}

/// Hypothesis integrals, their fitted exponents and the admissible window.
inline RunRecord run_hypotheses(const ExperimentConfig& c)
{
    RunRecord rec = detail::start_record(c);
    rec.replicas = 0;
    const CovarianceSpec spec = continuum_kernel(c.covariance());
    const auto scales = default_fit_scales();
    Table t{"scales", {"quantity", "scale", "value"}, {}};
    Table fits{"summary", {"exponent", "estimate", "intercept", "r_squared"}, {}};
    auto record = [&](const std::string& name, const ExponentEstimate& e) {
        for (const auto& [s, v] : e.sample_points)
            t.rows.push_back({name, s, v});
        fits.rows.push_back({name, e.exponent, e.intercept, e.r_squared});
    };
    rec.aggregates["basic_integrability"] = basic_integrability(spec);
    const auto gamma = fit_h1_increment_exponent(spec, scales);
    const auto gamma_prime = fit_h1_second_difference_exponent(spec, scales);
    const auto nu = fit_small_ball_exponent(spec, scales);
    const auto [rho1, rho2] = fit_sphere_pair_exponents(spec, scales);
    record("gamma", gamma);
    record("gamma_prime", gamma_prime);
    record("nu", nu);
    record("rho1", rho1);
    record("rho2", rho2);
    const InitialData ic = c.initial.build();
    HolderExponents e{ic.gamma1, ic.gamma2, gamma.exponent, gamma_prime.exponent, nu.exponent, rho1.exponent,
                      rho2.exponent};
    try {
        const auto w = admissible_holder_window(e);
        rec.aggregates["kappa_max"] = w.kappa_max;
        rec.aggregates["rho_max"] = w.rho_max;
    } catch (const Error& err) {
        rec.aggregates["window_error"] = err.what();
    }
    rec.tables.push_back(fits);
    rec.tables.push_back(t);
    return rec;
}

/// A random Lipschitz coefficient with constant at most 1, drawn from seed.
inline Coefficient random_lipschitz(std::mt19937_64& gen)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Coefficient k;
    k.c0 = u(gen);
    k.c1 = 0.5 * u(gen);
    k.c2 = 0.5 * u(gen);
    k.omega = 1.0 + std::abs(u(gen));
    const double l = k.lipschitz();
    if (l > 1.0) {
        k.c1 /= l;
        k.c2 /= l;
    }
    return k;
}

/// Explicit against Picard on randomized equations sharing one noise path each.
inline RunRecord run_picard_check(const ExperimentConfig& c)
{
    RunRecord rec = detail::start_record(c);
    auto cov = build_lattice_covariance(c.covariance(), c.grid());
    const MildSolver solver(cov, c.initial.build(), c.solver_config());
    const int n = c.n_levels.front();
    auto res = run_replicas(c.replicas, c.seed, c.workers, [&](std::size_t r, std::uint64_t seed) {
        std::mt19937_64 gen(splitmix64(seed));
        EquationSpec eq{random_lipschitz(gen), random_lipschitz(gen), random_lipschitz(gen), random_lipschitz(gen),
                        Variant::full, 0};
        const NoisePath path = sample_noise(cov, c.num_modes, seed);
        const SmoothedNoise w = build_smoothed(path, n);
        const ControlH h = ControlH::constant(c.num_modes, c.num_steps, c.T, 0, std::uniform_real_distribution(-1.0, 1.0)(gen));
        const FieldSample x = solver.solve_mild(eq, &path, &w, &h);
        const PicardResult p = solver.picard_solve(eq, &path, &w, &h);
        const double diff = (x.values - p.field.values).cwiseAbs().maxCoeff();
        return std::optional<nlohmann::json>(nlohmann::json{r, seed, p.iterations, p.final_delta, diff,
                                                            eq.A.lipschitz(), eq.B.lipschitz(), eq.D.lipschitz(),
                                                            eq.b.lipschitz()});
    });
    rec.tables.push_back(detail::replica_table(
        {"replica", "seed", "iterations", "final_delta", "sup_difference", "lip_A", "lip_B", "lip_D", "lip_b"}, res));
    rec.excluded = res.excluded;
    double worst = 0;
    int iters = 0;
    for (const auto& [r, row] : res.rows) {
        worst = std::max(worst, row.at(4).get<double>());
        iters = std::max(iters, row.at(2).get<int>());
    }
    rec.aggregates["max_sup_difference"] = worst;
    rec.aggregates["max_iterations"] = iters;
    return rec;
}

/// Runs the configured experiment.
inline RunRecord run(const ExperimentConfig& c)
{
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    switch (c.experiment) {
    case Experiment::variance_oracle: rec = run_variance_oracle(c); break;
    case Experiment::increment_exponent: rec = run_increment_exponent(c); break;
    case Experiment::wongzakai_growth: rec = run_wongzakai_growth(c); break;
    case Experiment::localization_prob: rec = run_localization_prob(c); break;
    case Experiment::support_probe: rec = run_support_probe(c); break;
    case Experiment::hypotheses: rec = run_hypotheses(c); break;
    case Experiment::picard_check: rec = run_picard_check(c); break;
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

} // namespace swave
