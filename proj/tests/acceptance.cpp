// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all ten)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "swave/swave.hpp"

using namespace swave;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double cell(const Table& t, std::size_t row, std::size_t col) { return t.rows.at(row).at(col).get<double>(); }

// 1. Var X(t, 0) of the additive equation against the spectral oracle.
Outcome variance_oracle()
{
    const auto c = parse_config({{"experiment", "variance-oracle"},
                                 {"grid", {{"sites_per_axis", 9}, {"num_steps", 64}}},
                                 {"domain", {{"lo", 0.0}, {"hi", 0.0}, {"points_per_axis", 1}}},
                                 {"times", {0.5, 1.0}},
                                 {"replicas", 2000},
                                 {"seed", 20240601}});
    const auto r = run(c);
    const auto& s = r.table("summary");
    Outcome o{true, ""};
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const double ratio = cell(s, i, 5);
        o.pass = o.pass && std::abs(ratio - 1) <= 0.10;
        o.detail += fmt("t=%.2f var=%.4f oracle=%.4f ratio=%.3f; ", cell(s, i, 0), cell(s, i, 1), cell(s, i, 4), ratio);
    }
    o.pass = o.pass && s.rows.size() == 2;
    return o;
}

// 2. Spatial increment exponent of the additive field.
Outcome space_exponent()
{
    const auto c = parse_config({{"experiment", "increment-exponent"},
                                 {"grid", {{"sites_per_axis", 13}, {"spacing", 0.25}, {"num_steps", 64}}},
                                 {"domain", {{"lo", -0.5}, {"hi", 0.5}, {"points_per_axis", 5}}},
                                 {"moments", {2.0}},
                                 {"direction", "space"},
                                 {"replicas", 1000},
                                 {"seed", 20240602}});
    const auto r = run(c);
    const auto& s = r.table("summary");
    const double rho = cell(s, 0, 1);
    return {rho >= 0.4 && rho <= 0.6, fmt("rho_hat=%.4f r2=%.4f (window [0.4, 0.6])", rho, cell(s, 0, 3))};
}

// 3. Monte Carlo P(L_n(T)) against the Gaussian product formula.
Outcome localization()
{
    const auto c = parse_config({{"experiment", "localization-prob"},
                                 {"grid", {{"sites_per_axis", 2}, {"num_steps", 64}}},
                                 {"n_levels", {2, 3, 4}},
                                 {"num_modes", 4},
                                 {"alpha", 2.0},
                                 {"replicas", 5000},
                                 {"seed", 20240603}});
    const auto r = run(c);
    const auto& s = r.table("summary");
    Outcome o{true, ""};
    double prev_complement = 2;
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const double exact = cell(s, i, 1), lo = cell(s, i, 3), hi = cell(s, i, 4), comp = cell(s, i, 5);
        o.pass = o.pass && lo <= exact && exact <= hi && comp < prev_complement;
        prev_complement = comp;
        o.detail += fmt("n=%d P=%.4f MC=%.4f [%.4f,%.4f]; ", s.rows[i][0].get<int>(), exact, cell(s, i, 2), lo, hi);
    }
    return o;
}

// 4. Growth of ||w^n||_{L2(Omega; H_T)} and its localized envelope.
Outcome wongzakai_growth()
{
    const auto c = parse_config({{"experiment", "wongzakai-growth"},
                                 {"grid", {{"sites_per_axis", 2}, {"num_steps", 64}}},
                                 {"n_levels", {2, 3, 4, 5, 6}},
                                 {"num_modes", 6},
                                 {"replicas", 500},
                                 {"seed", 20240604}});
    const auto r = run(c);
    const auto& s = r.table("summary");
    double lo = 1e300, hi = 0, loc_first = 0, loc_max = 0, interval_max = 0;
    std::string d;
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const double g = cell(s, i, 2), l = cell(s, i, 4), iv = cell(s, i, 6);
        lo = std::min(lo, g);
        hi = std::max(hi, g);
        if (i == 0)
            loc_first = l;
        loc_max = std::max(loc_max, l);
        interval_max = std::max(interval_max, iv);
        d += fmt("n=%d ratio=%.3f loc=%.3f interval=%.3f; ", s.rows[i][0].get<int>(), g, l, iv);
    }
    // The localized norm stays under n^{3/2} 2^{n/2} times the constant fitted at n = 2.
    // On L_n every slope is below 2^n alpha sqrt(n) 2^{-n/2}, so one interval's norm is
    // at most alpha n <= alpha n^{3/2}.
    const bool pass = hi / lo < 2.0 && loc_max <= loc_first * (1 + 1e-12) && interval_max <= c.alpha;
    return {pass, d + fmt("max/min=%.3f", hi / lo)};
}

// 5. Hypothesis exponents of the Riesz kernel.
Outcome hypotheses()
{
    Outcome o{true, ""};
    for (double beta : {0.5, 1.0, 1.5}) {
        const auto c = parse_config({{"experiment", "hypotheses"}, {"kernel", {{"kind", "riesz"}, {"beta", beta}}}});
        const auto r = run(c);
        const auto& s = r.table("summary");
        std::map<std::string, double> est;
        for (const auto& row : s.rows)
            est[row[0].get<std::string>()] = row[1].get<double>();
        const double nu_expect = std::min(2 - beta, 1.0);
        const bool ok = std::abs(est["nu"] - nu_expect) <= 0.1 && est["gamma"] <= 1 && est["gamma_prime"] <= 2 &&
                        est["rho1"] <= 1 && est["rho2"] <= 2 && est["gamma"] > 0 && est["rho1"] > 0;
        o.pass = o.pass && ok;
        o.detail += fmt("beta=%.1f nu=%.3f gamma=%.3f gamma'=%.3f rho1=%.3f rho2=%.3f; ", beta, est["nu"],
                        est["gamma"], est["gamma_prime"], est["rho1"], est["rho2"]);
    }
    return o;
}

// 6. Medians of ||Phi^{w^n} - u|| decrease with n; exceedance does not grow.
Outcome support_probe()
{
    const auto c = parse_config({{"experiment", "support-probe"},
                                 {"equation", {{"A", {{"c0", 1.0}, {"c2", 0.5}, {"omega", 1.0}}}}},
                                 {"n_levels", {2, 3, 4, 5}},
                                 {"num_modes", 32},
                                 {"rho", 0.25},
                                 {"t0", 0.25},
                                 {"replicas", 200},
                                 {"seed", 20240606}});
    const auto r = run(c);
    const auto& s = r.table("summary");
    Outcome o{s.rows.size() == 4, ""};
    double prev_med = 1e300, prev_exc = 2;
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const double med = cell(s, i, 1), exc = cell(s, i, 3);
        o.pass = o.pass && med < prev_med && exc <= prev_exc;
        prev_med = med;
        prev_exc = exc;
        o.detail += fmt("n=%d median=%.4f exceed=%.3f; ", s.rows[i][0].get<int>(), med, exc);
    }
    o.detail += fmt("lambda=%.4f excluded=%d", r.aggregates["lambda"].get<double>(), r.excluded);
    return o;
}

// 7. Picard against the explicit recursion on random Lipschitz equations.
Outcome picard()
{
    const auto c = parse_config({{"experiment", "picard-check"},
                                 {"n_levels", {2}},
                                 {"num_modes", 4},
                                 {"replicas", 5},
                                 {"seed", 20240607}});
    const auto r = run(c);
    const double worst = r.aggregates["max_sup_difference"].get<double>();
    const int kept = int(r.table("replicas").rows.size());
    return {worst <= 1e-8 && kept == 5,
            fmt("max sup difference=%.3e over %d equations, max iterations=%d", worst, kept,
                r.aggregates["max_iterations"].get<int>())};
}

// 8. Kirchhoff formula, finite speed and the drift-only oracle.
Outcome deterministic_physics()
{
    const auto q2 = sphere_nodes(2, SphereFamily::product);
    double quad_err = 0;
    for (double t : {0.1, 0.5, 1.0})
        for (const Vec3& x : {Vec3(0, 0, 0), Vec3(0.3, -0.2, 0.7), Vec3(-1, 2, 0.5)})
            quad_err = std::max(quad_err,
                                std::abs(kirchhoff_ic(InitialData::quadratic(), t, x, q2) - (x.squaredNorm() + 3 * t * t)));
    const auto q = sphere_nodes(256);
    const auto bump = InitialData::bump(0.2);
    double outside = 0;
    for (double t : {0.3, 0.5, 0.7}) // | |x| - t | > r: the sphere misses the support
        outside = std::max(outside, std::abs(kirchhoff_ic(bump, t, Vec3(1.0, 0, 0), q)));
    const double inside = std::abs(kirchhoff_ic(bump, 1.0, Vec3(1.0, 0, 0), q));
    const auto grid = NoiseGrid::cube(1.0, 64, 9, 0.25);
    auto cov = build_lattice_covariance({RieszKernel{1.0}, 0.125, 1.0}, grid);
    SolverConfig sc;
    sc.eval_points = {Vec3::Zero()};
    const MildSolver solver(cov, InitialData::zero(), sc);
    const auto path = sample_noise(cov, 2, 1);
    const double cst = 0.7;
    const auto f = solver.solve_mild({{}, {}, {}, Coefficient::constant(cst), Variant::base, 0}, &path, nullptr, nullptr);
    double drift_err = 0;
    for (int k : {16, 32, 64}) {
        const double t = grid.time(k), expect = cst * t * t / 2;
        drift_err = std::max(drift_err, std::abs(f.values(k, 0) - expect) / expect);
    }
    const bool pass = quad_err < 1e-12 && outside == 0.0 && inside > 0.0 && drift_err <= 0.03;
    return {pass, fmt("quadratic err=%.2e, outside cone=%.1e, inside cone=%.3e, drift rel err=%.2e", quad_err, outside,
                      inside, drift_err)};
}

// 9. v_n against u driven by the Girsanov-shifted path.
Outcome girsanov()
{
    const auto grid = NoiseGrid::covering(1.0, 64, -0.5, 0.5, 9);
    auto cov = build_lattice_covariance({RieszKernel{1.0}, 0.5 * grid.spacing, 1.0}, grid);
    SolverConfig sc;
    sc.eval_points = parse_config({{"experiment", "support-probe"}}).eval_points();
    const MildSolver solver(cov, InitialData::zero(), sc);
    const Coefficient sigma = Coefficient::sine(1.0, 0.5);
    const ControlH h = ControlH::constant(16, 64, 1.0, 0, 1.0);
    double worst = 0;
    for (std::uint64_t r = 0; r < 5; ++r) {
        const auto path = sample_noise(cov, 16, replica_seed(20240609, r));
        for (int n : {2, 3, 4}) {
            const auto v = solver.solve_shifted({sigma, {}, {}, {}, Variant::shifted, 0}, path, h, n);
            const auto shifted = girsanov_shift(path, h, n);
            const auto u = solver.solve_mild({sigma, {}, {}, {}, Variant::base, 0}, &shifted, nullptr, nullptr);
            const double rel = (v.values - u.values).cwiseAbs().maxCoeff() / v.values.cwiseAbs().maxCoeff();
            worst = std::max(worst, rel);
        }
    }
    return {worst <= 0.05, fmt("max relative sup difference=%.3e over 5 paths x n in {2,3,4}", worst)};
}

// 10. Determinism, causality, norm axioms, orthonormality, sphere moments.
Outcome invariants()
{
    std::vector<std::string> broken;
    auto check = [&](bool ok, const char* what) {
        if (!ok)
            broken.push_back(what);
    };
    const auto grid = NoiseGrid::cube(1.0, 16, 7, 0.25);
    auto cov = build_lattice_covariance({RieszKernel{1.0}, 0.125, 1.0}, grid);
    const int S = cov->num_sites();
    const auto& V = cov->eigenvectors;
    check((V.transpose() * V - Eigen::MatrixXd::Identity(S, S)).cwiseAbs().maxCoeff() < 1e-10, "orthonormality");

    AccessLog log;
    SolverConfig sc;
    sc.access_log = &log;
    const MildSolver logged(cov, InitialData::constant(0.2), sc);
    const MildSolver plain(cov, InitialData::constant(0.2), {});
    const auto path = sample_noise(cov, 4, 31);
    const auto w = build_smoothed(path, 2);
    const EquationSpec eq{Coefficient::sine(1, 0.5), Coefficient::linear(0.1, 0.2), {}, Coefficient::sine(0, 0.3),
                          Variant::full, 0};
    const auto a = logged.solve_mild(eq, &path, &w, nullptr);
    bool causal = !log.reads.empty();
    for (const auto& [k, m] : log.reads)
        causal = causal && m < k;
    check(causal, "causality");
    const auto b = plain.solve_mild(eq, &path, &w, nullptr);
    const auto again = sample_noise(cov, 4, 31);
    check(a.values == b.values && again.increments == path.increments, "determinism");

    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd(0, 1);
    auto random_field = [&] {
        FieldSample f = a;
        for (int i = 0; i < f.values.size(); ++i)
            f.values.data()[i] = nd(gen);
        f.eval_points.resize(4);
        f.values = f.values.leftCols(4).eval();
        return f;
    };
    bool axioms = true;
    for (int i = 0; i < 20; ++i) {
        const auto f = random_field(), g = random_field(), k = random_field();
        const double fg = holder_distance(f, g, 0.25, 0.0);
        axioms = axioms && fg <= holder_distance(f, k, 0.25, 0.0) + holder_distance(k, g, 0.25, 0.0) + 1e-12 &&
                 fg == holder_distance(g, f, 0.25, 0.0) && holder_distance(f, f, 0.25, 0.0) == 0.0 && fg > 0;
    }
    check(axioms, "norm axioms");

    const auto q = sphere_nodes(2, SphereFamily::product);
    double err = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double m = 0, m1 = 0;
            for (std::size_t n = 0; n < q.size(); ++n) {
                m += q.weights[n] * q.nodes[n][i] * q.nodes[n][j];
                m1 += q.weights[n] * q.nodes[n][i];
            }
            err = std::max({err, std::abs(m - (i == j ? 4 * std::numbers::pi / 3 : 0.0)), std::abs(m1)});
        }
    check(err < 1e-13, "sphere moments");

    std::string d = broken.empty() ? "all invariants hold" : "broken:";
    for (const auto& s : broken)
        d += " " + s;
    return {broken.empty(), d};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"additive variance oracle", variance_oracle},
        {"spatial Hoelder exponent", space_exponent},
        {"localization probability", localization},
        {"Wong-Zakai growth bound", wongzakai_growth},
        {"hypothesis exponents", hypotheses},
        {"support-probe trend", support_probe},
        {"Picard vs explicit", picard},
        {"deterministic physics", deterministic_physics},
        {"Girsanov consistency", girsanov},
        {"invariant suites", invariants},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!only.empty() && !only.count(id))
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
