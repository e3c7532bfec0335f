#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "swave/holder.hpp"

using namespace swave;
namespace {

// Field on times {0, 1/(nt-1), ..., 1} x the points of a 1D segment along x.
FieldSample make_field(int nt, int nx, double xlen, const std::function<double(double, const Vec3&)>& g)
{
    FieldSample f;
    for (int k = 0; k < nt; ++k)
        f.times.push_back(nt == 1 ? 0.0 : double(k) / (nt - 1));
    for (int a = 0; a < nx; ++a)
        f.eval_points.emplace_back(nx == 1 ? 0.0 : xlen * a / (nx - 1), 0.0, 0.0);
    f.values.resize(nt, nx);
    for (int k = 0; k < nt; ++k)
        for (int a = 0; a < nx; ++a)
            f.values(k, a) = g(f.times[k], f.eval_points[a]);
    return f;
}

FieldSample random_field(std::mt19937_64& gen, int nt = 6, int nx = 5)
{
    std::normal_distribution<double> n(0, 1);
    return make_field(nt, nx, 1.0, [&](double, const Vec3&) { return n(gen); });
}

TEST(HolderNorm, ConstantField)
{
    const auto f = make_field(5, 4, 1.0, [](double, const Vec3&) { return -3.0; });
    const auto r = holder_norm(f, 0.5, 0.0);
    EXPECT_EQ(r.sup_term, 3.0);
    EXPECT_EQ(r.seminorm_term, 0.0);
    EXPECT_EQ(r.norm, 3.0);
}

TEST(HolderNorm, LinearInTime)
{
    const auto f = make_field(65, 1, 0.0, [](double t, const Vec3&) { return t; });
    for (double rho : {0.1, 0.5, 0.9}) {
        const auto r = holder_norm(f, rho, 0.0);
        EXPECT_DOUBLE_EQ(r.sup_term, 1.0);
        EXPECT_NEAR(r.seminorm_term, 1.0, 1e-12);
        EXPECT_NEAR(r.norm, 2.0, 1e-12);
    }
}

TEST(HolderNorm, PowerFieldSeminorm)
{
    // g = c d^rho from a corner: the seminorm is attained from the corner.
    const double c = 2.5, rho = 0.4;
    const auto f = make_field(6, 6, 1.0, [&](double t, const Vec3& x) { return c * std::pow(t + x.x(), rho); });
    const auto r = holder_norm(f, rho, 0.0);
    EXPECT_NEAR(r.seminorm_term, c, 1e-12);
    EXPECT_NEAR(r.sup_term, c * std::pow(2.0, rho), 1e-12);
    EXPECT_FALSE(r.subsampled);
    EXPECT_EQ(r.pairs_examined, 36u * 35u / 2u);
}

TEST(HolderNorm, NonUniformTimesMatchUniformPath)
{
    std::mt19937_64 gen(3);
    auto f = random_field(gen);
    const double a = holder_norm(f, 0.3, 0.0).norm;
    f.times[2] += 1e-3; // forces the generic enumeration
    const double b = holder_norm(f, 0.3, 0.0).norm;
    EXPECT_NEAR(a, b, 0.05 * a);
}

TEST(HolderDistance, Axioms)
{
    std::mt19937_64 gen(11);
    for (int i = 0; i < 100; ++i) {
        const auto f = random_field(gen), g = random_field(gen), h = random_field(gen);
        const double fg = holder_distance(f, g, 0.5, 0.0);
        EXPECT_LE(fg, holder_distance(f, h, 0.5, 0.0) + holder_distance(h, g, 0.5, 0.0) + 1e-12);
        EXPECT_DOUBLE_EQ(fg, holder_distance(g, f, 0.5, 0.0));
        EXPECT_EQ(holder_distance(f, f, 0.5, 0.0), 0.0);
        FieldSample scaled = f;
        scaled.values *= -3.0;
        EXPECT_NEAR(holder_norm(scaled, 0.5, 0.0).norm, 3.0 * holder_norm(f, 0.5, 0.0).norm, 1e-12);
    }
}

TEST(HolderDistance, GridMismatch)
{
    std::mt19937_64 gen(1);
    const auto f = random_field(gen, 6, 5), g = random_field(gen, 6, 4);
    EXPECT_THROW(holder_distance(f, g, 0.5, 0.0), Error);
}

TEST(HolderNorm, MonotoneInWindowAndExponent)
{
    std::mt19937_64 gen(5);
    const auto f = random_field(gen, 9, 5);
    double prev = holder_norm(f, 0.5, 0.0).norm;
    for (double t0 : {0.25, 0.5, 0.75}) {
        const double cur = holder_norm(f, 0.5, t0).norm;
        EXPECT_LE(cur, prev + 1e-12);
        prev = cur;
    }
    // Every distance is at most 1 here, so each ratio grows with rho.
    const auto g = make_field(5, 5, 0.5, [&](double t, const Vec3& x) { return std::sin(7 * t) * std::cos(5 * x.x()); });
    prev = 0;
    for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double cur = holder_norm(g, rho, 0.5).norm;
        EXPECT_GE(cur, prev - 1e-12);
        prev = cur;
    }
}

TEST(HolderNorm, Errors)
{
    const auto one = make_field(1, 1, 0.0, [](double, const Vec3&) { return 1.0; });
    try {
        holder_norm(one, 0.5, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_grid);
    }
    const auto f = make_field(3, 3, 1.0, [](double, const Vec3&) { return 0.0; });
    EXPECT_THROW(holder_norm(f, 0.0, 0.0), Error);
    EXPECT_THROW(holder_norm(f, 1.0, 0.0), Error);
    EXPECT_THROW(holder_norm(f, 0.5, 2.0), Error);
}

TEST(HolderNorm, LargeGridsAreSubsampled)
{
    const auto f = make_field(200, 60, 1.0, [](double t, const Vec3& x) { return std::sqrt(t + x.x()); });
    const auto r = holder_norm(f, 0.5, 0.0);
    EXPECT_TRUE(r.subsampled);
    EXPECT_GT(r.pairs_examined, 0u);
    EXPECT_LE(r.seminorm_term, 1.0 + 1e-12);
    EXPECT_GT(r.seminorm_term, 0.5);
}

TEST(Modulus, ZeroAndMonotone)
{
    const auto zero = make_field(4, 4, 1.0, [](double, const Vec3&) { return 0.0; });
    for (const auto& [d, o] : modulus_of_continuity(zero, 0.25, {0.1, 0.5, 1.0, 3.0}, 0.0))
        EXPECT_EQ(o, 0.0);
    std::mt19937_64 gen(8);
    const auto f = random_field(gen, 8, 6);
    const auto curve = modulus_of_continuity(f, 0.25, {0.05, 0.2, 0.4, 0.8, 1.6, 3.0}, 0.0);
    for (std::size_t i = 1; i < curve.size(); ++i)
        EXPECT_GE(curve[i].second, curve[i - 1].second);
    EXPECT_THROW(modulus_of_continuity(f, 0.25, {0.5, 0.2}, 0.0), Error);
}

TEST(Modulus, PowerLaw)
{
    // g(t) = c t^rho: the sup over d < delta is attained from t = 0 at the
    // largest grid time below delta.
    const double c = 1.5, rho = 0.8, rp = 0.3;
    const auto f = make_field(401, 1, 0.0, [&](double t, const Vec3&) { return c * std::pow(t, rho); });
    const auto curve = modulus_of_continuity(f, rp, {0.01, 0.04, 0.16, 0.64}, 0.0);
    for (const auto& [d, o] : curve)
        EXPECT_NEAR(o, c * std::pow(d - 1.0 / 400, rho - rp), 1e-12) << d;
}

TEST(HolderReport, JsonFields)
{
    std::mt19937_64 gen(2);
    const auto f = random_field(gen);
    const auto r = holder_report(f, 0.5, 0.0, {0.1, 1.0});
    const auto j = to_json(r);
    for (const char* k : {"rho", "sup_term", "seminorm_term", "norm", "argmax_pair", "modulus_curve", "subsampled",
                          "pairs_examined"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["modulus_curve"].size(), 2u);
    EXPECT_DOUBLE_EQ(j["norm"].get<double>(), r.norm);
    const auto& p = r.argmax_pair;
    const double d = std::abs(p.first.t - p.second.t) + (p.first.x - p.second.x).norm();
    EXPECT_GT(d, 0.0);
}

FieldSample cube_field(int nt, int n, double h)
{
    FieldSample f;
    for (int k = 0; k < nt; ++k)
        f.times.push_back(double(k) / (nt - 1));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
                f.eval_points.emplace_back(h * i, h * j, h * l);
    f.values = Eigen::MatrixXd::Zero(nt, n * n * n);
    return f;
}

TEST(IncrementExponent, ConstantFieldIsFlat)
{
    std::vector<FieldSample> ens(100, cube_field(3, 5, 0.1));
    for (auto& f : ens)
        f.values.setConstant(4.0);
    const auto e = fit_increment_exponent(ens, IncrementDirection::space, 2.0);
    EXPECT_NEAR(e.exponent, 0.0, 1e-12);
}

TEST(IncrementExponent, LinearRandomField)
{
    std::mt19937_64 gen(21);
    std::normal_distribution<double> n(0, 1);
    std::vector<FieldSample> ens;
    for (int r = 0; r < 100; ++r) {
        auto f = cube_field(3, 5, 0.1);
        const Vec3 g(n(gen), n(gen), n(gen));
        for (int k = 0; k < 3; ++k)
            for (std::size_t a = 0; a < f.eval_points.size(); ++a)
                f.values(k, a) = g.dot(f.eval_points[a]);
        ens.push_back(std::move(f));
    }
    for (double p : {1.0, 2.0, 4.0}) {
        const auto e = fit_increment_exponent(ens, IncrementDirection::space, p);
        EXPECT_NEAR(e.exponent, 1.0, 1e-9) << p;
        EXPECT_NEAR(e.r_squared, 1.0, 1e-9);
    }
}

TEST(IncrementExponent, TimeDirection)
{
    std::mt19937_64 gen(4);
    std::normal_distribution<double> n(0, 1);
    std::vector<FieldSample> ens;
    for (int r = 0; r < 100; ++r) {
        auto f = cube_field(17, 2, 0.1);
        const double a = n(gen);
        for (int k = 0; k < 17; ++k)
            f.values.row(k).setConstant(a * std::sqrt(f.times[k]) + 2.0 * a * f.times[k]);
        ens.push_back(std::move(f));
    }
    const auto e = fit_increment_exponent(ens, IncrementDirection::time, 2.0);
    EXPECT_GT(e.exponent, 0.5);
    EXPECT_LT(e.exponent, 1.0);
}

TEST(IncrementExponent, Errors)
{
    std::vector<FieldSample> few(10, cube_field(3, 5, 0.1));
    EXPECT_THROW(fit_increment_exponent(few, IncrementDirection::space, 2.0), Error);
    std::vector<FieldSample> coarse(100, cube_field(3, 3, 0.1));
    try {
        fit_increment_exponent(coarse, IncrementDirection::space, 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::insufficient_scales);
    }
}

} // namespace
