#include <cmath>

#include <gtest/gtest.h>

#include "oracle_values.hpp"
#include "swave/noise.hpp"

using namespace swave;
namespace {

NoiseGrid small_grid(int steps = 64, int n = 3, double spacing = 0.5)
{
    return NoiseGrid::cube(1.0, steps, n, spacing);
}

CovarianceSpec riesz(double beta, double reg) { return {RieszKernel{beta}, reg, 1.0}; }

// A path whose increments are all zero, for the deterministic checks.
NoisePath zero_path(const NoiseGrid& g, int modes)
{
    NoisePath p = sample_noise(riesz(1.0, 0.25), g, modes, 1);
    p.increments.setZero();
    p.mode_increments.setZero();
    p.subgrid.setZero();
    return p;
}

TEST(SampleNoise, BitwiseReproducible)
{
    const auto g = small_grid();
    const auto a = sample_noise(riesz(1.0, 0.25), g, 8, 42);
    const auto b = sample_noise(riesz(1.0, 0.25), g, 8, 42);
    const auto c = sample_noise(riesz(1.0, 0.25), g, 8, 43);
    EXPECT_TRUE(a.increments == b.increments);
    EXPECT_TRUE(a.mode_increments == b.mode_increments);
    EXPECT_TRUE(a.subgrid == b.subgrid);
    EXPECT_FALSE(a.increments == c.increments);
}

TEST(SampleNoise, SingleSiteVariance)
{
    NoiseGrid g = NoiseGrid::cube(1.0, 10, 1, 1.0); // dt = 0.1
    auto cov = build_lattice_covariance(riesz(1.0, 0.01), g);
    double acc = 0;
    int count = 0;
    for (int r = 0; r < 1000; ++r) {
        const auto p = sample_noise(cov, 1, 1000 + r);
        acc += p.increments.squaredNorm();
        count += int(p.increments.size());
    }
    EXPECT_NEAR(acc / count, 10.0, 0.5); // dt f_reg(0) = 0.1 * 100
}

TEST(SampleNoise, TwoSiteCovariance)
{
    NoiseGrid g = NoiseGrid::cube(1.0, 10, 1, 1.0);
    g.dims = {2, 1, 1};
    auto cov = build_lattice_covariance(riesz(1.0, 0.5), g);
    double acc = 0;
    int count = 0;
    for (int r = 0; r < 4000; ++r) {
        const auto p = sample_noise(cov, 1, 77 + r);
        acc += p.increments.row(0).dot(p.increments.row(1));
        count += 10;
    }
    EXPECT_NEAR(acc / count, 0.1, 0.005); // dt f(1)
}

TEST(SampleNoise, VanishingTimeStep)
{
    NoiseGrid g = small_grid(4);
    g.T = 4e-30; // dt = 1e-30
    const auto p = sample_noise(riesz(1.0, 0.25), g, 4, 5);
    EXPECT_LT(p.increments.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SampleNoise, EigenbasisOrthonormalAndComplete)
{
    const auto g = small_grid(8);
    auto cov = build_lattice_covariance(riesz(1.0, 0.25), g);
    const int n = cov->num_sites();
    const auto& V = cov->eigenvectors;
    EXPECT_LT((V.transpose() * V - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    for (int j = 1; j < n; ++j)
        EXPECT_GE(cov->eigenvalues[j - 1], cov->eigenvalues[j]);

    const auto full = sample_noise(cov, n, 9);
    EXPECT_LT((reconstruct_increments(full) - full.increments).cwiseAbs().maxCoeff(), 1e-10);

    const auto part = sample_noise(cov, 5, 9);
    const Eigen::MatrixXd proj = cov->eigenvalues.head(5).cwiseSqrt().cwiseInverse().asDiagonal() *
                                 (part.eigenbasis().transpose() * part.increments);
    EXPECT_LT((proj - part.mode_increments).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SampleNoise, RankDeficientCovariance)
{
    // f = 1 everywhere: Sigma has rank one.
    CovarianceSpec flat{TabulatedKernel{{0.01, 100.0}, {1.0, 1.0}}, 0.01, 1.0};
    const auto g = small_grid(4, 2);
    auto cov = build_lattice_covariance(flat, g);
    EXPECT_NO_THROW(sample_noise(cov, 1, 1));
    try {
        sample_noise(cov, 2, 1);
        FAIL() << "zero eigenmode accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_covariance);
    }
}

TEST(SmoothedNoiseTest, ZeroIncrementsGiveZeroSlopes)
{
    const auto p = zero_path(small_grid(), 4);
    EXPECT_EQ(build_smoothed(p, 3).slopes.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SmoothedNoiseTest, SlopeFormula)
{
    auto p = zero_path(small_grid(), 4);
    p.mode_increments(0, 0) = 0.5; // W_1(Delta_0) at n = 1 sums steps 0..31
    const auto w1 = build_smoothed(p, 1);
    EXPECT_DOUBLE_EQ(w1.slopes(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(w1.slopes(0, 1), 1.0);

    const auto q = sample_noise(riesz(1.0, 0.25), small_grid(), 6, 3);
    for (int n : {2, 3, 5}) {
        const auto w = build_smoothed(q, n);
        const int parts = 1 << n, ratio = 64 / parts;
        for (int j = 0; j < n; ++j) {
            EXPECT_EQ(w.slopes(j, 0), 0.0);
            for (int i = 0; i + 1 < parts; ++i)
                EXPECT_NEAR(w.slopes(j, i + 1), parts * q.mode_increments.row(j).segment(i * ratio, ratio).sum(),
                            1e-12);
        }
        EXPECT_EQ(w.value(n, 0.9), 0.0); // modes beyond n are absent
    }
}

TEST(SmoothedNoiseTest, ClosedLeftIntervals)
{
    auto p = sample_noise(riesz(1.0, 0.25), small_grid(), 4, 3);
    const auto w = build_smoothed(p, 2);
    EXPECT_EQ(w.interval_of(0.25), 1);
    EXPECT_EQ(w.interval_of(0.2499), 0);
    EXPECT_EQ(w.value(0, 0.25), w.slopes(0, 1));
}

TEST(SmoothedNoiseTest, AlignmentAndLevelErrors)
{
    const auto p = sample_noise(riesz(1.0, 0.25), small_grid(48), 8, 3);
    try {
        build_smoothed(p, 5);
        FAIL() << "misaligned level accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::alignment);
    }
    EXPECT_NO_THROW(build_smoothed(p, 4));
    const auto q = sample_noise(riesz(1.0, 0.25), small_grid(), 3, 3);
    EXPECT_THROW(build_smoothed(q, 4), Error);
}

TEST(SmoothedNoiseTest, DependsOnlyOnModeIncrements)
{
    auto p = sample_noise(riesz(1.0, 0.25), small_grid(), 4, 11);
    const auto before = build_smoothed(p, 3).slopes;
    p.increments.setRandom();
    p.subgrid.setRandom();
    EXPECT_TRUE(build_smoothed(p, 3).slopes == before);
}

TEST(SmoothedNoiseTest, GrowthMatchesSqrtN2N)
{
    auto cov = build_lattice_covariance(riesz(1.0, 0.25), small_grid(64, 2));
    std::vector<double> ratios;
    for (int n = 2; n <= 6; ++n) {
        double acc = 0;
        for (int r = 0; r < 300; ++r) {
            const auto w = build_smoothed(sample_noise(cov, 6, 500 + r), n);
            acc += std::pow(ht_norm(w, {0, 1}), 2);
        }
        ratios.push_back(std::sqrt(acc / 300) / (std::sqrt(n) * std::pow(2.0, 0.5 * n)));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    EXPECT_LT(*hi / *lo, 2.0);
}

TEST(HtNorm, ZeroAndConstantControls)
{
    EXPECT_EQ(ht_norm(ControlH::zero(3, 64, 1.0), {0, 1}), 0.0);
    const auto h = ControlH::constant(3, 64, 2.0, 1, 1.5);
    EXPECT_NEAR(ht_norm(h, {0, 2}), 1.5 * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(h.squared_norm(), std::pow(ht_norm(h, {0, 2}), 2), 1e-12);
    EXPECT_NEAR(ht_norm(h, {0.5, 1.0}), 1.5 * std::sqrt(0.5), 1e-12);
}

TEST(Localization, IndicatorCases)
{
    auto p = zero_path(small_grid(), 4);
    EXPECT_TRUE(localization_indicator(p, 3, 1.0, 2.0));
    const double bound = 2.0 * std::sqrt(3.0) * std::pow(2.0, -1.5);
    p.mode_increments(1, 10) = 10 * bound;
    EXPECT_FALSE(localization_indicator(p, 3, 1.0, 2.0));
    EXPECT_THROW(localization_indicator(p, 3, 1.0, 1.0), Error);
    // The offending increment lies in Delta_1 at n = 3, outside L_3(t) for t < 2/8.
    EXPECT_TRUE(localization_indicator(p, 3, 0.2, 2.0));
}

TEST(Localization, IntervalCount)
{
    EXPECT_EQ(localization_interval_count(3, 1.0, 1.0), 8);
    EXPECT_EQ(localization_interval_count(3, 0.0, 1.0), 1);
    EXPECT_EQ(localization_interval_count(3, 0.3, 1.0), 2);
}

TEST(Localization, ClosedFormMatchesFrozenValues)
{
    EXPECT_NEAR(std::erf(2.0 * std::sqrt(2.0 / 2)), oracle::loc_p_n2, 1e-15);
    EXPECT_NEAR(localization_probability(2, 1.0, 2.0), oracle::loc_P_n2, 1e-13);
    EXPECT_NEAR(localization_probability(3, 1.0, 2.0), oracle::loc_P_n3, 1e-13);
    EXPECT_NEAR(localization_probability(4, 1.0, 2.0), oracle::loc_P_n4, 1e-13);
}

TEST(Localization, ComplementDecreasesToZero)
{
    double prev = 1.0;
    for (int n = 1; n <= 12; ++n) {
        const double c = 1 - localization_probability(n, 1.0, 2.0);
        EXPECT_LE(c, prev);
        prev = c;
    }
    EXPECT_LT(prev, 1e-6);
}

TEST(Localization, LocalizedNormOnlyOnEvent)
{
    auto p = zero_path(small_grid(), 4);
    p.mode_increments(0, 3) = 100.0;
    const auto w = build_smoothed(p, 3);
    EXPECT_FALSE(ht_norm(w, {0, 1}, Localization{2.0, &p}).has_value());
    p.mode_increments(0, 3) = 0.01;
    const auto w2 = build_smoothed(p, 3);
    const auto v = ht_norm(w2, {0, 1}, Localization{2.0, &p});
    ASSERT_TRUE(v.has_value());
    EXPECT_DOUBLE_EQ(*v, ht_norm(w2, {0, 1}));
}

TEST(Girsanov, ControlEqualToSmoothingIsIdentity)
{
    const auto p = sample_noise(riesz(1.0, 0.25), small_grid(), 6, 21);
    const auto w = build_smoothed(p, 4);
    const auto h = ControlH::from_smoothed(w, 64, 6);
    const auto s = girsanov_shift(p, h, 4);
    EXPECT_LT((s.mode_increments - p.mode_increments).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s.increments - p.increments).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Girsanov, ZeroControlSubtractsPreviousInterval)
{
    const int n = 3, modes = 3;
    const auto p = sample_noise(riesz(1.0, 0.25), small_grid(), modes, 22);
    const auto s = girsanov_shift(p, ControlH::zero(modes, 64, 1.0), n);
    const int ratio = 64 >> n;
    auto W = [&](const NoisePath& q, int j, int i) { return q.mode_increments.row(j).segment(i * ratio, ratio).sum(); };
    for (int j = 0; j < modes; ++j)
        for (int i = 0; i + 1 < (1 << n); ++i)
            EXPECT_NEAR(W(s, j, i + 1), W(p, j, i + 1) - W(p, j, i), 1e-12);
}

TEST(Girsanov, RoundTrip)
{
    const int n = 3, modes = 5;
    const auto p = sample_noise(riesz(1.0, 0.25), small_grid(), modes, 23);
    ControlH h = ControlH::zero(modes, 64, 1.0);
    h.coefficients.setRandom();
    const auto p1 = girsanov_shift(p, h, n);
    ControlH back = h;
    back.coefficients = ControlH::from_smoothed(build_smoothed(p1, n), 64, modes).coefficients +
                        ControlH::from_smoothed(build_smoothed(p, n), 64, modes).coefficients - h.coefficients;
    const auto p2 = girsanov_shift(p1, back, n);
    EXPECT_LT((p2.mode_increments - p.mode_increments).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(p2.subgrid == p.subgrid);
}

TEST(NoiseGridTest, CoveringAndValidation)
{
    const auto g = NoiseGrid::covering(1.0, 64, -0.5, 0.5, 9);
    EXPECT_DOUBLE_EQ(g.spacing, 0.375);
    EXPECT_TRUE(g.covers_dependence_domain(Vec3::Constant(-0.5), Vec3::Constant(0.5)));
    EXPECT_FALSE(NoiseGrid::cube(1.0, 64, 9, 0.25).covers_dependence_domain(Vec3::Constant(-0.5),
                                                                            Vec3::Constant(0.5)));
    NoiseGrid bad = g;
    bad.num_steps = 0;
    EXPECT_THROW(bad.validate(), Error);
}

} // namespace
