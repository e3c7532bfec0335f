#pragma once

// Hoelder norms, moduli of continuity and increment-exponent fits for
// fields sampled on a space-time grid. Distances use the additive metric
// |t - s| + |x - y| with the Euclidean norm on the spatial factor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "swave/error.hpp"
#include "swave/fit.hpp"
#include "swave/geometry.hpp"
#include "swave/solver.hpp"

namespace swave {

struct SpaceTimePoint {
    double t = 0.0;
    Vec3 x = Vec3::Zero();
};

struct HolderReport {
    double rho = 0.5;
    double sup_term = 0.0;
    double seminorm_term = 0.0;
    double norm = 0.0;
    std::pair<SpaceTimePoint, SpaceTimePoint> argmax_pair;
    std::vector<std::pair<double, double>> modulus_curve; ///< (delta, O_g(delta))
    bool subsampled = false;
    std::size_t pairs_examined = 0;
};

/// Pair enumeration is exhaustive up to this many grid points.
inline constexpr std::size_t holder_exhaustive_limit = 10000;
inline constexpr int holder_distance_bins = 32;
inline constexpr std::size_t holder_pairs_per_bin = 20000;

namespace detail {

// Times with t >= t0 (first index) and the flat point list of the window.
struct HolderWindowGrid {
    int first = 0;
    int num_times = 0;
    int num_points = 0;
    std::size_t size() const { return std::size_t(num_times) * num_points; }
};

inline HolderWindowGrid holder_window(const FieldSample& f, double t0)
{
    require(!f.times.empty() && t0 <= f.times.back() + 1e-12 && t0 >= f.times.front() - 1e-12,
            ErrorCode::parameter, "t0 outside the field's time range");
    HolderWindowGrid w;
    while (w.first < int(f.times.size()) && f.times[w.first] < t0 - 1e-12)
        ++w.first;
    w.num_times = int(f.times.size()) - w.first;
    w.num_points = int(f.eval_points.size());
    if (w.size() < 2)
        throw Error(ErrorCode::degenerate_grid, "need at least two grid points for a Hoelder norm");
    return w;
}

// Visit every pair of distinct window points with (distance, |difference|,
// time indices, point indices). Uses a (time-lag x point-pair) distance
// table so no square roots are taken in the inner loop.
template <class Visit>
void for_each_pair(const FieldSample& f, const HolderWindowGrid& w, Visit&& visit)
{
    const int P = w.num_points;
    std::vector<double> dx(std::size_t(P) * P);
    for (int a = 0; a < P; ++a)
        for (int b = 0; b < P; ++b)
            dx[std::size_t(a) * P + b] = (f.eval_points[a] - f.eval_points[b]).norm();
    for (int i = 0; i < w.num_times; ++i) {
        const int ki = w.first + i;
        for (int j = i; j < w.num_times; ++j) {
            const int kj = w.first + j;
            const double dt = std::abs(f.times[kj] - f.times[ki]);
            for (int a = 0; a < P; ++a) {
                const double ga = f.values(ki, a);
                for (int b = (i == j ? a + 1 : 0); b < P; ++b) {
                    const double d = dt + dx[std::size_t(a) * P + b];
                    visit(d, std::abs(ga - f.values(kj, b)), ki, a, kj, b);
                }
            }
        }
    }
}

// Deterministic pseudo-random pairs, capped per logarithmic distance bin.
template <class Visit>
std::size_t for_sampled_pairs(const FieldSample& f, const HolderWindowGrid& w, Visit&& visit)
{
    const std::size_t n = w.size();
    double dmax = 0, dmin = std::numeric_limits<double>::infinity();
    const double tspan = f.times.back() - f.times[w.first];
    double xspan = 0;
    for (const auto& p : f.eval_points)
        for (const auto& q : f.eval_points)
            xspan = std::max(xspan, (p - q).norm());
    dmax = tspan + xspan;
    dmin = f.times.size() > 1 ? f.times[1] - f.times[0] : dmax;
    for (std::size_t a = 0; a + 1 < f.eval_points.size(); ++a)
        dmin = std::min(dmin, (f.eval_points[a] - f.eval_points[a + 1]).norm());
    dmin = std::max(dmin * 0.5, 1e-12);
    const double lmin = std::log(dmin), lspan = std::log(dmax * 1.0001) - lmin;
    std::vector<std::size_t> count(holder_distance_bins, 0);
    std::mt19937_64 gen(0x5eedULL);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t visited = 0, full = 0;
    const std::size_t budget = 8 * holder_distance_bins * holder_pairs_per_bin;
    for (std::size_t it = 0; it < budget && full < std::size_t(holder_distance_bins); ++it) {
        const std::size_t u = pick(gen), v = pick(gen);
        if (u == v)
            continue;
        const int ki = w.first + int(u / w.num_points), a = int(u % w.num_points);
        const int kj = w.first + int(v / w.num_points), b = int(v % w.num_points);
        const double d = std::abs(f.times[kj] - f.times[ki]) + (f.eval_points[a] - f.eval_points[b]).norm();
        const int bin = std::clamp(int((std::log(d) - lmin) / lspan * holder_distance_bins), 0,
                                   holder_distance_bins - 1);
        if (count[bin] >= holder_pairs_per_bin)
            continue;
        if (++count[bin] == holder_pairs_per_bin)
            ++full;
        ++visited;
        visit(d, std::abs(f.values(ki, a) - f.values(kj, b)), ki, a, kj, b);
    }
    return visited;
}

inline bool uniform_times(const FieldSample& f, const HolderWindowGrid& w)
{
    if (w.num_times < 3)
        return true;
    const double step = f.times[w.first + 1] - f.times[w.first];
    for (int i = 1; i < w.num_times; ++i)
        if (std::abs(f.times[w.first + i] - f.times[w.first + i - 1] - step) > 1e-12 * std::max(1.0, step))
            return false;
    return true;
}

template <class Visit>
std::pair<bool, std::size_t> enumerate_pairs(const FieldSample& f, const HolderWindowGrid& w, Visit&& visit)
{
    if (w.size() <= holder_exhaustive_limit) {
        std::size_t count = 0;
        for_each_pair(f, w, [&](double d, double diff, int ki, int a, int kj, int b) {
            ++count;
            visit(d, diff, ki, a, kj, b);
        });
        return {false, count};
    }
    return {true, for_sampled_pairs(f, w, visit)};
}

} // namespace detail

/// ||g||_{rho,t0,K}: sup |g| plus the rho-Hoelder seminorm over the grid
/// points with t >= t0.
inline HolderReport holder_norm(const FieldSample& field, double rho, double t0)
{
    require(rho > 0 && rho < 1, ErrorCode::parameter, "rho must lie in (0, 1)");
    const auto w = detail::holder_window(field, t0);
    HolderReport r;
    r.rho = rho;
    for (int k = w.first; k < int(field.times.size()); ++k)
        for (int a = 0; a < w.num_points; ++a)
            r.sup_term = std::max(r.sup_term, std::abs(field.values(k, a)));
    double best = 0;
    int bk = w.first, ba = 0, bk2 = w.first, bb = std::min(1, w.num_points - 1);
    auto consider = [&](double ratio, int ki, int a, int kj, int b) {
        if (ratio > best) {
            best = ratio;
            bk = ki, ba = a, bk2 = kj, bb = b;
        }
    };
    bool sub = false;
    std::size_t count = 0;
    if (w.size() <= holder_exhaustive_limit && detail::uniform_times(field, w)) {
        // d^{-rho} depends only on (time lag, point pair): tabulate it.
        const int P = w.num_points;
        const double step = w.num_times > 1 ? field.times[w.first + 1] - field.times[w.first] : 0.0;
        std::vector<double> inv(std::size_t(w.num_times) * P * P);
        for (int lag = 0; lag < w.num_times; ++lag)
            for (int a = 0; a < P; ++a)
                for (int b = 0; b < P; ++b) {
                    const double d = lag * step + (field.eval_points[a] - field.eval_points[b]).norm();
                    inv[(std::size_t(lag) * P + a) * P + b] = d > 0 ? std::pow(d, -rho) : 0.0;
                }
        for (int i = 0; i < w.num_times; ++i)
            for (int j = i; j < w.num_times; ++j) {
                const int ki = w.first + i, kj = w.first + j;
                const double* row = inv.data() + std::size_t(j - i) * P * P;
                for (int a = 0; a < P; ++a) {
                    const double ga = field.values(ki, a);
                    for (int b = (i == j ? a + 1 : 0); b < P; ++b) {
                        const double ratio = std::abs(ga - field.values(kj, b)) * row[std::size_t(a) * P + b];
                        if (ratio > best)
                            consider(ratio, ki, a, kj, b);
                    }
                    count += std::size_t(P - (i == j ? a + 1 : 0));
                }
            }
    } else {
        std::tie(sub, count) = detail::enumerate_pairs(field, w, [&](double d, double diff, int ki, int a, int kj, int b) {
            if (diff > 0.0)
                consider(diff / std::pow(d, rho), ki, a, kj, b);
        });
    }
    r.subsampled = sub;
    r.pairs_examined = count;
    r.seminorm_term = best;
    r.norm = r.sup_term + r.seminorm_term;
    r.argmax_pair = {{field.times[bk], field.eval_points[ba]}, {field.times[bk2], field.eval_points[bb]}};
    return r;
}

inline void require_same_grid(const FieldSample& a, const FieldSample& b)
{
    bool same = a.times.size() == b.times.size() && a.eval_points.size() == b.eval_points.size() &&
                a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols();
    for (std::size_t i = 0; same && i < a.times.size(); ++i)
        same = std::abs(a.times[i] - b.times[i]) <= 1e-12;
    for (std::size_t i = 0; same && i < a.eval_points.size(); ++i)
        same = (a.eval_points[i] - b.eval_points[i]).norm() <= 1e-12;
    if (!same)
        throw Error(ErrorCode::grid_mismatch, "fields live on different grids");
}

/// Pointwise difference of two fields on the same grid.
inline FieldSample field_difference(const FieldSample& a, const FieldSample& b)
{
    require_same_grid(a, b);
    FieldSample d = a;
    d.values = a.values - b.values;
    return d;
}

/// ||f1 - f2||_{rho,t0,K}.
inline double holder_distance(const FieldSample& f1, const FieldSample& f2, double rho, double t0)
{
    return holder_norm(field_difference(f1, f2), rho, t0).norm;
}

/// O_g(delta): the sup of |g(p) - g(q)| / d(p,q)^rho' over pairs with
/// d(p,q) < delta, for each delta of the (increasing) grid. Pairs below
/// the smallest delta give 0.
inline std::vector<std::pair<double, double>> modulus_of_continuity(const FieldSample& field, double rho_prime,
                                                                    const std::vector<double>& deltas, double t0)
{
    require(rho_prime > 0 && rho_prime < 1, ErrorCode::parameter, "rho' must lie in (0, 1)");
    for (std::size_t i = 1; i < deltas.size(); ++i)
        require(deltas[i] > deltas[i - 1], ErrorCode::parameter, "delta grid must be increasing");
    const auto w = detail::holder_window(field, t0);
    std::vector<double> best(deltas.size(), 0.0);
    detail::enumerate_pairs(field, w, [&](double d, double diff, int, int, int, int) {
        if (diff == 0.0)
            return;
        // first delta strictly greater than d
        const auto it = std::upper_bound(deltas.begin(), deltas.end(), d);
        if (it == deltas.end())
            return;
        auto& slot = best[std::size_t(it - deltas.begin())];
        slot = std::max(slot, diff / std::pow(d, rho_prime));
    });
    std::vector<std::pair<double, double>> curve(deltas.size());
    double run = 0;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        run = std::max(run, best[i]);
        curve[i] = {deltas[i], run};
    }
    return curve;
}

inline std::vector<std::pair<double, double>> modulus_of_continuity(const FieldSample& field, double rho_prime,
                                                                    const std::vector<double>& deltas)
{
    return modulus_of_continuity(field, rho_prime, deltas, field.t0);
}

/// holder_norm plus the modulus curve at rho' = rho / 2 over `deltas`.
inline HolderReport holder_report(const FieldSample& field, double rho, double t0, const std::vector<double>& deltas)
{
    HolderReport r = holder_norm(field, rho, t0);
    if (!deltas.empty())
        r.modulus_curve = modulus_of_continuity(field, rho / 2, deltas, t0);
    return r;
}

enum class IncrementDirection { space, time };

/// rho-hat = slope / p of log E|X(t,x) - X(s,y)|^p against log distance.
///
/// space: pairs of evaluation points that differ along one coordinate
/// axis, at the final time, grouped by separation. time: lags of
/// 1, 2, 4, ... steps at every point and every start time >= t0.
inline ExponentEstimate fit_increment_exponent(const std::vector<FieldSample>& ensemble, IncrementDirection dir,
                                               double p, std::size_t min_ensemble = 100)
{
    require(ensemble.size() >= min_ensemble, ErrorCode::parameter,
            "ensemble needs at least " + std::to_string(min_ensemble) + " fields");
    require(p > 0, ErrorCode::parameter, "moment order must be positive");
    const FieldSample& f0 = ensemble.front();
    for (const auto& f : ensemble)
        require_same_grid(f0, f);

    std::map<long long, std::pair<double, double>> moments; // key -> (sum, count)
    std::map<long long, double> scale_of;
    if (dir == IncrementDirection::space) {
        const int k = int(f0.times.size()) - 1;
        const auto& pts = f0.eval_points;
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) {
                const Vec3 d = pts[b] - pts[a];
                int nonzero = 0;
                for (int c = 0; c < 3; ++c)
                    nonzero += std::abs(d[c]) > 1e-12;
                if (nonzero != 1)
                    continue;
                const double dist = d.norm();
                const long long key = std::llround(dist * 1e6);
                scale_of[key] = dist;
                auto& m = moments[key];
                for (const auto& f : ensemble) {
                    m.first += std::pow(std::abs(f.values(k, b) - f.values(k, a)), p);
                    m.second += 1;
                }
            }
    } else {
        const auto w = detail::holder_window(f0, f0.t0);
        for (int lag = 1; lag < w.num_times; lag *= 2) {
            const double dist = f0.times[w.first + lag] - f0.times[w.first];
            const long long key = std::llround(dist * 1e6);
            scale_of[key] = dist;
            auto& m = moments[key];
            for (const auto& f : ensemble)
                for (int k = w.first; k + lag < int(f.times.size()); ++k)
                    for (int a = 0; a < w.num_points; ++a) {
                        m.first += std::pow(std::abs(f.values(k + lag, a) - f.values(k, a)), p);
                        m.second += 1;
                    }
        }
    }
    if (moments.size() < 4)
        throw Error(ErrorCode::insufficient_scales,
                    "need at least 4 separation scales, found " + std::to_string(moments.size()));
    std::vector<double> scales, values;
    for (const auto& [key, m] : moments) {
        scales.push_back(scale_of[key]);
        values.push_back(m.first / m.second);
    }
    if (*std::max_element(values.begin(), values.end()) == 0.0) {
        ExponentEstimate flat;
        flat.r_squared = 1.0;
        for (std::size_t i = 0; i < scales.size(); ++i)
            flat.sample_points.emplace_back(scales[i], 0.0);
        return flat;
    }
    ExponentEstimate est = fit_power_law(scales, values);
    est.exponent /= p;
    return est;
}

inline nlohmann::json to_json(const SpaceTimePoint& p) { return {{"t", p.t}, {"x", to_array(p.x)}}; }

inline nlohmann::json to_json(const HolderReport& r)
{
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& [d, o] : r.modulus_curve)
        curve.push_back({d, o});
    return {{"rho", r.rho},
            {"sup_term", r.sup_term},
            {"seminorm_term", r.seminorm_term},
            {"norm", r.norm},
            {"argmax_pair", {to_json(r.argmax_pair.first), to_json(r.argmax_pair.second)}},
            {"modulus_curve", curve},
            {"subsampled", r.subsampled},
            {"pairs_examined", r.pairs_examined}};
}

} // namespace swave
