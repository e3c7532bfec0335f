#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "swave/error.hpp"

namespace swave {

/// Log-log power-law fit: value ~ exp(intercept) * scale^exponent.
struct ExponentEstimate {
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> sample_points; // (scale, value)
};

/// Ordinary least squares of log(value) on log(scale).
///
/// Scales must be strictly increasing and positive; values must be
/// positive. When `cap` is given the returned exponent is min(slope, cap).
inline ExponentEstimate fit_power_law(std::span<const double> scales, std::span<const double> values,
                                      double cap = std::numeric_limits<double>::infinity())
{
    require(scales.size() == values.size(), ErrorCode::parameter, "scale/value size mismatch");
    require(scales.size() >= 2, ErrorCode::insufficient_scales, "need at least two scales for a fit");
    const auto n = scales.size();
    double mx = 0, my = 0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(scales[i] > 0 && values[i] > 0, ErrorCode::parameter,
                "power-law fit needs positive scales and values");
        if (i > 0)
            require(scales[i] > scales[i - 1], ErrorCode::parameter, "scales must be strictly increasing");
        lx[i] = std::log(scales[i]);
        ly[i] = std::log(values[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    ExponentEstimate est;
    const double slope = sxy / sxx;
    est.exponent = std::min(slope, cap);
    est.intercept = my - slope * mx;
    est.r_squared = syy > 0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    est.sample_points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        est.sample_points.emplace_back(scales[i], values[i]);
    return est;
}

/// `count` geometrically spaced points from lo to hi inclusive.
inline std::vector<double> geometric_grid(double lo, double hi, int count)
{
    require(lo > 0 && hi > lo && count >= 2, ErrorCode::parameter, "bad geometric grid");
    std::vector<double> out(count);
    const double ratio = std::log(hi / lo) / double(count - 1);
    for (int i = 0; i < count; ++i)
        out[i] = lo * std::exp(ratio * i);
    out.back() = hi;
    return out;
}

} // namespace swave
