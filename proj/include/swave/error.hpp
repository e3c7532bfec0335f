#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace swave {

enum class ErrorCode {
    invalid_kernel,
    non_integrable_kernel,
    quadrature,
    unsupported_order,
    degenerate_covariance,
    alignment,
    parameter,
    config,
    blow_up,
    iteration_limit,
    degenerate_grid,
    grid_mismatch,
    insufficient_scales,
    io,
};

inline const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_kernel: return "invalid-kernel";
    case ErrorCode::non_integrable_kernel: return "non-integrable-kernel";
    case ErrorCode::quadrature: return "quadrature";
    case ErrorCode::unsupported_order: return "unsupported-order";
    case ErrorCode::degenerate_covariance: return "degenerate-covariance";
    case ErrorCode::alignment: return "alignment";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::config: return "config";
    case ErrorCode::blow_up: return "blow-up";
    case ErrorCode::iteration_limit: return "iteration-limit";
    case ErrorCode::degenerate_grid: return "degenerate-grid";
    case ErrorCode::grid_mismatch: return "grid-mismatch";
    case ErrorCode::insufficient_scales: return "insufficient-scales";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// A non-finite field value; carries the first offending space-time point.
class BlowUpError : public Error {
public:
    BlowUpError(double t, std::array<double, 3> x, const std::string& what)
        : Error(ErrorCode::blow_up, what), t_(t), x_(x)
    {
    }

    double time() const noexcept { return t_; }
    const std::array<double, 3>& point() const noexcept { return x_; }

private:
    double t_;
    std::array<double, 3> x_;
};

class IterationLimitError : public Error {
public:
    IterationLimitError(int iterations, double final_delta)
        : Error(ErrorCode::iteration_limit,
                "Picard iteration did not converge after " + std::to_string(iterations) +
                    " iterations (final delta " + std::to_string(final_delta) + ")"),
          iterations_(iterations), final_delta_(final_delta)
    {
    }

    int iterations() const noexcept { return iterations_; }
    double final_delta() const noexcept { return final_delta_; }

private:
    int iterations_;
    double final_delta_;
};

inline void require(bool cond, ErrorCode code, const std::string& what)
{
    if (!cond)
        throw Error(code, what);
}

} // namespace swave
