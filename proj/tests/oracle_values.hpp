#pragma once

// Reference values computed independently with SciPy (quad, erf, norm.ppf)
// before the library existed. They are frozen here; never regenerate them
// from the library under test.

namespace oracle {

// int_0^inf u^{beta-3} sin^2 u du
inline constexpr double sine_integral_b05 = 2.363271801222619;
inline constexpr double sine_integral_b10 = 1.570796326782496;
inline constexpr double sine_integral_b15 = 1.7724538509127443;

// (2 pi)^{-3} C_beta 4 pi I_beta, equal to 2^{1-beta} / (2 - beta)
inline constexpr double k_beta_b05 = 0.9428090415881533;
inline constexpr double k_beta_b10 = 0.9999999999921058;
inline constexpr double k_beta_b15 = 1.4142135623788628;

// alpha = 2, T = 1: per-increment probability p and P(L_n(T)) = p^{n 2^n}
inline constexpr double loc_p_n2 = 0.9953222650189527;
inline constexpr double loc_P_n2 = 0.9631850954184203;
inline constexpr double loc_p_n3 = 0.9994679944948608;
inline constexpr double loc_P_n3 = 0.9873096802060782;
inline constexpr double loc_p_n4 = 0.9999366575163338;
inline constexpr double loc_P_n4 = 0.9959541592035918;

// Wilson 95% interval for 50 successes out of 100
inline constexpr double wilson_50_100_lo = 0.4038315303659956;
inline constexpr double wilson_50_100_hi = 0.5961684696340044;

} // namespace oracle
