#pragma once

// Umbrella header for the stochastic wave laboratory.

#include "swave/error.hpp"
#include "swave/fit.hpp"
#include "swave/geometry.hpp"
#include "swave/quadrature.hpp"
#include "swave/kernels.hpp"
#include "swave/sphere.hpp"
#include "swave/wavekernel.hpp"
#include "swave/noise.hpp"
#include "swave/solver.hpp"
#include "swave/holder.hpp"
#include "swave/io.hpp"
#include "swave/harness.hpp"
