#pragma once

#include <cstdint>
#include <functional>

#include "ctsched/rng.hpp"
#include "ctsched/types.hpp"

namespace ctsched {

/// 0.99 quantile of the standard normal, used for interval half-widths.
inline constexpr double kCiQuantile = 2.3263478740408408;

struct MonteCarloSummary {
    Vec mean;
    Vec variance;  ///< sample variance across replicates, pointwise
    Vec ci_half;   ///< kCiQuantile * sqrt(variance / replicates)
    int replicates = 0;
};

/// Runs `runner` once per replicate with an independent substream of the
/// master seed and aggregates pointwise with compensated summation, so
/// the result does not depend on replicate order (to roundoff) and is
/// reproducible for a fixed master seed. Every replicate must return a
/// vector of the same length.
MonteCarloSummary monte_carlo(const std::function<Vec(int, Rng&)>& runner,
                              int replicates, std::uint64_t master_seed);

}  // namespace ctsched
