#pragma once

#include "ctsched/chain_model.hpp"
#include "ctsched/policy_solver.hpp"
#include "ctsched/types.hpp"

namespace ctsched {

/// Stationary statistics of the closed-loop chain.
struct FrequencyReport {
    Vec p_stationary;  ///< length-n, limit of the state-probability vector
    Mat closed_loop;   ///< n x n closed-loop generator
    Vec frequency;     ///< length-L average sampling frequencies
    Vec mean_gap;      ///< 1 / frequency, +inf for silent sensors
};

/// Generator of the mean dynamics pdot = M_cl p under the stationary
/// policy: A + sum_i B_i diag(gain row i). Throws GeneratorViolationError
/// if the result is not a generator.
Mat closed_loop_generator(const ChainMatrices& mats, const StationaryPolicy& policy);

/// Normalized null vector of a generator, via least squares on the system
/// augmented with the normalization row. Throws NonErgodicError when the
/// null space is multidimensional at the given tolerance.
Vec stationary_distribution(const Mat& closed_loop, double tol = 1e-8);

/// Average sampling frequencies: the effective idle -> sensor rate times
/// the stationary idle probability.
FrequencyReport sampling_frequencies(const ChainSpec& spec, const ChainMatrices& mats,
                                     const StationaryPolicy& policy,
                                     const Vec& p_stationary);

}  // namespace ctsched
