#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ctsched/policy_solver.hpp"
#include "ctsched/rng.hpp"
#include "ctsched/types.hpp"

namespace ctsched {

/// Realized sampling schedule: per-sensor event times plus the full jump
/// record of the chain that produced them.
struct SamplingTrace {
    double horizon = 0.0;
    std::vector<std::vector<double>> events;          ///< per sensor, ascending
    std::vector<std::pair<double, int>> state_path;   ///< (time, state), first entry at t = 0

    int sensor_count() const { return static_cast<int>(events.size()); }
};

/// Exact event-driven simulation of the controlled chain: per-state
/// competing exponentials with the policy's effective rates, which are
/// constant between jumps. Deterministic given the generator state.
SamplingTrace simulate_chain(const StationaryPolicy& policy, int initial_state,
                             double horizon, Rng rng);

inline SamplingTrace simulate_chain(const StationaryPolicy& policy, int initial_state,
                                    double horizon, std::uint64_t seed) {
    return simulate_chain(policy, initial_state, horizon, Rng(seed));
}

/// Event counts divided by the horizon.
Vec empirical_frequencies(const SamplingTrace& trace);

/// Inter-sample gap statistics for one sensor, feeding the pulse and
/// exponential controller bounds.
struct IntersampleStats {
    std::vector<double> gaps;
    double p_below = 0.0;     ///< empirical P{gap < rho}
    double exp_moment = 0.0;  ///< sample mean of exp(-2 theta gap)
};

IntersampleStats intersample_statistics(const SamplingTrace& trace, int sensor,
                                        double rho, double theta);

/// Realized time-average cost of a trace under a policy: each sampling
/// event of sensor s pays cost_weights[s], and the squared control input
/// accrues over the holding times, all divided by the horizon.
double realized_cost(const SamplingTrace& trace, const StationaryPolicy& policy,
                     const Vec& cost_weights);

}  // namespace ctsched
