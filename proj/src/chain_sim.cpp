#include "ctsched/chain_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctsched/chain_model.hpp"
#include "ctsched/errors.hpp"

namespace ctsched {

namespace {

struct StateMenu {
    double total_rate = 0.0;
    std::vector<double> cumulative;  // over active counters
    std::vector<int> counter;
    std::vector<int> target;
};

std::vector<StateMenu> build_menus(const StationaryPolicy& policy) {
    const int n = policy.state_count();
    const int m = policy.counter_count();
    const int idle = n - 1;
    std::vector<StateMenu> menus(n);
    for (int j = 0; j < n; ++j) {
        StateMenu& menu = menus[j];
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            if (!counter_fires_from(i, j, idle)) continue;
            double rate = policy.eff_rates(i, j);
            if (rate < 0.0) {
                if (rate < -1e-9)
                    throw GeneratorViolationError(
                        "cannot simulate with negative rate at counter " +
                        std::to_string(i) + ", state " + std::to_string(j));
                rate = 0.0;
            }
            acc += rate;
            menu.cumulative.push_back(acc);
            menu.counter.push_back(i);
            menu.target.push_back(counter_target(i, idle));
        }
        menu.total_rate = acc;
    }
    return menus;
}

}  // namespace

SamplingTrace simulate_chain(const StationaryPolicy& policy, int initial_state,
                             double horizon, Rng rng) {
    if (!(horizon > 0.0)) throw InvalidSpecError("horizon must be positive");
    const int n = policy.state_count();
    if (initial_state < 0 || initial_state >= n)
        throw InvalidStateError("initial state out of range");

    const std::vector<StateMenu> menus = build_menus(policy);

    SamplingTrace trace;
    trace.horizon = horizon;
    trace.events.resize(policy.sensor_count());
    trace.state_path.emplace_back(0.0, initial_state);

    int state = initial_state;
    double t = 0.0;
    for (;;) {
        const StateMenu& menu = menus[state];
        if (menu.total_rate <= 0.0)
            throw AbsorbingStateError("state " + std::to_string(state) +
                                      " has no outgoing rate");
        t += rng.exponential(menu.total_rate);
        if (t > horizon) break;
        const double pick = rng.uniform() * menu.total_rate;
        const auto it = std::upper_bound(menu.cumulative.begin(),
                                         menu.cumulative.end(), pick);
        const std::size_t choice =
            std::min(static_cast<std::size_t>(it - menu.cumulative.begin()),
                     menu.cumulative.size() - 1);
        const int counter = menu.counter[choice];
        state = menu.target[choice];
        trace.state_path.emplace_back(t, state);
        if (counter % 2 == 1) trace.events[counter / 2].push_back(t);
    }
    return trace;
}

Vec empirical_frequencies(const SamplingTrace& trace) {
    if (!(trace.horizon > 0.0)) throw InvalidSpecError("trace has empty horizon");
    Vec freq(trace.sensor_count());
    for (int s = 0; s < trace.sensor_count(); ++s)
        freq[s] = static_cast<double>(trace.events[s].size()) / trace.horizon;
    return freq;
}

double realized_cost(const SamplingTrace& trace, const StationaryPolicy& policy,
                     const Vec& cost_weights) {
    if (cost_weights.size() != trace.sensor_count())
        throw InvalidSpecError("one cost weight per sensor required");
    double cost = 0.0;
    for (int s = 0; s < trace.sensor_count(); ++s)
        cost += cost_weights[s] * static_cast<double>(trace.events[s].size());

    Vec effort(policy.state_count());
    for (int j = 0; j < policy.state_count(); ++j)
        effort[j] = policy.gain.col(j).squaredNorm();
    for (std::size_t i = 0; i < trace.state_path.size(); ++i) {
        const double until = i + 1 < trace.state_path.size()
                                 ? trace.state_path[i + 1].first
                                 : trace.horizon;
        cost += effort[trace.state_path[i].second] *
                (until - trace.state_path[i].first);
    }
    return cost / trace.horizon;
}

IntersampleStats intersample_statistics(const SamplingTrace& trace, int sensor,
                                        double rho, double theta) {
    if (sensor < 0 || sensor >= trace.sensor_count())
        throw InvalidSpecError("sensor index out of range");
    const std::vector<double>& events = trace.events[sensor];
    if (events.size() < 2)
        throw InsufficientDataError("need at least two events for gap statistics");

    IntersampleStats stats;
    stats.gaps.reserve(events.size() - 1);
    std::size_t below = 0;
    double moment = 0.0;
    for (std::size_t i = 0; i + 1 < events.size(); ++i) {
        const double gap = events[i + 1] - events[i];
        stats.gaps.push_back(gap);
        if (gap < rho) ++below;
        moment += std::exp(-2.0 * theta * gap);
    }
    stats.p_below = static_cast<double>(below) / static_cast<double>(stats.gaps.size());
    stats.exp_moment = moment / static_cast<double>(stats.gaps.size());
    return stats;
}

}  // namespace ctsched
