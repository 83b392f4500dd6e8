#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctsched/chain_analysis.hpp"
#include "ctsched/chain_model.hpp"
#include "ctsched/chain_sim.hpp"
#include "ctsched/errors.hpp"
#include "ctsched/policy_solver.hpp"

using namespace ctsched;

namespace {

StationaryPolicy solved(const ChainSpec& spec) {
    return solve_stationary(build_matrices(spec));
}

StationaryPolicy water_tank_policy() {
    Vec xi(2);
    xi << 0.5, 0.1;
    return solved(ChainSpec::uniform(2, 1.0, 10.0, xi));
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("same seed gives bit-identical traces") {
    const StationaryPolicy policy = water_tank_policy();
    const SamplingTrace a = simulate_chain(policy, 2, 100.0, 42u);
    const SamplingTrace b = simulate_chain(policy, 2, 100.0, 42u);
    CHECK(a.events == b.events);
    CHECK(a.state_path == b.state_path);
    const SamplingTrace c = simulate_chain(policy, 2, 100.0, 43u);
    CHECK(a.state_path != c.state_path);
}

TEST_CASE("events coincide with jumps into their sensor from idle") {
    const StationaryPolicy policy = water_tank_policy();
    const SamplingTrace trace = simulate_chain(policy, 2, 500.0, 7u);
    const int idle = 2;
    for (int s = 0; s < trace.sensor_count(); ++s) {
        CHECK(std::is_sorted(trace.events[s].begin(), trace.events[s].end()));
        for (double te : trace.events[s]) {
            const auto it = std::find_if(
                trace.state_path.begin(), trace.state_path.end(),
                [&](const auto& rec) { return rec.first == te; });
            REQUIRE(it != trace.state_path.end());
            CHECK(it->second == s);
            CHECK((it - 1)->second == idle);
        }
    }
    CHECK(trace.state_path.front() == std::pair{0.0, idle});
}

TEST_CASE("two-state chain matches its closed-form frequency") {
    const double a = 1.0, b = 10.0;
    const StationaryPolicy policy = solved(ChainSpec::uniform(1, a, b, Vec::Zero(1)));
    const double horizon = 1e5;
    const SamplingTrace trace = simulate_chain(policy, 1, horizon, 11u);
    const IntersampleStats stats = intersample_statistics(trace, 0, 0.0, 0.0);

    const double f_expected = a * b / (a + b);
    const double f_hat = empirical_frequencies(trace)[0];
    const double se = stddev(stats.gaps) * std::pow(f_hat, 1.5) / std::sqrt(horizon);
    CHECK(std::abs(f_hat - f_expected) <= 3.0 * se);

    // Gap mean against the closed form, also within 3 standard errors.
    const double gap_se = stddev(stats.gaps) / std::sqrt(double(stats.gaps.size()));
    CHECK(std::abs(mean(stats.gaps) - (a + b) / (a * b)) <= 3.0 * gap_se);
}

TEST_CASE("controlled chain empirical frequencies match the analysis") {
    const StationaryPolicy policy = water_tank_policy();
    const SamplingTrace trace = simulate_chain(policy, 2, 1e5, 3u);
    const Vec f_hat = empirical_frequencies(trace);
    CHECK(std::abs(f_hat[0] - 0.66) <= 0.03);
    CHECK(std::abs(f_hat[1] - 0.83) <= 0.03);
}

TEST_CASE("empirical frequency arithmetic") {
    SamplingTrace trace;
    trace.horizon = 10.0;
    trace.events = {{1.0, 4.0, 9.5}, {}};
    const Vec f = empirical_frequencies(trace);
    CHECK(f[0] == 0.3);
    CHECK(f[1] == 0.0);
}

TEST_CASE("intersample statistics edge values") {
    SamplingTrace trace;
    trace.horizon = 10.0;
    trace.events = {{1.0, 2.5, 3.0, 7.0}};

    const IntersampleStats at_zero = intersample_statistics(trace, 0, 0.0, 0.0);
    CHECK(at_zero.p_below == 0.0);   // gaps are positive
    CHECK(at_zero.exp_moment == 1.0);  // theta = 0

    const IntersampleStats some = intersample_statistics(trace, 0, 1.0, 0.5);
    CHECK(some.gaps == std::vector<double>{1.5, 0.5, 4.0});
    CHECK(some.p_below == doctest::Approx(1.0 / 3.0));

    SamplingTrace thin;
    thin.horizon = 10.0;
    thin.events = {{1.0}};
    CHECK_THROWS_AS(intersample_statistics(thin, 0, 0.0, 0.0),
                    InsufficientDataError);
}

TEST_CASE("absorbing state is an error") {
    // No return rate: the first sample strands the chain in the sensor state.
    const StationaryPolicy policy = solved(ChainSpec::uniform(1, 1.0, 0.0, Vec::Zero(1)));
    CHECK_THROWS_AS(simulate_chain(policy, 1, 100.0, 5u), AbsorbingStateError);
}

TEST_CASE("gaps look independent and identically distributed") {
    const StationaryPolicy policy = water_tank_policy();
    const SamplingTrace trace = simulate_chain(policy, 2, 2e4, 17u);
    const IntersampleStats stats = intersample_statistics(trace, 0, 0.0, 0.0);
    const std::vector<double>& gaps = stats.gaps;
    REQUIRE(gaps.size() > 1000);

    // Lag-1 autocorrelation within 3/sqrt(N) of zero.
    const double m = mean(gaps);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i)
        num += (gaps[i] - m) * (gaps[i + 1] - m);
    for (double g : gaps) den += (g - m) * (g - m);
    const double lag1 = num / den;
    CHECK(std::abs(lag1) <= 3.0 / std::sqrt(double(gaps.size())));
}

TEST_CASE("idle holding times are exponential") {
    const StationaryPolicy policy = water_tank_policy();
    const int idle = 2;
    const double total_idle_rate =
        policy.eff_rates(sampling_counter(0), idle) +
        policy.eff_rates(sampling_counter(1), idle);

    // Collect holding times in idle until the next jump.
    std::vector<double> holds;
    const SamplingTrace trace = simulate_chain(policy, idle, 2e4, 23u);
    for (std::size_t i = 0; i + 1 < trace.state_path.size(); ++i)
        if (trace.state_path[i].second == idle)
            holds.push_back(trace.state_path[i + 1].first - trace.state_path[i].first);
    REQUIRE(holds.size() >= 10000);
    holds.resize(10000);
    std::sort(holds.begin(), holds.end());

    // Kolmogorov-Smirnov against Exp(total rate), 1% critical value.
    double ks = 0.0;
    const double n = static_cast<double>(holds.size());
    for (std::size_t i = 0; i < holds.size(); ++i) {
        const double cdf = 1.0 - std::exp(-total_idle_rate * holds[i]);
        ks = std::max(ks, std::abs(cdf - (i + 1) / n));
        ks = std::max(ks, std::abs(cdf - i / n));
    }
    CHECK(ks <= 1.628 / std::sqrt(n));
}

TEST_CASE("event counts are stationary across windows") {
    const StationaryPolicy policy = water_tank_policy();
    const double horizon = 4e4;
    const SamplingTrace trace = simulate_chain(policy, 2, horizon, 29u);
    const int windows = 10;
    for (int s = 0; s < 2; ++s) {
        std::vector<double> counts(windows, 0.0);
        for (double te : trace.events[s])
            counts[std::min(windows - 1,
                            static_cast<int>(te / horizon * windows))] += 1.0;
        const double expected = mean(counts);
        for (double count : counts)
            CHECK(std::abs(count - expected) <= 4.0 * std::sqrt(expected));
    }
}
