#pragma once

#include <string>
#include <vector>

#include "ctsched/chain_analysis.hpp"
#include "ctsched/chain_sim.hpp"
#include "ctsched/monte_carlo.hpp"
#include "ctsched/scenario_config.hpp"

namespace ctsched {

/// Per-sensor outcome of one scenario variant.
struct SensorOutcome {
    int sensor = 0;  ///< 0-based
    double f_analytic = 0.0;
    double f_empirical = 0.0;
    double f_se = 0.0;
    double bound = std::numeric_limits<double>::quiet_NaN();  ///< NaN: none
    std::string regime;
    bool bound_ok = true;
    double worst_excess = 0.0;  ///< max over checked grid of mean - (bound + 3 se)
};

/// One family of Monte Carlo curves (a scheduling policy or controller).
struct VariantResult {
    std::string label;
    MonteCarloSummary summary;  ///< sensor-major flattened curves
    std::vector<SensorOutcome> sensors;
};

struct PhaseMeanRow {
    int phase = 0;  ///< 0-based
    int sensor = 0;
    double start = 0.0;
    double end = 0.0;
    double mean_sq = 0.0;
};

struct BoundReport {
    std::string scenario;
    std::uint64_t seed = 0;
    int replicates = 0;
    double horizon = 0.0;
    double grid_dt = 0.0;
    std::vector<double> grid;
    std::vector<VariantResult> variants;
    std::vector<PhaseMeanRow> phase_means;  ///< churn scenarios
    bool all_bounds_ok = true;
};

/// Full scenario run: solve, simulate, aggregate, bound-check, and write
/// the CSV artifacts plus report.json into out_dir. Deterministic for a
/// fixed config and seed.
BoundReport run_scenario(const ScenarioConfig& config, const std::string& out_dir);

/// Deterministic schedule with events at offset + k / frequency, k >= 0.
SamplingTrace periodic_schedule(const Vec& frequency, double horizon,
                                const Vec& offsets);

/// Chain spec solved through to stationary statistics.
struct SolvedChain {
    ChainSpec spec;
    ChainMatrices mats;
    StationaryPolicy policy;
    FrequencyReport freq;
};
SolvedChain solve_chain(const ChainSpec& spec);

/// Phased schedule: one policy per phase, chain occupancy carried across
/// switches (sensors active in both phases keep their state, everything
/// else restarts idle). Event times are global, sensor ids are global.
SamplingTrace simulate_phased_chain(const ScenarioConfig& config,
                                    const std::vector<SolvedChain>& phases, Rng rng);

/// Event export, one row per sample: (sensor, index, time), sensors
/// 1-based, indices from 0 as the first sample of each sensor.
void write_trace_csv(std::ostream& out, const SamplingTrace& trace);

}  // namespace ctsched
