#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctsched/controllers.hpp"
#include "ctsched/plant_models.hpp"
#include "ctsched/types.hpp"

namespace ctsched {

enum class ScenarioKind {
    estimation_scalar,
    estimation_vector,
    estimation_kalman,
    adhoc_churn,
    control_scalar,
    coupled_pi,
};

std::string to_string(ScenarioKind kind);

/// One scheduling phase: which sensors are active on [start, end) and the
/// cost weight each active sensor carries. The policy is re-solved per
/// phase; chain occupancy carries over, with removed sensors sent idle.
struct PhaseConfig {
    double start = 0.0;
    double end = 0.0;
    std::vector<int> active;  ///< 0-based sensor ids, ascending
    Vec xi;                   ///< one weight per active sensor
};

struct ControllerConfig {
    enum class Kind { impulsive, pulse, exponential };
    Kind kind = Kind::impulsive;
    double width = 0.1;    ///< pulse only
    double theta = 10.0;   ///< exponential only
    std::string label() const;
};

struct ScenarioConfig {
    std::string name;
    ScenarioKind kind = ScenarioKind::estimation_scalar;

    int sensors = 0;
    Vec mu_sample;  ///< base idle -> sensor rates, length L
    Vec mu_return;  ///< base sensor -> idle rates, length L
    Vec xi;         ///< cost weights, length L (phased scenarios override per phase)

    std::vector<ScalarPlant> scalar_plants;  ///< scalar estimation / control / churn
    std::vector<LinearPlant> linear_plants;  ///< vector estimation / Kalman
    std::vector<ControllerConfig> controllers;

    std::vector<PhaseConfig> phases;  ///< churn and coupled-pi
    double ring_coupling = 0.1;
    double pi_kp = -1.2;
    double pi_ki = -0.3;
    std::vector<StepDisturbance> disturbances;

    double horizon = 30.0;
    double grid_dt = 0.05;
    int replicates = 1000;
    std::uint64_t seed = 1;
    double warmup = -1.0;        ///< bound checks start here; < 0 means 2/f per sensor
    double phase_warmup = 1.5;   ///< settle time excluded after each phase switch
    bool periodic_baseline = false;

    ChainSpec chain_spec() const;                        ///< from sensors/mu/xi
    ChainSpec phase_chain_spec(const PhaseConfig&) const;  ///< restricted to active sensors

    void validate() const;
};

/// Built-in scenario catalog (the water-tank experiments).
ScenarioConfig builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

/// Parse a scenario from a JSON document or file. Unknown keys are
/// rejected; sensor and subsystem ids are 1-based in the file format.
ScenarioConfig parse_scenario_json(const std::string& text);
ScenarioConfig load_scenario_file(const std::string& path);

/// Accepts either a built-in name or a path to a JSON config.
ScenarioConfig resolve_scenario(const std::string& name_or_path);

}  // namespace ctsched
