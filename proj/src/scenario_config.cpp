#include "ctsched/scenario_config.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "ctsched/chain_model.hpp"
#include "ctsched/errors.hpp"

namespace ctsched {

using nlohmann::json;

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::estimation_scalar: return "estimation-scalar";
        case ScenarioKind::estimation_vector: return "estimation-vector";
        case ScenarioKind::estimation_kalman: return "estimation-kalman";
        case ScenarioKind::adhoc_churn: return "adhoc-churn";
        case ScenarioKind::control_scalar: return "control-scalar";
        case ScenarioKind::coupled_pi: return "coupled-pi";
    }
    return "unknown";
}

std::string ControllerConfig::label() const {
    switch (kind) {
        case Kind::impulsive: return "impulsive";
        case Kind::pulse: return "pulse";
        case Kind::exponential: return "exponential";
    }
    return "unknown";
}

namespace {

ScenarioKind kind_from_string(const std::string& text) {
    for (ScenarioKind kind :
         {ScenarioKind::estimation_scalar, ScenarioKind::estimation_vector,
          ScenarioKind::estimation_kalman, ScenarioKind::adhoc_churn,
          ScenarioKind::control_scalar, ScenarioKind::coupled_pi})
        if (to_string(kind) == text) return kind;
    throw ConfigError("unknown scenario kind '" + text + "'");
}

void expect_keys(const json& object, const std::set<std::string>& allowed,
                 const std::string& where) {
    for (const auto& item : object.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

/// Length-n vector from a JSON scalar (broadcast) or array.
Vec parse_vec(const json& value, int n, const std::string& where) {
    Vec out(n);
    if (value.is_number()) {
        out.setConstant(value.get<double>());
        return out;
    }
    if (!value.is_array() || static_cast<int>(value.size()) != n)
        throw ConfigError(where + " must be a number or an array of length " +
                          std::to_string(n));
    for (int i = 0; i < n; ++i) out[i] = value[i].get<double>();
    return out;
}

Mat parse_mat(const json& value, const std::string& where) {
    if (!value.is_array() || value.empty() || !value[0].is_array())
        throw ConfigError(where + " must be an array of rows");
    const int rows = static_cast<int>(value.size());
    const int cols = static_cast<int>(value[0].size());
    Mat out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(value[r].size()) != cols)
            throw ConfigError(where + " has ragged rows");
        for (int c = 0; c < cols; ++c) out(r, c) = value[r][c].get<double>();
    }
    return out;
}

LinearPlant cascade_tank_plant(double gamma, const Mat& C, const Mat& R) {
    Mat A(2, 2);
    A << -gamma, 0.0, gamma, -gamma;
    return make_linear_plant(A, Mat::Identity(2, 2), C, R);
}

}  // namespace

ChainSpec ScenarioConfig::chain_spec() const {
    ChainSpec spec;
    spec.sensor_count = sensors;
    spec.base_rates = Vec::Zero(2 * sensors);
    for (int s = 0; s < sensors; ++s) {
        spec.base_rates[sampling_counter(s)] = mu_sample[s];
        spec.base_rates[return_counter(s)] = mu_return[s];
    }
    spec.sensitivity = Mat::Identity(2 * sensors, 2 * sensors);
    spec.cost_weights = xi;
    spec.validate();
    return spec;
}

ChainSpec ScenarioConfig::phase_chain_spec(const PhaseConfig& phase) const {
    const int active = static_cast<int>(phase.active.size());
    ChainSpec spec;
    spec.sensor_count = active;
    spec.base_rates = Vec::Zero(2 * active);
    spec.cost_weights = phase.xi;
    for (int s = 0; s < active; ++s) {
        const int global = phase.active[static_cast<std::size_t>(s)];
        spec.base_rates[sampling_counter(s)] = mu_sample[global];
        spec.base_rates[return_counter(s)] = mu_return[global];
    }
    spec.sensitivity = Mat::Identity(2 * active, 2 * active);
    spec.validate();
    return spec;
}

void ScenarioConfig::validate() const {
    if (sensors < 1) throw ConfigError("scenario needs at least one sensor");
    if (mu_sample.size() != sensors || mu_return.size() != sensors)
        throw ConfigError("base rates must have one entry per sensor");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (!(grid_dt > 0.0) || grid_dt > horizon)
        throw ConfigError("grid step must lie in (0, horizon]");
    if (replicates < 1) throw ConfigError("need at least one replicate");

    const bool phased = kind == ScenarioKind::adhoc_churn || kind == ScenarioKind::coupled_pi;
    if (phased) {
        if (phases.empty()) throw ConfigError("phased scenario needs phases");
        double cursor = 0.0;
        for (const PhaseConfig& phase : phases) {
            if (phase.start != cursor)
                throw ConfigError("phases must partition [0, horizon] without gaps");
            if (!(phase.end > phase.start))
                throw ConfigError("phase end must exceed its start");
            if (phase.active.empty())
                throw ConfigError("every phase needs at least one active sensor");
            if (static_cast<int>(phase.xi.size()) !=
                static_cast<int>(phase.active.size()))
                throw ConfigError("phase weights must match the active set");
            int previous = -1;
            for (int s : phase.active) {
                if (s <= previous || s < 0 || s >= sensors)
                    throw ConfigError("phase active sets must be ascending sensor ids");
                previous = s;
            }
            cursor = phase.end;
        }
        if (cursor != horizon)
            throw ConfigError("phases must end exactly at the horizon");
    } else if (xi.size() != sensors) {
        throw ConfigError("cost weights must have one entry per sensor");
    }

    switch (kind) {
        case ScenarioKind::estimation_scalar:
        case ScenarioKind::control_scalar:
        case ScenarioKind::adhoc_churn:
            if (static_cast<int>(scalar_plants.size()) != sensors)
                throw ConfigError("one scalar plant per sensor required");
            for (const ScalarPlant& plant : scalar_plants) plant.validate();
            break;
        case ScenarioKind::estimation_vector:
        case ScenarioKind::estimation_kalman:
            if (static_cast<int>(linear_plants.size()) != sensors)
                throw ConfigError("one linear plant per sensor required");
            break;
        case ScenarioKind::coupled_pi:
            if (sensors < 3) throw ConfigError("coupled ring needs at least 3 subsystems");
            break;
    }
    if (kind == ScenarioKind::control_scalar && controllers.empty())
        throw ConfigError("control scenario needs at least one controller");
    for (const ControllerConfig& controller : controllers) {
        if (controller.kind == ControllerConfig::Kind::pulse && !(controller.width > 0.0))
            throw ConfigError("pulse width must be positive");
        if (controller.kind == ControllerConfig::Kind::exponential &&
            !(controller.theta > 0.0))
            throw ConfigError("exponential theta must be positive");
    }
    for (const StepDisturbance& d : disturbances)
        if (d.subsystem < 0 || d.subsystem >= sensors)
            throw ConfigError("disturbance subsystem out of range");
    if (periodic_baseline && kind != ScenarioKind::estimation_scalar &&
        kind != ScenarioKind::adhoc_churn)
        throw ConfigError(
            "periodic baseline is only defined for the scalar estimation scenarios");
}

ScenarioConfig builtin_scenario(const std::string& name) {
    ScenarioConfig config;
    config.name = name;

    const auto water_tank_chain = [&config] {
        config.sensors = 2;
        config.mu_sample = Vec::Constant(2, 1.0);
        config.mu_return = Vec::Constant(2, 10.0);
        config.xi = Vec(2);
        config.xi << 0.5, 0.1;
    };

    if (name == "estimation-scalar") {
        config.kind = ScenarioKind::estimation_scalar;
        water_tank_chain();
        config.scalar_plants = {{0.7, 1.0, 0.3}, {0.3, 1.0, 0.3}};
        config.periodic_baseline = true;
    } else if (name == "estimation-vector") {
        config.kind = ScenarioKind::estimation_vector;
        water_tank_chain();
        const Mat R = 0.09 * Mat::Identity(2, 2);
        config.linear_plants = {cascade_tank_plant(0.7, Mat::Identity(2, 2), R),
                                cascade_tank_plant(0.3, Mat::Identity(2, 2), R)};
    } else if (name == "estimation-kalman") {
        config.kind = ScenarioKind::estimation_kalman;
        water_tank_chain();
        Mat C(1, 2);
        C << 0.0, 1.0;
        const Mat R = 0.09 * Mat::Identity(1, 1);
        config.linear_plants = {cascade_tank_plant(0.7, C, R),
                                cascade_tank_plant(0.3, C, R)};
    } else if (name == "control-scalar") {
        config.kind = ScenarioKind::control_scalar;
        water_tank_chain();
        config.scalar_plants = {{0.7, 1.0, 0.3}, {0.3, 1.0, 0.3}};
        ControllerConfig impulsive;
        ControllerConfig exponential;
        exponential.kind = ControllerConfig::Kind::exponential;
        exponential.theta = 10.0;
        config.controllers = {impulsive, exponential};
    } else if (name == "adhoc-churn") {
        config.kind = ScenarioKind::adhoc_churn;
        config.sensors = 70;
        config.mu_sample = Vec::Constant(70, 10.0);
        config.mu_return = Vec::Constant(70, 50.0);
        config.xi = Vec::Constant(70, 0.1);
        config.scalar_plants.assign(70, ScalarPlant{0.3, 1.0, 0.3});
        config.horizon = 15.0;
        config.replicates = 200;
        const auto phase = [](double start, double end, int active_count) {
            PhaseConfig p;
            p.start = start;
            p.end = end;
            for (int s = 0; s < active_count; ++s) p.active.push_back(s);
            p.xi = Vec::Constant(active_count, 0.1);
            return p;
        };
        config.phases = {phase(0.0, 5.0, 30), phase(5.0, 10.0, 70),
                         phase(10.0, 15.0, 10)};
        config.periodic_baseline = true;
    } else if (name == "coupled-pi") {
        config.kind = ScenarioKind::coupled_pi;
        config.sensors = 70;
        config.mu_sample = Vec::Constant(70, 10.0);
        config.mu_return = Vec::Constant(70, 70.0);
        config.xi = Vec::Constant(70, 30.0);
        config.horizon = 30.0;
        config.grid_dt = 0.01;
        config.replicates = 1;
        const auto phase = [](double start, double end, int focus) {
            PhaseConfig p;
            p.start = start;
            p.end = end;
            p.xi = Vec::Constant(70, 30.0);
            for (int s = 0; s < 70; ++s) p.active.push_back(s);
            p.xi[focus] = 10.0;
            p.xi[focus - 1] = 20.0;
            p.xi[focus + 1] = 20.0;
            return p;
        };
        // Disturbed subsystems 4 and 26 in 1-based numbering.
        config.phases = {phase(0.0, 15.0, 3), phase(15.0, 30.0, 25)};
        config.disturbances = {{3, 1.0, 0.0}, {25, -0.4, 15.0}};
    } else {
        throw ConfigError("unknown scenario '" + name + "'");
    }
    config.validate();
    return config;
}

std::vector<std::string> builtin_scenario_names() {
    return {"estimation-scalar", "estimation-vector", "estimation-kalman",
            "adhoc-churn",       "control-scalar",    "coupled-pi"};
}

ScenarioConfig parse_scenario_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    expect_keys(root,
                {"scenario", "chain", "plants", "linear_plants", "controllers",
                 "phases", "ring", "disturbances", "horizon", "grid_dt",
                 "replicates", "seed", "warmup", "phase_warmup",
                 "periodic_baseline", "name"},
                "the top level");
    if (!root.contains("scenario"))
        throw ConfigError("config needs a 'scenario' kind");

    ScenarioConfig config;
    config.kind = kind_from_string(root["scenario"].get<std::string>());
    config.name = root.value("name", root["scenario"].get<std::string>());

    if (!root.contains("chain")) throw ConfigError("config needs a 'chain' section");
    const json& chain = root["chain"];
    expect_keys(chain, {"sensors", "mu_sample", "mu_return", "xi"}, "'chain'");
    config.sensors = chain.at("sensors").get<int>();
    if (config.sensors < 1) throw ConfigError("chain.sensors must be at least 1");
    config.mu_sample = parse_vec(chain.at("mu_sample"), config.sensors,
                                 "chain.mu_sample");
    config.mu_return = parse_vec(chain.at("mu_return"), config.sensors,
                                 "chain.mu_return");
    if (chain.contains("xi"))
        config.xi = parse_vec(chain["xi"], config.sensors, "chain.xi");
    else
        config.xi = Vec::Zero(config.sensors);

    if (root.contains("plants")) {
        for (const json& plant : root["plants"]) {
            expect_keys(plant, {"gamma", "sigma", "eta"}, "a plant entry");
            config.scalar_plants.push_back(ScalarPlant{
                plant.at("gamma").get<double>(), plant.value("sigma", 1.0),
                plant.value("eta", 0.0)});
        }
    }
    if (root.contains("linear_plants")) {
        for (const json& plant : root["linear_plants"]) {
            expect_keys(plant, {"A", "H", "C", "R"}, "a linear plant entry");
            const Mat A = parse_mat(plant.at("A"), "linear plant A");
            const Mat H = plant.contains("H")
                              ? parse_mat(plant["H"], "linear plant H")
                              : Mat(Mat::Identity(A.rows(), A.rows()));
            const Mat C = plant.contains("C")
                              ? parse_mat(plant["C"], "linear plant C")
                              : Mat(Mat::Identity(A.rows(), A.rows()));
            const Mat R = plant.contains("R")
                              ? parse_mat(plant["R"], "linear plant R")
                              : Mat(Mat::Zero(C.rows(), C.rows()));
            config.linear_plants.push_back(make_linear_plant(A, H, C, R));
        }
    }
    if (root.contains("controllers")) {
        for (const json& entry : root["controllers"]) {
            expect_keys(entry, {"kind", "width", "theta"}, "a controller entry");
            ControllerConfig controller;
            const std::string kind = entry.at("kind").get<std::string>();
            if (kind == "impulsive") {
                controller.kind = ControllerConfig::Kind::impulsive;
            } else if (kind == "pulse") {
                controller.kind = ControllerConfig::Kind::pulse;
                controller.width = entry.at("width").get<double>();
            } else if (kind == "exponential") {
                controller.kind = ControllerConfig::Kind::exponential;
                controller.theta = entry.at("theta").get<double>();
            } else {
                throw ConfigError("unknown controller kind '" + kind + "'");
            }
            config.controllers.push_back(controller);
        }
    }
    if (root.contains("phases")) {
        for (const json& entry : root["phases"]) {
            expect_keys(entry, {"start", "end", "active", "xi"}, "a phase entry");
            PhaseConfig phase;
            phase.start = entry.at("start").get<double>();
            phase.end = entry.at("end").get<double>();
            for (const json& sensor : entry.at("active"))
                phase.active.push_back(sensor.get<int>() - 1);  // 1-based in files
            phase.xi = parse_vec(entry.at("xi"),
                                 static_cast<int>(phase.active.size()), "phase xi");
            config.phases.push_back(std::move(phase));
        }
    }
    if (root.contains("ring")) {
        const json& ring = root["ring"];
        expect_keys(ring, {"coupling", "kp", "ki"}, "'ring'");
        config.ring_coupling = ring.value("coupling", 0.1);
        config.pi_kp = ring.value("kp", -1.2);
        config.pi_ki = ring.value("ki", -0.3);
    }
    if (root.contains("disturbances")) {
        for (const json& entry : root["disturbances"]) {
            expect_keys(entry, {"subsystem", "amplitude", "onset"},
                        "a disturbance entry");
            config.disturbances.push_back(
                StepDisturbance{entry.at("subsystem").get<int>() - 1,
                                entry.at("amplitude").get<double>(),
                                entry.value("onset", 0.0)});
        }
    }

    config.horizon = root.value("horizon", config.horizon);
    config.grid_dt = root.value("grid_dt", config.grid_dt);
    config.replicates = root.value("replicates", config.replicates);
    config.seed = root.value("seed", config.seed);
    config.warmup = root.value("warmup", config.warmup);
    config.phase_warmup = root.value("phase_warmup", config.phase_warmup);
    config.periodic_baseline =
        root.value("periodic_baseline", config.periodic_baseline);

    config.validate();
    return config;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_json(buffer.str());
}

ScenarioConfig resolve_scenario(const std::string& name_or_path) {
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end())
        return builtin_scenario(name_or_path);
    return load_scenario_file(name_or_path);
}

}  // namespace ctsched
