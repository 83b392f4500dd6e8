#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ctsched/chain_analysis.hpp"
#include "ctsched/chain_sim.hpp"
#include "ctsched/controllers.hpp"
#include "ctsched/csv.hpp"
#include "ctsched/errors.hpp"
#include "ctsched/estimators.hpp"
#include "ctsched/scenario_config.hpp"
#include "ctsched/scenario_run.hpp"

namespace {

using namespace ctsched;

struct CommonArgs {
    std::string scenario;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int replicates = 0;
    double horizon = 0.0;
    double grid_dt = 0.0;
    bool seed_set = false, replicates_set = false, horizon_set = false,
         grid_dt_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("scenario", args.scenario,
                    "built-in scenario name or JSON config path")
        ->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "master random seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--replicates", args.replicates, "Monte Carlo replicates")
        ->each([&](const std::string&) { args.replicates_set = true; });
    cmd->add_option("--horizon", args.horizon, "simulation horizon")
        ->each([&](const std::string&) { args.horizon_set = true; });
    cmd->add_option("--grid-dt", args.grid_dt, "reporting grid step")
        ->each([&](const std::string&) { args.grid_dt_set = true; });
}

ScenarioConfig make_config(const CommonArgs& args) {
    ScenarioConfig config = resolve_scenario(args.scenario);
    if (args.seed_set) config.seed = args.seed;
    if (args.replicates_set) config.replicates = args.replicates;
    if (args.horizon_set) {
        // Phases must keep covering the horizon; only unphased scenarios
        // can be stretched from the command line.
        if (!config.phases.empty())
            throw ConfigError("--horizon cannot override a phased scenario");
        config.horizon = args.horizon;
    }
    if (args.grid_dt_set) config.grid_dt = args.grid_dt;
    config.validate();
    return config;
}

std::filesystem::path ensure_out_dir(const CommonArgs& args) {
    std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

int cmd_solve(const CommonArgs& args) {
    const ScenarioConfig config = make_config(args);
    const auto dir = ensure_out_dir(args);
    const SolvedChain chain = solve_chain(config.phases.empty()
                                              ? config.chain_spec()
                                              : config.phase_chain_spec(config.phases[0]));
    {
        std::ofstream out(dir / "gains.csv");
        CsvWriter csv(out);
        csv.row("counter", "state", "gain");
        for (int i = 0; i < chain.policy.counter_count(); ++i)
            for (int j = 0; j < chain.policy.state_count(); ++j)
                csv.row(i + 1, j + 1, chain.policy.gain(i, j));
    }
    std::cout << "cost rate " << csv_number(chain.policy.rho) << ", residual "
              << csv_number(chain.policy.residual) << ", "
              << chain.policy.iterations << " Newton iterations\n"
              << "gains written to " << (dir / "gains.csv").string() << '\n';
    return 0;
}

int cmd_analyze(const CommonArgs& args) {
    const ScenarioConfig config = make_config(args);
    const auto dir = ensure_out_dir(args);
    const SolvedChain chain = solve_chain(config.phases.empty()
                                              ? config.chain_spec()
                                              : config.phase_chain_spec(config.phases[0]));
    const double horizon = args.horizon_set ? args.horizon : 1e4;
    const SamplingTrace trace = simulate_chain(
        chain.policy, chain.spec.idle_state(), horizon, Rng(config.seed));
    {
        std::ofstream out(dir / "stationary.csv");
        CsvWriter csv(out);
        csv.row("state", "probability");
        for (int j = 0; j < chain.policy.state_count(); ++j)
            csv.row(j + 1, chain.freq.p_stationary[j]);
    }
    {
        std::ofstream out(dir / "frequencies.csv");
        CsvWriter csv(out);
        csv.row("sensor", "f_analytic", "f_empirical", "se");
        for (int s = 0; s < chain.spec.sensor_count; ++s) {
            const double count = static_cast<double>(trace.events[s].size());
            const double f_hat = count / horizon;
            double se = std::numeric_limits<double>::quiet_NaN();
            if (trace.events[s].size() >= 3) {
                const IntersampleStats stats =
                    intersample_statistics(trace, s, 0.0, 0.0);
                double m = 0.0;
                for (double g : stats.gaps) m += g;
                m /= static_cast<double>(stats.gaps.size());
                double var = 0.0;
                for (double g : stats.gaps) var += (g - m) * (g - m);
                var /= static_cast<double>(stats.gaps.size() - 1);
                se = std::sqrt(var) * std::pow(f_hat, 1.5) / std::sqrt(horizon);
            }
            csv.row(s + 1, chain.freq.frequency[s], f_hat, se);
        }
    }
    std::cout << "frequencies and stationary distribution written to "
              << dir.string() << '\n';
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    const ScenarioConfig config = make_config(args);
    const auto dir = ensure_out_dir(args);
    SamplingTrace trace;
    if (config.phases.empty()) {
        const SolvedChain chain = solve_chain(config.chain_spec());
        trace = simulate_chain(chain.policy, chain.spec.idle_state(),
                               config.horizon, Rng(config.seed));
    } else {
        std::vector<SolvedChain> phases;
        for (const PhaseConfig& phase : config.phases)
            phases.push_back(solve_chain(config.phase_chain_spec(phase)));
        trace = simulate_phased_chain(config, phases, Rng(config.seed));
    }
    std::ofstream out(dir / "trace.csv");
    write_trace_csv(out, trace);
    std::cout << "trace written to " << (dir / "trace.csv").string() << '\n';
    return 0;
}

int cmd_bounds(const CommonArgs& args) {
    const ScenarioConfig config = make_config(args);
    const auto dir = ensure_out_dir(args);
    const SolvedChain chain = solve_chain(config.phases.empty()
                                              ? config.chain_spec()
                                              : config.phase_chain_spec(config.phases[0]));

    std::ofstream out(dir / "bounds.csv");
    CsvWriter csv(out);
    csv.row("sensor", "kind", "value");
    for (int s = 0; s < chain.spec.sensor_count; ++s) {
        const double f = chain.freq.frequency[s];
        if (s < static_cast<int>(config.scalar_plants.size())) {
            const ScalarPlant& plant = config.scalar_plants[s];
            csv.row(s + 1, "estimation",
                    bound_scalar_estimation(plant.gamma, plant.sigma, plant.eta, f)
                        .value);
            for (const ControllerConfig& controller : config.controllers) {
                if (controller.kind == ControllerConfig::Kind::impulsive)
                    csv.row(s + 1, "impulsive",
                            bound_impulsive(plant.gamma, plant.sigma, plant.eta, f)
                                .value);
                else if (controller.kind == ControllerConfig::Kind::pulse) {
                    const SamplingTrace trace =
                        simulate_chain(chain.policy, chain.spec.idle_state(), 1e4,
                                       Rng(config.seed));
                    const IntersampleStats stats =
                        intersample_statistics(trace, s, controller.width, 1.0);
                    csv.row(s + 1, "pulse",
                            bound_pulse(plant.gamma, plant.sigma, plant.eta, f,
                                        controller.width, stats.p_below));
                } else {
                    const SamplingTrace trace =
                        simulate_chain(chain.policy, chain.spec.idle_state(), 1e4,
                                       Rng(config.seed));
                    const IntersampleStats stats =
                        intersample_statistics(trace, s, 0.0, controller.theta);
                    csv.row(s + 1, "exponential",
                            bound_exponential(plant.gamma, plant.sigma, plant.eta, f,
                                              stats.exp_moment));
                }
            }
        }
        if (s < static_cast<int>(config.linear_plants.size())) {
            const LinearPlant& plant = config.linear_plants[s];
            if (plant.C.isIdentity(0.0))
                csv.row(s + 1, "state-estimation",
                        bound_state_estimation(plant, f).value);
        }
    }
    std::cout << "bounds written to " << (dir / "bounds.csv").string() << '\n';
    return 0;
}

int cmd_scenario(const CommonArgs& args) {
    const ScenarioConfig config = make_config(args);
    const BoundReport report = run_scenario(config, args.out_dir);
    for (const VariantResult& variant : report.variants)
        for (const SensorOutcome& outcome : variant.sensors) {
            std::cout << variant.label << " sensor " << outcome.sensor + 1;
            if (!std::isnan(outcome.bound))
                std::cout << ": bound " << csv_number(outcome.bound) << " "
                          << (outcome.bound_ok ? "satisfied" : "VIOLATED");
            std::cout << '\n';
        }
    std::cout << "report written to "
              << (std::filesystem::path(args.out_dir) / "report.json").string()
              << '\n';
    return report.all_bounds_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic sensor scheduling over controlled Markov chains"};
    app.require_subcommand(1);

    CommonArgs solve_args, analyze_args, simulate_args, bounds_args, scenario_args;
    add_common(app.add_subcommand("solve", "solve the rate-control policy"),
               solve_args);
    add_common(app.add_subcommand(
                   "analyze", "stationary distribution and sampling frequencies"),
               analyze_args);
    add_common(app.add_subcommand("simulate", "draw one sampling trace"),
               simulate_args);
    add_common(app.add_subcommand("bounds", "analytic performance bounds"),
               bounds_args);
    add_common(app.add_subcommand("scenario", "full Monte Carlo scenario run"),
               scenario_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("solve")) return cmd_solve(solve_args);
        if (app.got_subcommand("analyze")) return cmd_analyze(analyze_args);
        if (app.got_subcommand("simulate")) return cmd_simulate(simulate_args);
        if (app.got_subcommand("bounds")) return cmd_bounds(bounds_args);
        if (app.got_subcommand("scenario")) return cmd_scenario(scenario_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
