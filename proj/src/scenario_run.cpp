#include "ctsched/scenario_run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "ctsched/controllers.hpp"
#include "ctsched/csv.hpp"
#include "ctsched/errors.hpp"
#include "ctsched/estimators.hpp"

namespace ctsched {

namespace {

constexpr std::uint64_t kCalibrationStream = 1u << 30;
constexpr double kCalibrationHorizon = 1e4;

std::vector<double> make_grid(double horizon, double dt) {
    const int n = static_cast<int>(std::floor(horizon / dt * (1.0 + 1e-12))) + 1;
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = i * dt;
    return grid;
}

double vector_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double vector_stddev(const std::vector<double>& v) {
    const double m = vector_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

/// Empirical frequency and its renewal-theory standard error.
std::pair<double, double> frequency_estimate(const SamplingTrace& trace, int sensor) {
    const double f_hat = static_cast<double>(trace.events[sensor].size()) / trace.horizon;
    if (trace.events[sensor].size() < 3)
        return {f_hat, std::numeric_limits<double>::quiet_NaN()};
    const IntersampleStats stats = intersample_statistics(trace, sensor, 0.0, 0.0);
    const double se =
        vector_stddev(stats.gaps) * std::pow(f_hat, 1.5) / std::sqrt(trace.horizon);
    return {f_hat, se};
}

/// Exact scalar error walk: the plant advances with OU transitions, the
/// estimate decays from the last measurement, squared errors land on the
/// grid. Events at a grid time are applied first.
void scalar_error_curve(const ScalarPlant& plant, const std::vector<double>& events,
                        const std::vector<double>& grid, Rng& rng, double* out) {
    double t = 0.0;
    double z = 0.0;
    double y = 0.0;
    double t_sample = 0.0;
    bool have_sample = false;
    std::size_t ie = 0;

    const auto advance = [&](double target) {
        const double h = target - t;
        if (h > 0.0) z = exact_scalar_step(z, h, plant, rng.normal());
        t = target;
    };
    for (std::size_t ig = 0; ig < grid.size(); ++ig) {
        const double target = grid[ig];
        while (ie < events.size() && events[ie] <= target) {
            advance(events[ie]);
            y = z + plant.eta * rng.normal();
            t_sample = events[ie];
            have_sample = true;
            ++ie;
        }
        advance(target);
        const double zhat =
            have_sample ? std::exp(-plant.gamma * (t - t_sample)) * y : 0.0;
        out[ig] = (z - zhat) * (z - zhat);
    }
}

/// Reuses the uniform-grid discretization; anything else is computed on
/// the fly (event-adjacent partial steps).
class StepCache {
  public:
    StepCache(const LinearPlant& plant, double grid_dt)
        : plant_(plant), grid_step_(discretize_linear(plant, grid_dt)) {}

    const DiscretizedStep& at(double dt) {
        if (std::abs(dt - grid_step_.dt) <= 1e-12 * grid_step_.dt) return grid_step_;
        scratch_ = discretize_linear(plant_, dt);
        return scratch_;
    }

  private:
    const LinearPlant& plant_;
    DiscretizedStep grid_step_;
    DiscretizedStep scratch_;
};

/// Vector analogue with either the hold-reset predictor (full state
/// measurements) or the discrete Kalman filter between samples.
void vector_error_curve(const LinearPlant& plant, StepCache& cache,
                        const std::vector<double>& events,
                        const std::vector<double>& grid, Rng& rng, bool use_kalman,
                        double* out) {
    const int d = plant.dim();
    const int p = static_cast<int>(plant.C.rows());
    Vec z = Vec::Zero(d);
    Vec zhat = Vec::Zero(d);
    KalmanState filter;
    Mat f_acc = Mat::Identity(d, d);
    Mat q_acc = Mat::Zero(d, d);
    double gap_acc = 0.0;
    if (use_kalman) filter = kalman_init(plant);

    double t = 0.0;
    std::size_t ie = 0;
    Vec noise(d), vnoise(p);

    const auto advance = [&](double target) {
        const double h = target - t;
        if (h > 0.0) {
            const DiscretizedStep& step = cache.at(h);
            for (int i = 0; i < d; ++i) noise[i] = rng.normal();
            z = exact_vector_step(z, step, noise);
            zhat = step.F * zhat;
            if (use_kalman) {
                f_acc = step.F * f_acc;
                q_acc = step.F * q_acc * step.F.transpose() + step.Q;
                gap_acc += step.dt;
            }
        }
        t = target;
    };
    for (std::size_t ig = 0; ig < grid.size(); ++ig) {
        const double target = grid[ig];
        while (ie < events.size() && events[ie] <= target) {
            advance(events[ie]);
            for (int i = 0; i < p; ++i) vnoise[i] = rng.normal();
            const Vec y = measure(z, plant.C, plant.R, vnoise);
            if (use_kalman) {
                DiscretizedStep hop;
                hop.F = f_acc;
                hop.Q = q_acc;
                hop.dt = gap_acc;
                filter = kalman_step(filter, hop, plant.C, plant.R, y);
                zhat = filter.x_hat;
                f_acc = Mat::Identity(d, d);
                q_acc = Mat::Zero(d, d);
                gap_acc = 0.0;
            } else {
                zhat = y;  // full-state measurement resets the predictor
            }
            ++ie;
        }
        advance(target);
        out[ig] = (z - zhat).squaredNorm();
    }
}

struct ChainArtifacts {
    Vec f_empirical;
    Vec f_se;
};

SamplingTrace calibration_trace(const SolvedChain& chain, Rng rng) {
    return simulate_chain(chain.policy, chain.spec.idle_state(),
                          kCalibrationHorizon, rng);
}

/// gains/stationary/frequencies CSVs for one solved chain. The empirical
/// column comes from the calibration run.
ChainArtifacts write_chain_artifacts(const SolvedChain& chain,
                                     const std::filesystem::path& dir,
                                     const std::string& suffix,
                                     const SamplingTrace& calibration) {
    const int L = chain.spec.sensor_count;
    ChainArtifacts artifacts;
    artifacts.f_empirical = Vec::Zero(L);
    artifacts.f_se = Vec::Zero(L);

    {
        std::ofstream out(dir / ("gains" + suffix + ".csv"));
        CsvWriter csv(out);
        csv.row("counter", "state", "gain");
        for (int i = 0; i < chain.policy.counter_count(); ++i)
            for (int j = 0; j < chain.policy.state_count(); ++j)
                csv.row(i + 1, j + 1, chain.policy.gain(i, j));
    }
    {
        std::ofstream out(dir / ("stationary" + suffix + ".csv"));
        CsvWriter csv(out);
        csv.row("state", "probability");
        for (int j = 0; j < chain.policy.state_count(); ++j)
            csv.row(j + 1, chain.freq.p_stationary[j]);
    }
    {
        std::ofstream out(dir / ("frequencies" + suffix + ".csv"));
        CsvWriter csv(out);
        csv.row("sensor", "f_analytic", "f_empirical", "se");
        for (int s = 0; s < L; ++s) {
            const auto [f_hat, se] = frequency_estimate(calibration, s);
            artifacts.f_empirical[s] = f_hat;
            artifacts.f_se[s] = se;
            csv.row(s + 1, chain.freq.frequency[s], f_hat, se);
        }
    }
    return artifacts;
}

void write_error_curves(const std::filesystem::path& path,
                        const std::vector<double>& grid, const VariantResult& variant) {
    std::ofstream out(path);
    CsvWriter csv(out);
    csv.row("time", "sensor", "mean_sq", "ci_half", "bound");
    const std::size_t n_grid = grid.size();
    for (std::size_t ig = 0; ig < n_grid; ++ig)
        for (std::size_t s = 0; s < variant.sensors.size(); ++s) {
            const std::size_t at = s * n_grid + ig;
            csv.row(grid[ig], static_cast<int>(s) + 1, variant.summary.mean[at],
                    variant.summary.ci_half[at], variant.sensors[s].bound);
        }
}

/// Marks per-sensor bound violations: any grid point past the warm-up
/// where the Monte Carlo mean exceeds bound + 3 standard errors.
void check_bounds(VariantResult& variant, const std::vector<double>& grid,
                  const std::vector<double>& warmup, bool& all_ok) {
    const std::size_t n_grid = grid.size();
    for (std::size_t s = 0; s < variant.sensors.size(); ++s) {
        SensorOutcome& outcome = variant.sensors[s];
        outcome.worst_excess = -std::numeric_limits<double>::infinity();
        if (std::isnan(outcome.bound)) continue;
        for (std::size_t ig = 0; ig < n_grid; ++ig) {
            if (grid[ig] < warmup[s]) continue;
            const std::size_t at = s * n_grid + ig;
            const double se = std::sqrt(variant.summary.variance[at] /
                                        variant.summary.replicates);
            outcome.worst_excess = std::max(
                outcome.worst_excess,
                variant.summary.mean[at] - (outcome.bound + 3.0 * se));
        }
        outcome.bound_ok = outcome.worst_excess <= 0.0;
        all_ok = all_ok && outcome.bound_ok;
    }
}

nlohmann::json report_to_json(const BoundReport& report) {
    nlohmann::json doc;
    doc["scenario"] = report.scenario;
    doc["seed"] = report.seed;
    doc["replicates"] = report.replicates;
    doc["horizon"] = report.horizon;
    doc["grid_dt"] = report.grid_dt;
    doc["all_bounds_ok"] = report.all_bounds_ok;
    doc["variants"] = nlohmann::json::array();
    for (const VariantResult& variant : report.variants) {
        nlohmann::json v;
        v["label"] = variant.label;
        v["sensors"] = nlohmann::json::array();
        for (const SensorOutcome& s : variant.sensors) {
            nlohmann::json entry;
            entry["sensor"] = s.sensor + 1;
            entry["f_analytic"] = s.f_analytic;
            entry["f_empirical"] = s.f_empirical;
            entry["f_se"] = std::isnan(s.f_se) ? nlohmann::json() : nlohmann::json(s.f_se);
            entry["bound"] = std::isnan(s.bound) ? nlohmann::json() : nlohmann::json(s.bound);
            entry["regime"] = s.regime;
            entry["bound_ok"] = s.bound_ok;
            if (std::isfinite(s.worst_excess)) entry["worst_excess"] = s.worst_excess;
            v["sensors"].push_back(entry);
        }
        doc["variants"].push_back(v);
    }
    if (!report.phase_means.empty()) {
        doc["phase_means"] = nlohmann::json::array();
        for (const PhaseMeanRow& row : report.phase_means) {
            nlohmann::json entry;
            entry["phase"] = row.phase + 1;
            entry["sensor"] = row.sensor + 1;
            entry["start"] = row.start;
            entry["end"] = row.end;
            entry["mean_sq"] = row.mean_sq;
            doc["phase_means"].push_back(entry);
        }
    }
    return doc;
}

std::string regime_name(BoundRegime regime) {
    switch (regime) {
        case BoundRegime::low_noise: return "low-noise";
        case BoundRegime::high_noise: return "high-noise";
        case BoundRegime::matrix: return "matrix";
        case BoundRegime::kalman_conditional: return "kalman-conditional";
    }
    return "";
}

}  // namespace

SolvedChain solve_chain(const ChainSpec& spec) {
    SolvedChain chain;
    chain.spec = spec;
    chain.mats = build_matrices(spec);
    chain.policy = solve_stationary(chain.mats);
    const Mat closed = closed_loop_generator(chain.mats, chain.policy);
    const Vec p = stationary_distribution(closed);
    chain.freq = sampling_frequencies(spec, chain.mats, chain.policy, p);
    return chain;
}

SamplingTrace periodic_schedule(const Vec& frequency, double horizon,
                                const Vec& offsets) {
    if (offsets.size() != frequency.size())
        throw InvalidSpecError("one offset per sensor required");
    if (!(horizon > 0.0)) throw InvalidSpecError("horizon must be positive");
    SamplingTrace trace;
    trace.horizon = horizon;
    trace.events.resize(static_cast<std::size_t>(frequency.size()));
    for (Index s = 0; s < frequency.size(); ++s) {
        if (!(frequency[s] > 0.0))
            throw InvalidSpecError("periodic schedule needs positive frequencies");
        const double period = 1.0 / frequency[s];
        for (int k = 0;; ++k) {
            const double te = offsets[s] + k * period;
            if (te > horizon) break;
            trace.events[static_cast<std::size_t>(s)].push_back(te);
        }
    }
    return trace;
}

SamplingTrace simulate_phased_chain(const ScenarioConfig& config,
                                    const std::vector<SolvedChain>& phases, Rng rng) {
    SamplingTrace global;
    global.horizon = config.horizon;
    global.events.resize(static_cast<std::size_t>(config.sensors));
    global.state_path.emplace_back(0.0, config.sensors);  // global idle

    int global_state = config.sensors;  // idle
    for (std::size_t p = 0; p < phases.size(); ++p) {
        const PhaseConfig& phase = config.phases[p];
        const SolvedChain& chain = phases[p];
        const int local_idle = chain.spec.idle_state();

        // Carry occupancy across the switch: a sensor that stays active
        // keeps its state, everything else restarts idle.
        int local_state = local_idle;
        for (std::size_t s = 0; s < phase.active.size(); ++s)
            if (phase.active[s] == global_state) local_state = static_cast<int>(s);

        const SamplingTrace segment =
            simulate_chain(chain.policy, local_state, phase.end - phase.start,
                           rng.substream(p));
        for (std::size_t s = 0; s < phase.active.size(); ++s)
            for (double te : segment.events[s])
                global.events[static_cast<std::size_t>(phase.active[s])].push_back(
                    phase.start + te);
        for (std::size_t i = 1; i < segment.state_path.size(); ++i) {
            const int local = segment.state_path[i].second;
            const int mapped = local == local_idle
                                   ? config.sensors
                                   : phase.active[static_cast<std::size_t>(local)];
            global.state_path.emplace_back(phase.start + segment.state_path[i].first,
                                           mapped);
        }
        const int local_final = segment.state_path.back().second;
        global_state = local_final == local_idle
                           ? config.sensors
                           : phase.active[static_cast<std::size_t>(local_final)];
    }
    return global;
}

namespace {

using RunnerFn = std::function<Vec(int, Rng&)>;

VariantResult aggregate_variant(const std::string& label, const RunnerFn& runner,
                                const ScenarioConfig& config, int sensor_count) {
    VariantResult variant;
    variant.label = label;
    if (config.replicates == 1) {
        // Single realization: the curve itself, no interval.
        Rng rng = Rng(config.seed).substream(0);
        variant.summary.mean = runner(0, rng);
        variant.summary.variance = Vec::Zero(variant.summary.mean.size());
        variant.summary.ci_half = Vec::Zero(variant.summary.mean.size());
        variant.summary.replicates = 1;
    } else {
        variant.summary = monte_carlo(runner, config.replicates, config.seed);
    }
    variant.sensors.resize(static_cast<std::size_t>(sensor_count));
    for (int s = 0; s < sensor_count; ++s)
        variant.sensors[static_cast<std::size_t>(s)].sensor = s;
    return variant;
}

void fill_frequencies(VariantResult& variant, const SolvedChain& chain,
                      const ChainArtifacts& artifacts) {
    for (SensorOutcome& outcome : variant.sensors) {
        outcome.f_analytic = chain.freq.frequency[outcome.sensor];
        outcome.f_empirical = artifacts.f_empirical[outcome.sensor];
        outcome.f_se = artifacts.f_se[outcome.sensor];
    }
}

std::vector<double> warmup_times(const ScenarioConfig& config, const Vec& frequency) {
    std::vector<double> warmup(static_cast<std::size_t>(frequency.size()));
    for (Index s = 0; s < frequency.size(); ++s)
        warmup[static_cast<std::size_t>(s)] =
            config.warmup >= 0.0
                ? config.warmup
                : (frequency[s] > 0.0 ? 2.0 / frequency[s] : config.horizon);
    return warmup;
}

void run_estimation(const ScenarioConfig& config, BoundReport& report,
                    const std::filesystem::path& dir) {
    const SolvedChain chain = solve_chain(config.chain_spec());
    const SamplingTrace calibration =
        calibration_trace(chain, Rng(config.seed).substream(kCalibrationStream));
    const ChainArtifacts artifacts = write_chain_artifacts(chain, dir, "", calibration);
    const std::vector<double>& grid = report.grid;
    const int L = config.sensors;
    const bool scalar = config.kind == ScenarioKind::estimation_scalar;
    const bool use_kalman = config.kind == ScenarioKind::estimation_kalman;

    if (!scalar) {
        for (const LinearPlant& plant : config.linear_plants)
            if (!use_kalman && !plant.C.isIdentity(0.0))
                throw ConfigError(
                    "vector estimation assumes full state measurements (C = I)");
    }

    std::vector<StepCache> caches;
    if (!scalar)
        for (const LinearPlant& plant : config.linear_plants)
            caches.emplace_back(plant, config.grid_dt);

    const auto make_runner = [&](const SamplingTrace* fixed) {
        return [&, fixed](int, Rng& rng) -> Vec {
            SamplingTrace trace;
            const SamplingTrace* schedule = fixed;
            if (!fixed) {
                trace = simulate_chain(chain.policy, chain.spec.idle_state(),
                                       config.horizon, rng.substream(0));
                schedule = &trace;
            }
            Vec out(L * static_cast<int>(grid.size()));
            for (int s = 0; s < L; ++s) {
                Rng sensor_rng = rng.substream(1 + static_cast<std::uint64_t>(s));
                double* slice = out.data() + s * static_cast<Index>(grid.size());
                if (scalar)
                    scalar_error_curve(config.scalar_plants[s], schedule->events[s],
                                       grid, sensor_rng, slice);
                else
                    vector_error_curve(config.linear_plants[s], caches[s],
                                       schedule->events[s], grid, sensor_rng,
                                       use_kalman, slice);
            }
            return out;
        };
    };

    VariantResult optimal =
        aggregate_variant("optimal", make_runner(nullptr), config, L);
    fill_frequencies(optimal, chain, artifacts);
    for (int s = 0; s < L; ++s) {
        SensorOutcome& outcome = optimal.sensors[static_cast<std::size_t>(s)];
        if (scalar) {
            const ScalarPlant& plant = config.scalar_plants[s];
            const EstimationBound bound = bound_scalar_estimation(
                plant.gamma, plant.sigma, plant.eta, chain.freq.frequency[s]);
            outcome.bound = bound.value;
            outcome.regime = regime_name(bound.regime);
        } else if (!use_kalman) {
            const EstimationBound bound =
                bound_state_estimation(config.linear_plants[s], chain.freq.frequency[s]);
            outcome.bound = bound.value;
            outcome.regime = regime_name(bound.regime);
        } else {
            outcome.regime = regime_name(BoundRegime::kalman_conditional);
        }
    }
    check_bounds(optimal, grid, warmup_times(config, chain.freq.frequency),
                 report.all_bounds_ok);
    write_error_curves(dir / "error_curves.csv", grid, optimal);
    report.variants.push_back(std::move(optimal));

    if (config.periodic_baseline) {
        const SamplingTrace fixed = periodic_schedule(
            chain.freq.frequency, config.horizon, Vec::Zero(L));
        VariantResult periodic =
            aggregate_variant("periodic", make_runner(&fixed), config, L);
        for (int s = 0; s < L; ++s) {
            SensorOutcome& outcome = periodic.sensors[static_cast<std::size_t>(s)];
            outcome.f_analytic = chain.freq.frequency[s];
            outcome.f_empirical =
                static_cast<double>(fixed.events[s].size()) / config.horizon;
            outcome.f_se = 0.0;
            const ScalarPlant& plant = config.scalar_plants[s];
            const EstimationBound bound = bound_scalar_estimation(
                plant.gamma, plant.sigma, plant.eta, chain.freq.frequency[s]);
            outcome.bound = bound.value;
            outcome.regime = regime_name(bound.regime);
        }
        check_bounds(periodic, grid, warmup_times(config, chain.freq.frequency),
                     report.all_bounds_ok);
        write_error_curves(dir / "error_curves_periodic.csv", grid, periodic);
        report.variants.push_back(std::move(periodic));
    }
}

void run_control(const ScenarioConfig& config, BoundReport& report,
                 const std::filesystem::path& dir) {
    const SolvedChain chain = solve_chain(config.chain_spec());
    const SamplingTrace calibration =
        calibration_trace(chain, Rng(config.seed).substream(kCalibrationStream));
    const ChainArtifacts artifacts = write_chain_artifacts(chain, dir, "", calibration);
    const std::vector<double>& grid = report.grid;
    const int L = config.sensors;

    for (const ControllerConfig& controller : config.controllers) {
        const auto runner = [&](int, Rng& rng) -> Vec {
            const SamplingTrace trace =
                simulate_chain(chain.policy, chain.spec.idle_state(), config.horizon,
                               rng.substream(0));
            Vec out(L * static_cast<int>(grid.size()));
            for (int s = 0; s < L; ++s) {
                const ScalarPlant& plant = config.scalar_plants[s];
                Rng sensor_rng = rng.substream(1 + static_cast<std::uint64_t>(s));
                ClosedLoopTrajectory traj;
                switch (controller.kind) {
                    case ControllerConfig::Kind::impulsive:
                        traj = simulate_impulsive(plant, trace.events[s],
                                                  config.horizon, config.grid_dt,
                                                  sensor_rng);
                        break;
                    case ControllerConfig::Kind::pulse:
                        traj = simulate_pulse(plant, trace.events[s], controller.width,
                                              config.horizon, config.grid_dt,
                                              sensor_rng);
                        break;
                    case ControllerConfig::Kind::exponential:
                        traj = simulate_exponential(plant, trace.events[s],
                                                    controller.theta, config.horizon,
                                                    config.grid_dt, sensor_rng);
                        break;
                }
                if (traj.grid_state.size() != grid.size())
                    throw Error("closed-loop grid mismatch");
                for (std::size_t ig = 0; ig < grid.size(); ++ig)
                    out[s * static_cast<Index>(grid.size()) +
                        static_cast<Index>(ig)] =
                        traj.grid_state[ig] * traj.grid_state[ig];
            }
            return out;
        };

        VariantResult variant =
            aggregate_variant(controller.label(), runner, config, L);
        fill_frequencies(variant, chain, artifacts);
        for (int s = 0; s < L; ++s) {
            SensorOutcome& outcome = variant.sensors[static_cast<std::size_t>(s)];
            const ScalarPlant& plant = config.scalar_plants[s];
            const double f = chain.freq.frequency[s];
            switch (controller.kind) {
                case ControllerConfig::Kind::impulsive: {
                    const EstimationBound bound =
                        bound_impulsive(plant.gamma, plant.sigma, plant.eta, f);
                    outcome.bound = bound.value;
                    outcome.regime = regime_name(bound.regime);
                    break;
                }
                case ControllerConfig::Kind::pulse: {
                    const IntersampleStats stats = intersample_statistics(
                        calibration, s, controller.width, 1.0);
                    outcome.bound =
                        bound_pulse(plant.gamma, plant.sigma, plant.eta, f,
                                    controller.width, stats.p_below);
                    outcome.regime = "pulse";
                    break;
                }
                case ControllerConfig::Kind::exponential: {
                    const IntersampleStats stats = intersample_statistics(
                        calibration, s, 0.0, controller.theta);
                    outcome.bound =
                        bound_exponential(plant.gamma, plant.sigma, plant.eta, f,
                                          stats.exp_moment);
                    outcome.regime = "exponential";
                    break;
                }
            }
        }
        check_bounds(variant, grid, warmup_times(config, chain.freq.frequency),
                     report.all_bounds_ok);
        write_error_curves(dir / ("error_curves_" + controller.label() + ".csv"),
                           grid, variant);
        report.variants.push_back(std::move(variant));
    }
}

void run_churn(const ScenarioConfig& config, BoundReport& report,
               const std::filesystem::path& dir) {
    std::vector<SolvedChain> phases;
    for (std::size_t p = 0; p < config.phases.size(); ++p) {
        phases.push_back(solve_chain(config.phase_chain_spec(config.phases[p])));
        const SamplingTrace calibration = calibration_trace(
            phases.back(), Rng(config.seed).substream(kCalibrationStream + 1 + p));
        write_chain_artifacts(phases.back(), dir, "_phase" + std::to_string(p + 1),
                              calibration);
    }
    const std::vector<double>& grid = report.grid;
    const int L = config.sensors;

    const auto runner = [&](int, Rng& rng) -> Vec {
        const SamplingTrace trace =
            simulate_phased_chain(config, phases, rng.substream(0));
        Vec out(L * static_cast<int>(grid.size()));
        for (int s = 0; s < L; ++s) {
            Rng sensor_rng = rng.substream(1 + static_cast<std::uint64_t>(s));
            scalar_error_curve(config.scalar_plants[s], trace.events[s], grid,
                               sensor_rng, out.data() + s * static_cast<Index>(grid.size()));
        }
        return out;
    };

    VariantResult variant = aggregate_variant("optimal", runner, config, L);
    // Frequencies differ per phase (see the per-phase CSVs); the per-run
    // outcome carries curves and phase means only.
    for (SensorOutcome& outcome : variant.sensors) {
        outcome.f_analytic = std::numeric_limits<double>::quiet_NaN();
        outcome.f_empirical = std::numeric_limits<double>::quiet_NaN();
        outcome.f_se = std::numeric_limits<double>::quiet_NaN();
    }
    write_error_curves(dir / "error_curves.csv", grid, variant);

    if (config.periodic_baseline) {
        // Fixed-rate reference provisioned for the worst case: every
        // sensor scheduled at the frequency it gets when the whole
        // network is active.
        ChainSpec full = config.chain_spec();
        const SolvedChain worst = solve_chain(full);
        const SamplingTrace fixed =
            periodic_schedule(worst.freq.frequency, config.horizon, Vec::Zero(L));
        const auto periodic_runner = [&](int, Rng& rng) -> Vec {
            Vec out(L * static_cast<int>(grid.size()));
            for (int s = 0; s < L; ++s) {
                Rng sensor_rng = rng.substream(1 + static_cast<std::uint64_t>(s));
                scalar_error_curve(config.scalar_plants[s], fixed.events[s], grid,
                                   sensor_rng,
                                   out.data() + s * static_cast<Index>(grid.size()));
            }
            return out;
        };
        VariantResult periodic =
            aggregate_variant("periodic", periodic_runner, config, L);
        for (SensorOutcome& outcome : periodic.sensors) {
            outcome.f_analytic = worst.freq.frequency[outcome.sensor];
            outcome.f_empirical =
                static_cast<double>(fixed.events[outcome.sensor].size()) /
                config.horizon;
            outcome.f_se = 0.0;
        }
        write_error_curves(dir / "error_curves_periodic.csv", grid, periodic);
        report.variants.push_back(std::move(periodic));
    }

    {
        std::ofstream out(dir / "phase_means.csv");
        CsvWriter csv(out);
        csv.row("phase", "sensor", "start", "end", "mean_sq");
        for (std::size_t p = 0; p < config.phases.size(); ++p) {
            const PhaseConfig& phase = config.phases[p];
            for (int s = 0; s < L; ++s) {
                double acc = 0.0;
                int count = 0;
                for (std::size_t ig = 0; ig < grid.size(); ++ig) {
                    if (grid[ig] < phase.start + config.phase_warmup ||
                        grid[ig] >= phase.end)
                        continue;
                    acc += variant.summary.mean[s * static_cast<Index>(grid.size()) +
                                                static_cast<Index>(ig)];
                    ++count;
                }
                PhaseMeanRow row;
                row.phase = static_cast<int>(p);
                row.sensor = s;
                row.start = phase.start;
                row.end = phase.end;
                row.mean_sq = count > 0 ? acc / count : 0.0;
                report.phase_means.push_back(row);
                csv.row(static_cast<int>(p) + 1, s + 1, phase.start, phase.end,
                        row.mean_sq);
            }
        }
    }
    report.variants.push_back(std::move(variant));
}

void run_coupled_pi(const ScenarioConfig& config, BoundReport& report,
                    const std::filesystem::path& dir) {
    std::vector<SolvedChain> phases;
    for (std::size_t p = 0; p < config.phases.size(); ++p) {
        phases.push_back(solve_chain(config.phase_chain_spec(config.phases[p])));
        const SamplingTrace calibration = calibration_trace(
            phases.back(), Rng(config.seed).substream(kCalibrationStream + 1 + p));
        write_chain_artifacts(phases.back(), dir, "_phase" + std::to_string(p + 1),
                              calibration);
    }
    const RingNetwork ring{config.sensors, config.ring_coupling};

    // Representative realization, always written.
    {
        const SamplingTrace schedule = simulate_phased_chain(
            config, phases, Rng(config.seed).substream(0).substream(0));
        const PiTrajectories traj =
            simulate_coupled_pi(ring, schedule, config.disturbances, config.pi_kp,
                                config.pi_ki, config.horizon, config.grid_dt);
        std::ofstream out(dir / "trajectories.csv");
        CsvWriter csv(out);
        csv.row("time", "subsystem", "state", "control");
        for (std::size_t ig = 0; ig < traj.grid_time.size(); ++ig)
            for (int l = 0; l < config.sensors; ++l)
                csv.row(traj.grid_time[ig], l + 1,
                        traj.states(l, static_cast<Index>(ig)),
                        traj.controls(l, static_cast<Index>(ig)));
    }

    if (config.replicates >= 2) {
        const std::vector<double>& grid = report.grid;
        const auto runner = [&](int, Rng& rng) -> Vec {
            const SamplingTrace schedule =
                simulate_phased_chain(config, phases, rng.substream(0));
            const PiTrajectories traj =
                simulate_coupled_pi(ring, schedule, config.disturbances, config.pi_kp,
                                    config.pi_ki, config.horizon, config.grid_dt);
            Vec out(config.sensors * static_cast<int>(grid.size()));
            for (int l = 0; l < config.sensors; ++l)
                for (std::size_t ig = 0; ig < grid.size(); ++ig)
                    out[l * static_cast<Index>(grid.size()) + static_cast<Index>(ig)] =
                        traj.states(l, static_cast<Index>(ig)) *
                        traj.states(l, static_cast<Index>(ig));
            return out;
        };
        VariantResult variant =
            aggregate_variant("mean-square", runner, config, config.sensors);
        write_error_curves(dir / "error_curves.csv", grid, variant);
        report.variants.push_back(std::move(variant));
    }
}

}  // namespace

void write_trace_csv(std::ostream& out, const SamplingTrace& trace) {
    CsvWriter csv(out);
    csv.row("sensor", "index", "time");
    for (int s = 0; s < trace.sensor_count(); ++s)
        for (std::size_t i = 0; i < trace.events[s].size(); ++i)
            csv.row(s + 1, static_cast<int>(i), trace.events[s][i]);
}

BoundReport run_scenario(const ScenarioConfig& config, const std::string& out_dir) {
    config.validate();
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    BoundReport report;
    report.scenario = config.name;
    report.seed = config.seed;
    report.replicates = config.replicates;
    report.horizon = config.horizon;
    report.grid_dt = config.grid_dt;
    report.grid = make_grid(config.horizon, config.grid_dt);

    switch (config.kind) {
        case ScenarioKind::estimation_scalar:
        case ScenarioKind::estimation_vector:
        case ScenarioKind::estimation_kalman:
            run_estimation(config, report, dir);
            break;
        case ScenarioKind::control_scalar:
            run_control(config, report, dir);
            break;
        case ScenarioKind::adhoc_churn:
            run_churn(config, report, dir);
            break;
        case ScenarioKind::coupled_pi:
            run_coupled_pi(config, report, dir);
            break;
    }

    std::ofstream out(dir / "report.json");
    out << report_to_json(report).dump(2) << '\n';
    return report;
}

}  // namespace ctsched
