#include "ctsched/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ctsched/errors.hpp"

namespace ctsched {

namespace {

enum class Law { impulsive, pulse, exponential };

int grid_size(double horizon, double grid_dt) {
    return static_cast<int>(std::floor(horizon / grid_dt * (1.0 + 1e-12))) + 1;
}

/// Deterministic state response over [offset, offset + h] after a sample
/// with measurement y, starting from state z at the segment start.
double deterministic_response(Law law, const ScalarPlant& plant, double z, double y,
                              double offset, double h, double width, double theta,
                              double gap) {
    const double decay = std::exp(-plant.gamma * h);
    switch (law) {
        case Law::impulsive:
            return decay * z;
        case Law::pulse: {
            const bool active = offset < width || gap < width;
            if (!active) return decay * z;
            const double amplitude = pulse_control(y, offset, gap, plant.gamma, width);
            return decay * z + amplitude * -std::expm1(-plant.gamma * h) / plant.gamma;
        }
        case Law::exponential:
            return decay * z + y * (std::exp(-theta * (offset + h)) -
                                    decay * std::exp(-theta * offset));
    }
    return decay * z;
}

double control_value(Law law, const ScalarPlant& plant, double y, double offset,
                     double width, double theta, double gap) {
    switch (law) {
        case Law::impulsive:
            return 0.0;
        case Law::pulse:
            return pulse_control(y, offset, gap, plant.gamma, width);
        case Law::exponential:
            return exponential_control(y, offset, plant.gamma, theta);
    }
    return 0.0;
}

ClosedLoopTrajectory simulate_scalar_loop(Law law, const ScalarPlant& plant,
                                          const std::vector<double>& events,
                                          double width, double theta, double horizon,
                                          double grid_dt, Rng& rng) {
    plant.validate();
    if (!(horizon > 0.0) || !(grid_dt > 0.0))
        throw InvalidSpecError("horizon and grid step must be positive");
    if (events.empty()) throw InvalidSpecError("need at least one sample event");

    ClosedLoopTrajectory out;
    const int n_grid = grid_size(horizon, grid_dt);
    out.grid_time.reserve(n_grid);
    out.grid_state.reserve(n_grid);
    out.grid_control.reserve(n_grid);

    double t = 0.0;
    double z = 0.0;
    double y = 0.0;          // last measurement
    double t_sample = -1.0;  // time of last sample, none yet
    double gap = std::numeric_limits<double>::infinity();
    std::size_t next_event = 0;
    int next_grid = 0;

    const auto record_grid = [&](double gt) {
        out.grid_time.push_back(gt);
        out.grid_state.push_back(z);
        out.grid_control.push_back(
            t_sample < 0.0 ? 0.0
                           : control_value(law, plant, y, gt - t_sample, width, theta, gap));
    };

    while (t < horizon || next_grid < n_grid) {
        // Next breakpoint: event, grid point, pulse end or horizon.
        double t_next = horizon;
        enum { none, event, grid } what = none;
        if (next_grid < n_grid) {
            t_next = next_grid * grid_dt;
            what = grid;
        }
        if (next_event < events.size() && events[next_event] <= horizon &&
            events[next_event] <= t_next) {
            if (what == none || events[next_event] < t_next) what = event;
            // Equal times: the sample is applied first, then the grid point
            // records the post-jump state.
            t_next = std::min(t_next, events[next_event]);
            if (events[next_event] == t_next) what = event;
        }
        if (law == Law::pulse && t_sample >= 0.0) {
            const double pulse_end = t_sample + width;
            if (pulse_end > t && pulse_end < t_next) {
                t_next = pulse_end;
                what = none;
            }
        }

        const double h = t_next - t;
        if (h > 0.0) {
            const double offset = t_sample < 0.0 ? 0.0 : t - t_sample;
            const double noise = rng.normal();
            const double mean =
                t_sample < 0.0
                    ? std::exp(-plant.gamma * h) * z
                    : deterministic_response(law, plant, z, y, offset, h, width,
                                             theta, gap);
            z = mean + std::sqrt(scalar_step_variance(plant, h)) * noise;
            t = t_next;
        }

        if (what == event) {
            const double measurement_noise = plant.eta * rng.normal();
            y = z + measurement_noise;
            t_sample = t;
            gap = next_event + 1 < events.size()
                      ? events[next_event + 1] - events[next_event]
                      : std::numeric_limits<double>::infinity();
            ++next_event;
            double applied = 0.0;
            if (law == Law::impulsive) {
                const double z_pre = z;
                z = -measurement_noise;
                applied = z - z_pre;  // injected increment
            } else {
                applied = control_value(law, plant, y, 0.0, width, theta, gap);
            }
            out.event_time.push_back(t);
            out.event_state.push_back(z);
            out.event_control.push_back(applied);
            // A grid point at exactly this time records the post-jump state.
            if (next_grid < n_grid && next_grid * grid_dt == t) {
                record_grid(t);
                ++next_grid;
            }
        } else if (what == grid) {
            record_grid(t);
            ++next_grid;
        }
        if (next_grid >= n_grid &&
            (next_event >= events.size() || events[next_event] > horizon) &&
            t >= horizon)
            break;
    }
    return out;
}

}  // namespace

ClosedLoopTrajectory simulate_impulsive(const ScalarPlant& plant,
                                        const std::vector<double>& events,
                                        double horizon, double grid_dt, Rng rng) {
    return simulate_scalar_loop(Law::impulsive, plant, events, 0.0, 0.0, horizon,
                                grid_dt, rng);
}

ClosedLoopTrajectory simulate_pulse(const ScalarPlant& plant,
                                    const std::vector<double>& events, double width,
                                    double horizon, double grid_dt, Rng rng) {
    if (!(width > 0.0)) throw InvalidSpecError("pulse width must be positive");
    return simulate_scalar_loop(Law::pulse, plant, events, width, 0.0, horizon,
                                grid_dt, rng);
}

ClosedLoopTrajectory simulate_exponential(const ScalarPlant& plant,
                                          const std::vector<double>& events,
                                          double theta, double horizon,
                                          double grid_dt, Rng rng) {
    if (!(theta > 0.0) || theta == plant.gamma)
        throw InvalidSpecError("exponential law needs theta > 0, theta != gamma");
    return simulate_scalar_loop(Law::exponential, plant, events, 0.0, theta, horizon,
                                grid_dt, rng);
}

double pulse_control(double y, double t_since, double gap, double gamma, double width) {
    if (!(width > 0.0)) throw InvalidSpecError("pulse width must be positive");
    const bool active = gap < width ? t_since <= gap : t_since <= width;
    if (!active) return 0.0;
    return -y * gamma * std::exp(-gamma * width) / -std::expm1(-gamma * width);
}

double exponential_control(double y, double t_since, double gamma, double theta) {
    if (!(theta > 0.0) || theta == gamma)
        throw InvalidSpecError("exponential law needs theta > 0, theta != gamma");
    return (gamma - theta) * y * std::exp(-theta * t_since);
}

EstimationBound bound_impulsive(double gamma, double sigma, double eta,
                                double frequency) {
    // Same closed form as the estimation-error bound.
    return bound_scalar_estimation(gamma, sigma, eta, frequency);
}

double bound_pulse(double gamma, double sigma, double eta, double frequency,
                   double width, double p_below) {
    if (!(gamma > 0.0)) throw InvalidSpecError("decay rate must be positive");
    if (!(frequency > 0.0)) throw InvalidSpecError("frequency must be positive");
    if (!(width > 0.0)) throw InvalidSpecError("pulse width must be positive");
    if (p_below >= 1.0)
        throw BoundDivergesError("every gap shorter than the pulse width");
    const double drift =
        sigma * sigma / (2.0 * gamma) * -std::expm1(-2.0 * gamma / frequency);
    return (drift + eta * eta * std::exp(-2.0 * gamma * width)) / (1.0 - p_below);
}

double bound_exponential(double gamma, double sigma, double eta, double frequency,
                         double exp_moment) {
    if (!(gamma > 0.0)) throw InvalidSpecError("decay rate must be positive");
    if (!(frequency > 0.0)) throw InvalidSpecError("frequency must be positive");
    if (exp_moment >= 1.0)
        throw BoundDivergesError("exponential gap moment at or above one");
    const double drift =
        sigma * sigma / (2.0 * gamma) * -std::expm1(-2.0 * gamma / frequency);
    return (eta * eta + drift) / (1.0 - exp_moment);
}

PiTrajectories simulate_coupled_pi(const RingNetwork& network,
                                   const SamplingTrace& schedule,
                                   const std::vector<StepDisturbance>& disturbances,
                                   double kp, double ki, double horizon,
                                   double grid_dt) {
    const int L = network.size;
    if (L < 3) throw InvalidSpecError("ring needs at least three subsystems");
    if (schedule.sensor_count() != L)
        throw InvalidSpecError("schedule sensor count must match the ring");
    if (!(horizon > 0.0) || !(grid_dt > 0.0))
        throw InvalidSpecError("horizon and grid step must be positive");
    for (const StepDisturbance& d : disturbances)
        if (d.subsystem < 0 || d.subsystem >= L)
            throw InvalidSpecError("disturbance subsystem out of range");

    // Breakpoints: grid points, schedule events (tagged with their
    // subsystem), disturbance onsets and the horizon. Each consecutive
    // pair is one RK4 step of length at most grid_dt.
    struct Tag {
        std::vector<int> sensors;
        bool grid = false;
    };
    std::map<double, Tag> breaks;
    const int n_grid = grid_size(horizon, grid_dt);
    for (int k = 0; k < n_grid; ++k) breaks[k * grid_dt].grid = true;
    for (int s = 0; s < L; ++s)
        for (double te : schedule.events[s])
            if (te <= horizon) breaks[te].sensors.push_back(s);
    for (const StepDisturbance& d : disturbances)
        if (d.onset > 0.0 && d.onset <= horizon) breaks[d.onset];
    breaks[horizon];

    PiTrajectories out;
    out.grid_time.resize(n_grid);
    out.states = Mat::Zero(L, n_grid);
    out.controls = Mat::Zero(L, n_grid);

    Vec z = Vec::Zero(L);
    Vec held = Vec::Zero(L);      // latest sampled state, zero before the first sample
    Vec integral = Vec::Zero(L);  // exact accumulation of the held signal
    double t = 0.0;
    int next_grid = 0;

    const auto disturbance_at = [&](double at) {
        Vec w = Vec::Zero(L);
        for (const StepDisturbance& d : disturbances)
            if (at >= d.onset) w[d.subsystem] += d.amplitude;
        return w;
    };
    const auto ring_drift = [&](const Vec& state) {
        Vec drift(L);
        for (int l = 0; l < L; ++l) {
            const double left = state[(l + L - 1) % L];
            const double right = state[(l + 1) % L];
            drift[l] = network.coupling * (left - state[l]) +
                       network.coupling * (right - state[l]);
        }
        return drift;
    };

    for (const auto& [tb, tag] : breaks) {
        const double h = tb - t;
        if (h > 0.0) {
            const Vec w = disturbance_at(t);  // constant over the step
            const auto rhs = [&](double offset, const Vec& state) -> Vec {
                return ring_drift(state) + kp * held +
                       ki * (integral + held * offset) + w;
            };
            const Vec f1 = rhs(0.0, z);
            const Vec f2 = rhs(0.5 * h, z + 0.5 * h * f1);
            const Vec f3 = rhs(0.5 * h, z + 0.5 * h * f2);
            const Vec f4 = rhs(h, z + h * f3);
            z += (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
            integral += held * h;
            t = tb;
        }
        for (int s : tag.sensors) held[s] = z[s];
        if (tag.grid && next_grid < n_grid) {
            out.grid_time[next_grid] = tb;
            out.states.col(next_grid) = z;
            out.controls.col(next_grid) = (kp * held + ki * integral).eval();
            ++next_grid;
        }
    }
    return out;
}

}  // namespace ctsched
