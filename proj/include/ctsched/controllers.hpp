#pragma once

#include <vector>

#include "ctsched/chain_sim.hpp"
#include "ctsched/estimators.hpp"
#include "ctsched/plant_models.hpp"
#include "ctsched/rng.hpp"
#include "ctsched/types.hpp"

namespace ctsched {

/// Closed-loop state record: values at the uniform reporting grid plus
/// the post-jump values at the sample instants. event_control is the
/// applied amplitude (for the impulsive law, the injected increment).
struct ClosedLoopTrajectory {
    std::vector<double> grid_time;
    std::vector<double> grid_state;
    std::vector<double> grid_control;
    std::vector<double> event_time;
    std::vector<double> event_state;
    std::vector<double> event_control;
};

/// State reset to the negated measurement noise at every sample; exact
/// OU evolution in between.
ClosedLoopTrajectory simulate_impulsive(const ScalarPlant& plant,
                                        const std::vector<double>& events,
                                        double horizon, double grid_dt, Rng rng);

/// Constant pulse of width rho after each sample (held to the gap end
/// when the gap is shorter), matched to cancel the measured state.
ClosedLoopTrajectory simulate_pulse(const ScalarPlant& plant,
                                    const std::vector<double>& events, double width,
                                    double horizon, double grid_dt, Rng rng);

/// Exponentially decaying control (gamma - theta) y exp(-theta (t - T_i)).
ClosedLoopTrajectory simulate_exponential(const ScalarPlant& plant,
                                          const std::vector<double>& events,
                                          double theta, double horizon,
                                          double grid_dt, Rng rng);

/// Pulse amplitude at time t_since after a sample with measurement y;
/// gap is the distance to the next sample (the pulse is held through a
/// gap shorter than its width).
double pulse_control(double y, double t_since, double gap, double gamma, double width);

/// Exponential control value at t_since after a sample with measurement y.
double exponential_control(double y, double t_since, double gamma, double theta);

/// Closed-loop variance bounds. The impulsive bound coincides with the
/// scalar estimation bound; the pulse and exponential bounds carry the
/// repeated-interruption factors 1/(1 - P{gap < width}) and
/// 1/(1 - E{exp(-2 theta gap)}).
EstimationBound bound_impulsive(double gamma, double sigma, double eta,
                                double frequency);
double bound_pulse(double gamma, double sigma, double eta, double frequency,
                   double width, double p_below);
double bound_exponential(double gamma, double sigma, double eta, double frequency,
                         double exp_moment);

/// Ring of identical scalar subsystems, each coupled to both neighbours
/// with the given strength.
struct RingNetwork {
    int size = 0;
    double coupling = 0.0;
};

/// Heaviside step input amplitude * step(t - onset) on one subsystem.
struct StepDisturbance {
    int subsystem = 0;
    double amplitude = 0.0;
    double onset = 0.0;
};

struct PiTrajectories {
    std::vector<double> grid_time;
    Mat states;    ///< size x grid
    Mat controls;  ///< size x grid
};

/// Sampled-state proportional-integral control on the ring:
/// v = kp z_held + ki int z_held dt, with the held sample refreshed at
/// each of that subsystem's schedule events. The integral accumulates
/// exactly (the integrand is piecewise constant); the coupled dynamics
/// are integrated with fixed-step RK4 between breakpoints.
PiTrajectories simulate_coupled_pi(const RingNetwork& network,
                                   const SamplingTrace& schedule,
                                   const std::vector<StepDisturbance>& disturbances,
                                   double kp, double ki, double horizon,
                                   double grid_dt);

}  // namespace ctsched
