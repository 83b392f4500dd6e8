#pragma once

#include <functional>
#include <vector>

#include "ctsched/chain_model.hpp"
#include "ctsched/types.hpp"

namespace ctsched {

/// Solution of the finite-horizon backward value ODE.
struct FiniteHorizonPolicy {
    Vec grid;                 ///< M+1 ascending times, grid[0]=0, grid[M]=T
    std::vector<Vec> k_traj;  ///< value vector at each grid time
    Vec k_f;                  ///< terminal condition, k_traj.back() == k_f
    double cost = 0.0;        ///< predicted cost k(0)' E{x(0)} / T

    /// Control gain rows -1/2 (k(t)' B_i + S_i) at grid index j.
    Mat gain_at(const ChainMatrices& mats, Index j) const;
};

/// Solved infinite-horizon rate-control policy.
struct StationaryPolicy {
    Vec k0;           ///< 1' k0 = 0 up to solver roundoff
    double rho = 0.0; ///< predicted long-run average cost
    Mat gain;         ///< m x n, row i = -1/2 (k0' B_i + S_i)
    Mat eff_rates;    ///< m x n, (i, j) = rate of counter i while in state j
    double residual = 0.0;
    int iterations = 0;

    int counter_count() const { return static_cast<int>(gain.rows()); }
    int state_count() const { return static_cast<int>(gain.cols()); }
    int sensor_count() const { return counter_count() / 2; }
};

struct StationaryOptions {
    int max_iterations = 200;
    double tolerance = 1e-10;        ///< convergence on the residual inf-norm
    double rate_tolerance = 1e-9;    ///< slack for effective-rate nonnegativity
    double normalization_target = 0.0;  ///< right-hand side of the 1'k0 row
};

/// Newton solve of the stationary value system with analytic Jacobian and
/// step halving, started from zero. Throws NoSolutionError if the budget
/// runs out and GeneratorViolationError if the solved rates turn negative
/// at a reachable position.
StationaryPolicy solve_stationary(const ChainMatrices& mats,
                                  const StationaryOptions& options = {});

/// Backward RK4 integration of the value ODE
///   kdot = -c(t) - A'k + 1/4 sum_i (S_i' + B_i'k)^2   (entrywise square)
/// from k(T) = k_f down to t = 0 on a uniform grid.
/// x0_mean is E{x(0)} for the predicted cost (defaults to starting idle).
FiniteHorizonPolicy solve_k_ode(const ChainMatrices& mats,
                                const std::function<Vec(double)>& c_of_t,
                                const Vec& k_f, double horizon, int steps = 10000,
                                const Vec& x0_mean = Vec());

/// Same with the constant cost vector of the chain.
FiniteHorizonPolicy solve_k_ode(const ChainMatrices& mats, const Vec& k_f,
                                double horizon, int steps = 10000,
                                const Vec& x0_mean = Vec());

/// Optimal control input u = K x for a canonical unit state vector.
Vec control_input(const StationaryPolicy& policy, const Vec& state);

}  // namespace ctsched
