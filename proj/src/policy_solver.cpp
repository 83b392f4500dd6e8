#include "ctsched/policy_solver.hpp"

#include <cmath>
#include <string>

#include "ctsched/errors.hpp"

namespace ctsched {

namespace {

/// Residual of the stationary system: the n value rows followed by the
/// normalization row 1'k0 - target. The cost terms S and c are scaled by
/// `weight` so the continuation path can deform them.
Vec stationary_residual(const ChainMatrices& mats, const Vec& k0, double rho,
                        double target, double weight) {
    const int n = mats.state_count();
    const int m = mats.counter_count();
    Vec r(n + 1);
    Vec quad = Vec::Zero(n);
    for (int i = 0; i < m; ++i) {
        const Vec w =
            weight * mats.S.row(i).transpose() + mats.B[i].transpose() * k0;
        quad += w.cwiseProduct(w);
    }
    r.head(n) = mats.A.transpose() * k0 - Vec::Constant(n, rho) -
                0.25 * quad + weight * mats.c;
    r[n] = k0.sum() - target;
    return r;
}

Mat stationary_jacobian(const ChainMatrices& mats, const Vec& k0, double weight) {
    const int n = mats.state_count();
    const int m = mats.counter_count();
    Mat J = Mat::Zero(n + 1, n + 1);
    J.topLeftCorner(n, n) = mats.A.transpose();
    for (int i = 0; i < m; ++i) {
        const Vec w =
            weight * mats.S.row(i).transpose() + mats.B[i].transpose() * k0;
        J.topLeftCorner(n, n) -= 0.5 * w.asDiagonal() * mats.B[i].transpose();
    }
    J.col(n).head(n).setConstant(-1.0);
    J.row(n).head(n).setConstant(1.0);
    return J;
}

struct NewtonResult {
    Vec k0;
    double rho = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

NewtonResult newton_stationary(const ChainMatrices& mats,
                               const StationaryOptions& options, double weight,
                               Vec k0, double rho) {
    const int n = mats.state_count();
    NewtonResult result;
    Vec r = stationary_residual(mats, k0, rho, options.normalization_target, weight);
    double err = r.lpNorm<Eigen::Infinity>();
    int iter = 0;
    while (err > options.tolerance) {
        if (++iter > options.max_iterations)
            throw NoSolutionError("stationary solve did not converge after " +
                                      std::to_string(options.max_iterations) +
                                      " Newton iterations",
                                  err);
        const Mat J = stationary_jacobian(mats, k0, weight);
        const Vec delta = J.partialPivLu().solve(-r);
        if (!delta.allFinite())
            throw NoSolutionError("stationary solve hit a singular Jacobian", err);
        // Step halving until the residual actually shrinks.
        double step = 1.0;
        for (;;) {
            const Vec k_try = k0 + step * delta.head(n);
            const double rho_try = rho + step * delta[n];
            const Vec r_try = stationary_residual(
                mats, k_try, rho_try, options.normalization_target, weight);
            const double err_try = r_try.lpNorm<Eigen::Infinity>();
            if (err_try < err || step < 1e-12) {
                k0 = k_try;
                rho = rho_try;
                r = r_try;
                err = err_try;
                break;
            }
            step *= 0.5;
        }
    }
    result.k0 = k0;
    result.rho = rho;
    result.residual = err;
    result.iterations = iter;
    return result;
}

Mat gain_from_value(const ChainMatrices& mats, const Vec& k) {
    const int n = mats.state_count();
    const int m = mats.counter_count();
    Mat gain(m, n);
    for (int i = 0; i < m; ++i)
        gain.row(i) =
            -0.5 * (k.transpose() * mats.B[i] + mats.S.row(i));
    return gain;
}

}  // namespace

namespace {

StationaryPolicy finish_policy(const ChainMatrices& mats,
                               const StationaryOptions& options,
                               const NewtonResult& solved) {
    const int n = mats.state_count();
    const int m = mats.counter_count();
    const int idle = mats.idle_state();

    StationaryPolicy policy;
    policy.k0 = solved.k0;
    policy.rho = solved.rho;
    policy.gain = gain_from_value(mats, solved.k0);
    policy.residual = solved.residual;
    policy.iterations = solved.iterations;

    // Effective per-state rates mu0 + alpha * (K e_j). Nonnegativity is
    // required only where the counter can actually fire.
    policy.eff_rates = mats.mu0.replicate(1, n) + mats.alpha * policy.gain;
    std::string violations;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (counter_fires_from(i, j, idle) &&
                policy.eff_rates(i, j) < -options.rate_tolerance)
                violations += " (counter " + std::to_string(i) + ", state " +
                              std::to_string(j) + ")";
    if (!violations.empty())
        throw GeneratorViolationError(
            "negative effective rate at reachable positions:" + violations);
    return policy;
}

}  // namespace

StationaryPolicy solve_stationary(const ChainMatrices& mats,
                                  const StationaryOptions& options) {
    const int n = mats.state_count();

    // Direct Newton from zero first. The stationary system is quadratic
    // and can have spurious branches; if the direct solve misses (no
    // convergence or invalid rates), track the physical branch instead by
    // growing the cost terms from zero, where the solution is exactly
    // zero, up to full weight.
    try {
        return finish_policy(mats, options,
                             newton_stationary(mats, options, 1.0, Vec::Zero(n), 0.0));
    } catch (const NoSolutionError&) {
    } catch (const GeneratorViolationError&) {
    }

    const int stages = 32;
    NewtonResult solved;
    solved.k0 = Vec::Zero(n);
    solved.rho = 0.0;
    for (int stage = 1; stage <= stages; ++stage) {
        const double weight = static_cast<double>(stage) / stages;
        solved = newton_stationary(mats, options, weight, solved.k0, solved.rho);
    }
    return finish_policy(mats, options, solved);
}

Mat FiniteHorizonPolicy::gain_at(const ChainMatrices& mats, Index j) const {
    return gain_from_value(mats, k_traj.at(static_cast<std::size_t>(j)));
}

FiniteHorizonPolicy solve_k_ode(const ChainMatrices& mats,
                                const std::function<Vec(double)>& c_of_t,
                                const Vec& k_f, double horizon, int steps,
                                const Vec& x0_mean) {
    if (!(horizon > 0.0)) throw InvalidSpecError("horizon must be positive");
    if (steps < 1) throw InvalidSpecError("need at least one RK4 step");
    const int n = mats.state_count();
    if (k_f.size() != n) throw InvalidSpecError("terminal condition has wrong size");

    // Reversed time s = T - t turns the terminal-value problem into an
    // initial-value one: y(s) = k(T - s), ydot = c(T-s) + A'y - quad(y).
    const auto rhs = [&](double s, const Vec& y) -> Vec {
        Vec quad = Vec::Zero(n);
        for (int i = 0; i < mats.counter_count(); ++i) {
            const Vec w = mats.S.row(i).transpose() + mats.B[i].transpose() * y;
            quad += w.cwiseProduct(w);
        }
        return c_of_t(horizon - s) + mats.A.transpose() * y - 0.25 * quad;
    };

    FiniteHorizonPolicy policy;
    policy.k_f = k_f;
    policy.grid = Vec::LinSpaced(steps + 1, 0.0, horizon);
    policy.k_traj.assign(steps + 1, Vec());
    policy.k_traj[steps] = k_f;

    const double h = horizon / steps;
    Vec y = k_f;
    for (int step = 0; step < steps; ++step) {
        const double s = step * h;
        const Vec f1 = rhs(s, y);
        const Vec f2 = rhs(s + 0.5 * h, y + 0.5 * h * f1);
        const Vec f3 = rhs(s + 0.5 * h, y + 0.5 * h * f2);
        const Vec f4 = rhs(s + h, y + h * f3);
        y += (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
        if (!y.allFinite())
            throw DivergenceError("value ODE diverged at t = " +
                                      std::to_string(horizon - (step + 1) * h),
                                  horizon - (step + 1) * h);
        policy.k_traj[steps - 1 - step] = y;
    }

    Vec x0 = x0_mean;
    if (x0.size() == 0) x0 = Vec::Unit(n, mats.idle_state());
    if (x0.size() != n) throw InvalidSpecError("x(0) mean has wrong size");
    policy.cost = policy.k_traj[0].dot(x0) / horizon;
    return policy;
}

FiniteHorizonPolicy solve_k_ode(const ChainMatrices& mats, const Vec& k_f,
                                double horizon, int steps, const Vec& x0_mean) {
    const Vec c = mats.c;
    return solve_k_ode(
        mats, [&c](double) { return c; }, k_f, horizon, steps, x0_mean);
}

Vec control_input(const StationaryPolicy& policy, const Vec& state) {
    if (state.size() != policy.state_count())
        throw InvalidStateError("state vector has wrong size");
    Index unit = -1;
    for (Index i = 0; i < state.size(); ++i) {
        if (state[i] == 0.0) continue;
        if (state[i] != 1.0 || unit >= 0)
            throw InvalidStateError("state is not a canonical unit vector");
        unit = i;
    }
    if (unit < 0) throw InvalidStateError("state is not a canonical unit vector");
    return policy.gain.col(unit);
}

}  // namespace ctsched
