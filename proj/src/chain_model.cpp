#include "ctsched/chain_model.hpp"

#include <cmath>
#include <string>

#include "ctsched/errors.hpp"

namespace ctsched {

ChainSpec ChainSpec::uniform(int sensor_count, double rate_sample,
                             double rate_return, const Vec& cost_weights) {
    ChainSpec spec;
    spec.sensor_count = sensor_count;
    spec.base_rates = Vec::Zero(2 * sensor_count);
    for (int s = 0; s < sensor_count; ++s) {
        spec.base_rates[sampling_counter(s)] = rate_sample;
        spec.base_rates[return_counter(s)] = rate_return;
    }
    spec.sensitivity = Mat::Identity(2 * sensor_count, 2 * sensor_count);
    spec.cost_weights = cost_weights;
    spec.validate();
    return spec;
}

void ChainSpec::validate() const {
    if (sensor_count < 1) throw InvalidSpecError("chain needs at least one sensor");
    const int m = counter_count();
    if (base_rates.size() != m)
        throw InvalidSpecError("base_rates must have one entry per counter (2L)");
    if (sensitivity.rows() != m || sensitivity.cols() != m)
        throw InvalidSpecError("sensitivity must be 2L x 2L");
    if (cost_weights.size() != sensor_count)
        throw InvalidSpecError("cost_weights must have one entry per sensor");
    for (int i = 0; i < m; ++i)
        if (!(base_rates[i] >= 0.0))
            throw InvalidSpecError("base rate " + std::to_string(i) +
                                   " is negative or non-finite");
    for (int s = 0; s < sensor_count; ++s)
        if (!(cost_weights[s] >= 0.0))
            throw InvalidSpecError("cost weight " + std::to_string(s) +
                                   " is negative or non-finite");
    if (!sensitivity.allFinite())
        throw InvalidSpecError("sensitivity matrix has non-finite entries");
}

std::vector<Mat> build_generators(int sensor_count) {
    if (sensor_count < 1) throw InvalidSpecError("chain needs at least one sensor");
    const int n = sensor_count + 1;
    const int idle = sensor_count;
    std::vector<Mat> G(2 * sensor_count, Mat::Zero(n, n));
    for (int s = 0; s < sensor_count; ++s) {
        // (e_s - e_idle) e_idle^T: fires from idle, lands on sensor s.
        Mat& up = G[sampling_counter(s)];
        up(s, idle) = 1.0;
        up(idle, idle) = -1.0;
        // (e_idle - e_s) e_s^T: fires from sensor s, lands on idle.
        Mat& down = G[return_counter(s)];
        down(idle, s) = 1.0;
        down(s, s) = -1.0;
    }
    return G;
}

ChainMatrices build_matrices(const ChainSpec& spec) {
    spec.validate();
    const int n = spec.state_count();
    const int m = spec.counter_count();
    const int idle = spec.idle_state();

    ChainMatrices mats;
    mats.G = build_generators(spec.sensor_count);

    mats.A = Mat::Zero(n, n);
    for (int i = 0; i < m; ++i) mats.A += spec.base_rates[i] * mats.G[i];

    mats.B.assign(m, Mat::Zero(n, n));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (spec.sensitivity(j, i) != 0.0)
                mats.B[i] += spec.sensitivity(j, i) * mats.G[j];

    // Sampling cost lands on the idle column only: a jump out of idle
    // through counter 2s+1 is what incurs weight xi_s.
    mats.S = Mat::Zero(m, n);
    mats.c = Vec::Zero(n);
    for (int s = 0; s < spec.sensor_count; ++s) {
        const int up = sampling_counter(s);
        mats.c[idle] += spec.cost_weights[s] * spec.base_rates[up];
        for (int j = 0; j < m; ++j)
            mats.S(j, idle) += spec.cost_weights[s] * spec.sensitivity(up, j);
    }

    mats.mu0 = spec.base_rates;
    mats.alpha = spec.sensitivity;

    const GeneratorCheck check = validate_generator(mats.A, 1e-9);
    if (!check.pass)
        throw NumericalError("drift matrix failed generator validation");
    return mats;
}

GeneratorCheck validate_generator(const Mat& M, double tol) {
    GeneratorCheck check;
    for (Index j = 0; j < M.cols(); ++j) {
        for (Index i = 0; i < M.rows(); ++i) {
            if (i != j && M(i, j) < -tol) {
                check.pass = false;
                check.violations.push_back(
                    {GeneratorViolation::Kind::negative_off_diagonal, i, j, M(i, j)});
            }
        }
        const double col_sum = M.col(j).sum();
        if (std::abs(col_sum) > tol) {
            check.pass = false;
            check.violations.push_back(
                {GeneratorViolation::Kind::column_sum, -1, j, col_sum});
        }
    }
    return check;
}

}  // namespace ctsched
