#include "ctsched/chain_analysis.hpp"

#include <limits>

#include "ctsched/errors.hpp"

namespace ctsched {

Mat closed_loop_generator(const ChainMatrices& mats, const StationaryPolicy& policy) {
    Mat closed = mats.A;
    for (int i = 0; i < mats.counter_count(); ++i)
        closed += mats.B[i] * policy.gain.row(i).asDiagonal();
    const GeneratorCheck check = validate_generator(closed, 1e-9);
    if (!check.pass)
        throw GeneratorViolationError(
            "closed-loop operator is not an infinitesimal generator");
    return closed;
}

Vec stationary_distribution(const Mat& closed_loop, double tol) {
    const Index n = closed_loop.rows();
    if (closed_loop.cols() != n)
        throw InvalidSpecError("generator must be square");

    const Eigen::JacobiSVD<Mat> svd(closed_loop);
    const Vec sigma = svd.singularValues();
    const double scale = sigma.size() > 0 ? sigma[0] : 0.0;
    int null_dim = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        if (sigma[i] <= tol * std::max(scale, 1.0)) ++null_dim;
    if (null_dim > 1)
        throw NonErgodicError(
            "chain is reducible: stationary distribution is not unique");

    Mat augmented(n + 1, n);
    augmented.topRows(n) = closed_loop;
    augmented.bottomRows(1).setOnes();
    Vec rhs = Vec::Zero(n + 1);
    rhs[n] = 1.0;
    Vec p = augmented.colPivHouseholderQr().solve(rhs);
    // Roundoff can leave tiny negative mass on unreachable states.
    for (Index i = 0; i < n; ++i)
        if (p[i] < 0.0 && p[i] > -1e-12) p[i] = 0.0;
    return p / p.sum();
}

FrequencyReport sampling_frequencies(const ChainSpec& spec, const ChainMatrices& mats,
                                     const StationaryPolicy& policy,
                                     const Vec& p_stationary) {
    const int idle = spec.idle_state();
    FrequencyReport report;
    report.p_stationary = p_stationary;
    report.closed_loop = closed_loop_generator(mats, policy);
    report.frequency = Vec::Zero(spec.sensor_count);
    report.mean_gap = Vec::Zero(spec.sensor_count);
    for (int s = 0; s < spec.sensor_count; ++s) {
        const double rate = policy.eff_rates(sampling_counter(s), idle);
        report.frequency[s] = rate * p_stationary[idle];
        report.mean_gap[s] = report.frequency[s] > 0.0
                                 ? 1.0 / report.frequency[s]
                                 : std::numeric_limits<double>::infinity();
    }
    return report;
}

}  // namespace ctsched
