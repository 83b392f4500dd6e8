#include "ctsched/estimators.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "ctsched/errors.hpp"

namespace ctsched {

double predictor_estimate(double last_y, double elapsed, const ScalarPlant& plant) {
    if (!(elapsed >= 0.0)) throw InvalidSpecError("elapsed time must be nonnegative");
    return std::exp(-plant.gamma * elapsed) * last_y;
}

Vec predictor_estimate(const Vec& last_y, double elapsed, const LinearPlant& plant) {
    if (!(elapsed >= 0.0)) throw InvalidSpecError("elapsed time must be nonnegative");
    if (last_y.size() != plant.dim())
        throw InvalidSpecError("estimate dimension mismatch");
    return (plant.A * elapsed).exp() * last_y;
}

EstimationBound bound_scalar_estimation(double gamma, double sigma, double eta,
                                        double frequency) {
    if (!(gamma > 0.0)) throw InvalidSpecError("decay rate must be positive");
    if (!(frequency > 0.0)) throw InvalidSpecError("frequency must be positive");
    const double decay = std::exp(-2.0 * gamma / frequency);  // 1 at f = +inf
    const double drift = sigma * sigma / (2.0 * gamma) * (1.0 - decay);
    EstimationBound bound;
    bound.frequency = frequency;
    if (eta <= sigma * std::sqrt(0.5 / gamma)) {
        bound.regime = BoundRegime::low_noise;
        bound.value = eta * eta * decay + drift;
    } else {
        bound.regime = BoundRegime::high_noise;
        bound.value = eta * eta + drift;
    }
    return bound;
}

EstimationBound bound_state_estimation(const LinearPlant& plant, double frequency) {
    if (!(plant.lambda_bar < 0.0))
        throw BoundInapplicableError("bound needs lambda_bar(A + A') < 0");
    if (!(frequency > 0.0)) throw InvalidSpecError("frequency must be positive");
    EstimationBound bound;
    bound.regime = BoundRegime::matrix;
    bound.frequency = frequency;
    bound.value = plant.R.trace() +
                  (plant.H.transpose() * plant.H).trace() / -plant.lambda_bar *
                      (1.0 - std::exp(plant.lambda_bar / frequency));
    return bound;
}

KalmanState kalman_step(const KalmanState& state, const DiscretizedStep& step,
                        const Mat& C, const Mat& R, const Vec& y) {
    const Index d = state.x_hat.size();
    if (step.F.rows() != d || C.cols() != d || y.size() != C.rows())
        throw InvalidSpecError("Kalman step dimension mismatch");

    const Vec x_prior = step.F * state.x_hat;
    const Mat P_prior = step.F * state.P * step.F.transpose() + step.Q;

    const Mat innovation_cov = C * P_prior * C.transpose() + R;
    const Eigen::FullPivLU<Mat> lu(innovation_cov);
    if (!lu.isInvertible() ||
        lu.rcond() < 1e-12)
        throw NumericalError("innovation covariance is singular");
    const Mat gain = P_prior * C.transpose() * lu.inverse();

    KalmanState next;
    next.t = state.t + step.dt;
    next.x_hat = x_prior + gain * (y - C * x_prior);
    const Mat closed = Mat::Identity(d, d) - gain * C;
    const Mat P = closed * P_prior * closed.transpose() +
                  gain * R * gain.transpose();
    next.P = 0.5 * (P + P.transpose());
    return next;
}

EstimationBound kalman_intersample_bound(double p_trace, const LinearPlant& plant,
                                         double gap) {
    if (!(plant.lambda_bar < 0.0))
        throw BoundInapplicableError("bound needs lambda_bar(A + A') < 0");
    if (!(gap >= 0.0)) throw InvalidSpecError("gap must be nonnegative");
    EstimationBound bound;
    bound.regime = BoundRegime::kalman_conditional;
    bound.gap = gap;
    bound.value = p_trace + (plant.H.transpose() * plant.H).trace() /
                                -plant.lambda_bar *
                                (1.0 - std::exp(plant.lambda_bar * gap));
    return bound;
}

Mat lyapunov_steady_state(const Mat& A, const Mat& W) {
    const Index d = A.rows();
    if (A.cols() != d || W.rows() != d || W.cols() != d)
        throw InvalidSpecError("Lyapunov dimensions mismatch");
    // vec(AX + XA') = (I (x) A + A (x) I) vec(X)
    Mat system = Mat::Zero(d * d, d * d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j)
            for (Index k = 0; k < d; ++k) {
                system(i + j * d, k + j * d) += A(i, k);  // A X term
                system(i + j * d, i + k * d) += A(j, k);  // X A' term
            }
    Vec rhs(d * d);
    for (Index j = 0; j < d; ++j) rhs.segment(j * d, d) = -W.col(j);
    const Vec x = system.partialPivLu().solve(rhs);
    Mat X(d, d);
    for (Index j = 0; j < d; ++j) X.col(j) = x.segment(j * d, d);
    return 0.5 * (X + X.transpose());
}

KalmanState kalman_init(const LinearPlant& plant) {
    KalmanState state;
    state.x_hat = Vec::Zero(plant.dim());
    state.P = lyapunov_steady_state(plant.A, plant.H * plant.H.transpose());
    state.t = 0.0;
    return state;
}

}  // namespace ctsched
