#pragma once

#include "ctsched/plant_models.hpp"
#include "ctsched/types.hpp"

namespace ctsched {

/// Discrete Kalman filter state at the last processed sample.
struct KalmanState {
    Vec x_hat;
    Mat P;
    double t = 0.0;
};

enum class BoundRegime { low_noise, high_noise, matrix, kalman_conditional };

/// Analytic upper bound on an error variance, with the inputs that
/// selected it.
struct EstimationBound {
    double value = 0.0;
    BoundRegime regime = BoundRegime::low_noise;
    double frequency = 0.0;  ///< sampling frequency the bound was evaluated at
    double gap = 0.0;        ///< inter-sample gap (conditional bounds only)
};

/// Hold-reset prediction between samples: the estimate decays with the
/// plant dynamics from the last received measurement.
double predictor_estimate(double last_y, double elapsed, const ScalarPlant& plant);
Vec predictor_estimate(const Vec& last_y, double elapsed, const LinearPlant& plant);

/// Scalar estimation-error variance bound. The low-noise form applies
/// when eta <= sigma / sqrt(2 gamma), the high-noise form otherwise;
/// frequency may be +inf (vanishing gap).
EstimationBound bound_scalar_estimation(double gamma, double sigma, double eta,
                                        double frequency);

/// Noisy-state-measurement bound for a decaying linear plant:
/// trace(R) + trace(H'H)/|lambda_bar| (1 - exp(lambda_bar / f)).
EstimationBound bound_state_estimation(const LinearPlant& plant, double frequency);

/// One predict-update cycle over an inter-sample step, Joseph-form
/// covariance update.
KalmanState kalman_step(const KalmanState& state, const DiscretizedStep& step,
                        const Mat& C, const Mat& R, const Vec& y);

/// Conditional bound between samples, given the posterior trace at the
/// last update and the gap to the next sample.
EstimationBound kalman_intersample_bound(double p_trace, const LinearPlant& plant,
                                         double gap);

/// Filter start: zero estimate with the open-loop stationary covariance.
KalmanState kalman_init(const LinearPlant& plant);

/// Solves A X + X A' + W = 0 for the stationary covariance X.
Mat lyapunov_steady_state(const Mat& A, const Mat& W);

}  // namespace ctsched
