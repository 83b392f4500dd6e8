#include "ctsched/plant_models.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>
#include <utility>

#include "ctsched/errors.hpp"

namespace ctsched {

void ScalarPlant::validate() const {
    if (!(gamma > 0.0)) throw InvalidSpecError("plant decay rate must be positive");
    if (!(sigma >= 0.0)) throw InvalidSpecError("diffusion must be nonnegative");
    if (!(eta >= 0.0)) throw InvalidSpecError("measurement noise std must be nonnegative");
}

LinearPlant make_linear_plant(Mat A, Mat H, Mat C, Mat R) {
    const Index d = A.rows();
    if (A.cols() != d) throw InvalidSpecError("drift matrix must be square");
    if (H.rows() != d) throw InvalidSpecError("diffusion matrix row count must match state");
    if (C.cols() != d) throw InvalidSpecError("output matrix column count must match state");
    if (R.rows() != C.rows() || R.cols() != C.rows())
        throw InvalidSpecError("measurement covariance must match output dimension");
    if (!((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, R.cwiseAbs().maxCoeff())))
        throw InvalidSpecError("measurement covariance must be symmetric");

    LinearPlant plant;
    plant.lambda_bar = Eigen::SelfAdjointEigenSolver<Mat>(A + A.transpose())
                           .eigenvalues()
                           .maxCoeff();
    if (!(plant.lambda_bar < 0.0))
        throw InvalidSpecError("plant must decay: largest eigenvalue of A + A' is " +
                               std::to_string(plant.lambda_bar));
    psd_sqrt(R);  // rejects indefinite covariance
    plant.A = std::move(A);
    plant.H = std::move(H);
    plant.C = std::move(C);
    plant.R = std::move(R);
    return plant;
}

double water_tank_gamma(double outlet_area, double section_area, double level,
                        double gravity) {
    if (!(outlet_area > 0.0 && section_area > 0.0 && level > 0.0 && gravity > 0.0))
        throw InvalidSpecError("tank parameters must be positive");
    return outlet_area / section_area * std::sqrt(gravity / (2.0 * level));
}

double scalar_step_variance(const ScalarPlant& plant, double dt) {
    // -expm1 keeps this accurate for small gamma * dt.
    return plant.sigma * plant.sigma * -std::expm1(-2.0 * plant.gamma * dt) /
           (2.0 * plant.gamma);
}

double exact_scalar_step(double z, double dt, const ScalarPlant& plant, double noise) {
    if (!(dt >= 0.0)) throw InvalidSpecError("time step must be nonnegative");
    return std::exp(-plant.gamma * dt) * z +
           std::sqrt(scalar_step_variance(plant, dt)) * noise;
}

DiscretizedStep discretize_linear(const LinearPlant& plant, double dt) {
    if (!(dt >= 0.0)) throw InvalidSpecError("time step must be nonnegative");
    const Index d = plant.A.rows();
    DiscretizedStep step;
    step.dt = dt;
    if (dt == 0.0) {
        step.F = Mat::Identity(d, d);
        step.Q = Mat::Zero(d, d);
        return step;
    }
    // Block exponential of [[A, HH'], [0, -A']] dt gives F top-left and
    // Q = (top-right) F'.
    Mat block = Mat::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = plant.A;
    block.topRightCorner(d, d) = plant.H * plant.H.transpose();
    block.bottomRightCorner(d, d) = -plant.A.transpose();
    const Mat e = (block * dt).exp();
    step.F = e.topLeftCorner(d, d);
    const Mat Q = e.topRightCorner(d, d) * step.F.transpose();
    step.Q = 0.5 * (Q + Q.transpose());
    return step;
}

Vec exact_vector_step(const Vec& z, const DiscretizedStep& step, const Vec& noise) {
    if (z.size() != step.F.cols() || noise.size() != step.F.cols())
        throw InvalidSpecError("state/noise dimension mismatch");
    return step.F * z + psd_sqrt(step.Q) * noise;
}

Vec measure(const Vec& z, const Mat& C, const Mat& R, const Vec& noise) {
    if (C.cols() != z.size() || R.rows() != C.rows() || noise.size() != C.rows())
        throw InvalidSpecError("measurement dimension mismatch");
    return C * z + psd_sqrt(R) * noise;
}

Mat psd_sqrt(const Mat& S, double tol) {
    const Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (S + S.transpose()));
    Vec values = eig.eigenvalues();
    const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
    for (Index i = 0; i < values.size(); ++i) {
        if (values[i] < -tol * scale)
            throw NumericalError("matrix is indefinite beyond tolerance (eigenvalue " +
                                 std::to_string(values[i]) + ")");
        if (values[i] < 0.0) values[i] = 0.0;
    }
    return eig.eigenvectors() * values.cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

Mat matrix_exponential(const Mat& M) { return M.exp(); }

}  // namespace ctsched
