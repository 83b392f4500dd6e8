#pragma once

#include "ctsched/types.hpp"

namespace ctsched {

/// Scalar Ornstein-Uhlenbeck plant dz = -gamma z dt + sigma dw with
/// measurement noise standard deviation eta.
struct ScalarPlant {
    double gamma = 1.0;  ///< decay rate, > 0
    double sigma = 0.0;  ///< diffusion
    double eta = 0.0;    ///< measurement noise std

    void validate() const;
};

/// Linear plant dz = A z dt + H dw with output y = C z + noise,
/// noise covariance R. lambda_bar is the largest eigenvalue of A + A',
/// which the decay bounds require to be negative.
struct LinearPlant {
    Mat A;
    Mat H;
    Mat C;
    Mat R;
    double lambda_bar = 0.0;

    int dim() const { return static_cast<int>(A.rows()); }
};

/// Validates shapes, requires lambda_bar(A + A') < 0 and R symmetric PSD.
LinearPlant make_linear_plant(Mat A, Mat H, Mat C, Mat R);

/// Exact transition over one inter-sample interval: z' = F z + G w with
/// G G' = Q the accumulated process-noise covariance.
struct DiscretizedStep {
    Mat F;
    Mat Q;
    double dt = 0.0;
};

/// Tank linearization decay rate (outlet/section) sqrt(g / (2 level)).
double water_tank_gamma(double outlet_area, double section_area, double level,
                        double gravity);

/// Exact scalar OU transition: decay plus stationary-consistent noise.
double exact_scalar_step(double z, double dt, const ScalarPlant& plant, double noise);

/// Variance of the scalar OU increment over dt.
double scalar_step_variance(const ScalarPlant& plant, double dt);

/// F = exp(A dt) and Q = int_0^dt exp(A s) H H' exp(A' s) ds, both read
/// off one augmented matrix exponential.
DiscretizedStep discretize_linear(const LinearPlant& plant, double dt);

/// z' = F z + sqrt(Q) noise with a PSD-safe symmetric square root.
Vec exact_vector_step(const Vec& z, const DiscretizedStep& step, const Vec& noise);

/// y = C z + sqrt(R) noise.
Vec measure(const Vec& z, const Mat& C, const Mat& R, const Vec& noise);

/// Symmetric square root of a PSD matrix; eigenvalues inside
/// [-tol * scale, 0) are clipped to zero, anything lower throws.
Mat psd_sqrt(const Mat& S, double tol = 1e-12);

/// Dense matrix exponential.
Mat matrix_exponential(const Mat& M);

}  // namespace ctsched
