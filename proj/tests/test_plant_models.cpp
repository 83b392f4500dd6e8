#include <doctest.h>

#include <cmath>

#include "ctsched/errors.hpp"
#include "ctsched/plant_models.hpp"
#include "ctsched/rng.hpp"

using namespace ctsched;

namespace {

/// Serial two-tank drift with both tanks at decay rate gamma.
Mat cascade_drift(double gamma) {
    Mat A(2, 2);
    A << -gamma, 0.0, gamma, -gamma;
    return A;
}

LinearPlant cascade_plant(double gamma) {
    return make_linear_plant(cascade_drift(gamma), Mat::Identity(2, 2),
                             Mat::Identity(2, 2), 0.09 * Mat::Identity(2, 2));
}

/// Closed-form transition for the cascade: A = -gamma I + N with N
/// nilpotent, so exp(A t) = exp(-gamma t)(I + N t). Independent of the
/// library's matrix exponential.
Mat cascade_transition(double gamma, double t) {
    Mat e(2, 2);
    const double d = std::exp(-gamma * t);
    e << d, 0.0, gamma * t * d, d;
    return e;
}

/// Simpson quadrature of the process-noise integrand on the cascade.
Mat cascade_noise_quadrature(double gamma, double dt, int panels = 4000) {
    Mat q = Mat::Zero(2, 2);
    const double h = dt / panels;
    const auto integrand = [&](double tau) -> Mat {
        const Mat e = cascade_transition(gamma, tau);
        return e * e.transpose();
    };
    for (int k = 0; k < panels; ++k) {
        const double a = k * h;
        q += h / 6.0 *
             (integrand(a) + 4.0 * integrand(a + 0.5 * h) + integrand(a + h));
    }
    return q;
}

}  // namespace

TEST_CASE("water tank linearization") {
    CHECK(water_tank_gamma(0.20, 1.00, 0.40, 9.80) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(std::abs(water_tank_gamma(0.10, 1.00, 0.54, 9.80) - 0.30) <= 0.005);
    CHECK_THROWS_AS(water_tank_gamma(0.0, 1.0, 0.4, 9.8), InvalidSpecError);
    CHECK_THROWS_AS(water_tank_gamma(0.1, 1.0, -0.4, 9.8), InvalidSpecError);
}

TEST_CASE("scalar step determinism and decay") {
    const ScalarPlant plant{0.7, 1.0, 0.3};
    CHECK(exact_scalar_step(1.5, 0.0, plant, 0.0) == 1.5);
    CHECK(exact_scalar_step(1.0, 1.0, plant, 0.0) ==
          doctest::Approx(std::exp(-0.7)).epsilon(1e-12));
}

TEST_CASE("scalar step variance against the closed form") {
    const ScalarPlant plant{0.3, 1.0, 0.0};
    const double dt = 0.5;
    const int n = 100000;
    Rng rng(2024);
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = exact_scalar_step(0.0, dt, plant, rng.normal());
        sum += z;
        sum_sq += z * z;
    }
    const double var = (sum_sq - sum * sum / n) / (n - 1);
    const double expected = (1.0 - std::exp(-0.3)) / 0.6;
    const double se = expected * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(var - expected) <= 3.0 * se);
    CHECK(scalar_step_variance(plant, dt) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("scalar step composes over subintervals") {
    const ScalarPlant plant{0.7, 1.0, 0.0};
    const double d1 = 0.4, d2 = 1.1;
    // Means compose exactly.
    const double two_hops = exact_scalar_step(
        exact_scalar_step(3.0, d1, plant, 0.0), d2, plant, 0.0);
    CHECK(two_hops == doctest::Approx(exact_scalar_step(3.0, d1 + d2, plant, 0.0))
                          .epsilon(1e-14));
    // Variances compose through the decay of the first leg.
    const double composed = std::exp(-2.0 * plant.gamma * d2) *
                                scalar_step_variance(plant, d1) +
                            scalar_step_variance(plant, d2);
    CHECK(std::abs(composed - scalar_step_variance(plant, d1 + d2)) <= 1e-12);
}

TEST_CASE("driftless discretization is the identity with linear noise growth") {
    const LinearPlant plant = make_linear_plant(
        -1e-14 * Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2),
        Mat::Zero(2, 2));
    const DiscretizedStep step = discretize_linear(plant, 1.0);
    CHECK(step.F.isApprox(Mat::Identity(2, 2), 1e-10));
    CHECK(step.Q.isApprox(Mat::Identity(2, 2), 1e-10));
}

TEST_CASE("scalar discretization matches the OU closed form") {
    const double gamma = 0.7, sigma = 1.3, dt = 0.9;
    const LinearPlant plant = make_linear_plant(
        -gamma * Mat::Identity(1, 1), sigma * Mat::Identity(1, 1),
        Mat::Identity(1, 1), Mat::Zero(1, 1));
    const DiscretizedStep step = discretize_linear(plant, dt);
    CHECK(step.F(0, 0) == doctest::Approx(std::exp(-gamma * dt)).epsilon(1e-12));
    const ScalarPlant scalar{gamma, sigma, 0.0};
    CHECK(step.Q(0, 0) ==
          doctest::Approx(scalar_step_variance(scalar, dt)).epsilon(1e-12));
}

TEST_CASE("cascade discretization against the quadrature oracle") {
    const LinearPlant plant = cascade_plant(0.7);
    const double dt = 0.7;
    const DiscretizedStep step = discretize_linear(plant, dt);
    CHECK((step.F - cascade_transition(0.7, dt)).cwiseAbs().maxCoeff() <= 1e-12);
    const Mat q_oracle = cascade_noise_quadrature(0.7, dt);
    CHECK((step.Q - q_oracle).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("discretization semigroup property") {
    const LinearPlant plant = cascade_plant(0.3);
    const double d1 = 0.35, d2 = 1.05;
    const DiscretizedStep s1 = discretize_linear(plant, d1);
    const DiscretizedStep s2 = discretize_linear(plant, d2);
    const DiscretizedStep s12 = discretize_linear(plant, d1 + d2);
    CHECK((s12.F - s2.F * s1.F).cwiseAbs().maxCoeff() <= 1e-10);
    const Mat q_composed = s2.F * s1.Q * s2.F.transpose() + s2.Q;
    CHECK((s12.Q - q_composed).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero step is the identity") {
    const LinearPlant plant = cascade_plant(0.7);
    const DiscretizedStep step = discretize_linear(plant, 0.0);
    Vec z(2);
    z << 1.0, -2.0;
    Vec noise(2);
    noise << 5.0, 5.0;  // irrelevant, Q = 0
    CHECK(exact_vector_step(z, step, noise) == z);
}

TEST_CASE("vector step mean and sampled covariance") {
    const LinearPlant plant = cascade_plant(0.7);
    const DiscretizedStep step = discretize_linear(plant, 0.8);
    Vec z(2);
    z << 1.0, -1.0;
    CHECK((exact_vector_step(z, step, Vec::Zero(2)) - step.F * z).norm() <= 1e-14);

    const int n = 100000;
    Rng rng(77);
    Mat cov = Mat::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        Vec noise(2);
        noise << rng.normal(), rng.normal();
        const Vec x = exact_vector_step(Vec::Zero(2), step, noise);
        cov += x * x.transpose();
    }
    cov /= n;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            const double se = std::sqrt(
                (step.Q(r, r) * step.Q(c, c) + step.Q(r, c) * step.Q(r, c)) / n);
            CHECK(std::abs(cov(r, c) - step.Q(r, c)) <= 3.0 * se);
        }
}

TEST_CASE("indefinite covariance is rejected") {
    DiscretizedStep bad;
    bad.F = Mat::Identity(2, 2);
    bad.Q = Mat::Identity(2, 2);
    bad.Q(1, 1) = -1.0;
    bad.dt = 1.0;
    CHECK_THROWS_AS(exact_vector_step(Vec::Zero(2), bad, Vec::Zero(2)),
                    NumericalError);
}

TEST_CASE("measurements") {
    Vec z(2);
    z << 0.4, -1.2;

    // Noiseless output map.
    Mat C(1, 2);
    C << 0.0, 1.0;
    const Vec y = measure(z, C, Mat::Zero(1, 1), Vec::Zero(1));
    CHECK(y[0] == -1.2);

    // Identity map: sampled covariance approaches R.
    const Mat R = 0.09 * Mat::Identity(2, 2);
    Rng rng(5);
    const int n = 100000;
    Mat cov = Mat::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        Vec noise(2);
        noise << rng.normal(), rng.normal();
        const Vec sample = measure(Vec::Zero(2), Mat::Identity(2, 2), R, noise);
        cov += sample * sample.transpose();
    }
    cov /= n;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            const double se =
                std::sqrt((R(r, r) * R(c, c) + R(r, c) * R(r, c)) / n);
            CHECK(std::abs(cov(r, c) - R(r, c)) <= 3.0 * se);
        }

    Vec wrong(3);
    CHECK_THROWS_AS(measure(wrong, C, Mat::Zero(1, 1), Vec::Zero(1)),
                    InvalidSpecError);
}

TEST_CASE("decay margin from construction matches the 2x2 closed form") {
    const double gamma = 0.7;
    const LinearPlant plant = cascade_plant(gamma);
    // A + A' = [[-2g, g], [g, -2g]]: eigenvalues -2g +- g.
    CHECK(plant.lambda_bar == doctest::Approx(-gamma).epsilon(1e-12));

    Mat unstable(1, 1);
    unstable << 0.1;
    CHECK_THROWS_AS(make_linear_plant(unstable, Mat::Identity(1, 1),
                                      Mat::Identity(1, 1), Mat::Zero(1, 1)),
                    InvalidSpecError);
}
