#include <doctest.h>

#include <cmath>

#include "ctsched/chain_analysis.hpp"
#include "ctsched/chain_model.hpp"
#include "ctsched/errors.hpp"
#include "ctsched/policy_solver.hpp"

using namespace ctsched;

namespace {

ChainSpec water_tank_spec(double xi1 = 0.5, double xi2 = 0.1) {
    Vec xi(2);
    xi << xi1, xi2;
    return ChainSpec::uniform(2, 1.0, 10.0, xi);
}

Vec frequencies_for(const ChainSpec& spec) {
    const ChainMatrices mats = build_matrices(spec);
    const StationaryPolicy policy = solve_stationary(mats);
    const Mat closed = closed_loop_generator(mats, policy);
    const Vec p = stationary_distribution(closed);
    return sampling_frequencies(spec, mats, policy, p).frequency;
}

}  // namespace

TEST_CASE("uncontrolled closed loop equals the drift") {
    const ChainSpec spec = ChainSpec::uniform(2, 1.0, 10.0, Vec::Zero(2));
    const ChainMatrices mats = build_matrices(spec);
    const StationaryPolicy policy = solve_stationary(mats);
    CHECK(closed_loop_generator(mats, policy) == mats.A);
}

TEST_CASE("two-state closed loop by hand") {
    // Sampling rate b from idle, return rate a from the sensor, zero
    // weights: states ordered (sensor, idle).
    const double b = 3.0, a = 7.0;
    const ChainSpec spec = ChainSpec::uniform(1, b, a, Vec::Zero(1));
    const ChainMatrices mats = build_matrices(spec);
    const StationaryPolicy policy = solve_stationary(mats);
    Mat expected(2, 2);
    expected << -a, b, a, -b;
    CHECK(closed_loop_generator(mats, policy).isApprox(expected, 1e-15));
}

TEST_CASE("closed loop conserves probability on the controlled chain") {
    const ChainMatrices mats = build_matrices(water_tank_spec());
    const StationaryPolicy policy = solve_stationary(mats);
    const Mat closed = closed_loop_generator(mats, policy);
    CHECK(closed.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("two-state stationary distribution in closed form") {
    const double a = 1.0, b = 10.0;  // idle -> sensor rate a, sensor -> idle rate b
    const ChainSpec spec = ChainSpec::uniform(1, a, b, Vec::Zero(1));
    const ChainMatrices mats = build_matrices(spec);
    const StationaryPolicy policy = solve_stationary(mats);
    const Vec p = stationary_distribution(closed_loop_generator(mats, policy));
    CHECK(std::abs(p[0] - a / (a + b)) <= 1e-12);
    CHECK(std::abs(p[1] - b / (a + b)) <= 1e-12);
}

TEST_CASE("stationary distribution properties on the controlled chain") {
    const ChainMatrices mats = build_matrices(water_tank_spec());
    const StationaryPolicy policy = solve_stationary(mats);
    const Mat closed = closed_loop_generator(mats, policy);
    const Vec p = stationary_distribution(closed);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-10);
    CHECK(p.minCoeff() > 0.0);
    CHECK((closed * p).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("reducible chains are rejected") {
    Mat two_islands = Mat::Zero(4, 4);
    two_islands.topLeftCorner(2, 2) << -1, 1, 1, -1;
    two_islands.bottomRightCorner(2, 2) << -2, 2, 2, -2;
    CHECK_THROWS_AS(stationary_distribution(two_islands), NonErgodicError);
}

TEST_CASE("water-tank frequencies") {
    const Vec f = frequencies_for(water_tank_spec());
    CHECK(std::abs(f[0] - 0.66) <= 0.01);
    CHECK(std::abs(f[1] - 0.83) <= 0.01);
}

TEST_CASE("frequency table across weight choices") {
    // Rows of the tuning table: weight pairs and the frequencies they buy.
    const struct {
        double xi1, xi2, f1, f2;
    } rows[] = {
        {0.1, 0.1, 0.8040, 0.8040},
        {0.5, 0.1, 0.6577, 0.8279},
        {1.0, 0.1, 0.4656, 0.8559},
        {2.0, 0.1, 0.0451, 0.9045},
    };
    for (const auto& row : rows) {
        const Vec f = frequencies_for(water_tank_spec(row.xi1, row.xi2));
        CHECK(std::abs(f[0] - row.f1) <= 5e-3);
        CHECK(std::abs(f[1] - row.f2) <= 5e-3);
    }
}

TEST_CASE("raising a weight trades its frequency to the others") {
    double previous_f1 = 1e300;
    double previous_f2 = 0.0;
    for (double xi1 : {0.1, 0.5, 1.0, 2.0}) {
        const Vec f = frequencies_for(water_tank_spec(xi1, 0.1));
        CHECK(f[0] < previous_f1);
        CHECK(f[1] >= previous_f2);
        previous_f1 = f[0];
        previous_f2 = f[1];
    }
}

TEST_CASE("uncontrolled two-state frequency in closed form") {
    const double a = 1.0, b = 10.0;
    const ChainSpec spec = ChainSpec::uniform(1, a, b, Vec::Zero(1));
    const ChainMatrices mats = build_matrices(spec);
    const StationaryPolicy policy = solve_stationary(mats);
    const Vec p = stationary_distribution(closed_loop_generator(mats, policy));
    const FrequencyReport report = sampling_frequencies(spec, mats, policy, p);
    CHECK(std::abs(report.frequency[0] - a * b / (a + b)) <= 1e-10);
    CHECK(std::abs(report.mean_gap[0] - (a + b) / (a * b)) <= 1e-9);
}

TEST_CASE("silent sensor reports infinite mean gap") {
    const ChainSpec spec = ChainSpec::uniform(1, 0.0, 10.0, Vec::Zero(1));
    const ChainMatrices mats = build_matrices(spec);
    const StationaryPolicy policy = solve_stationary(mats);
    const Vec p = stationary_distribution(closed_loop_generator(mats, policy));
    const FrequencyReport report = sampling_frequencies(spec, mats, policy, p);
    CHECK(report.frequency[0] == 0.0);
    CHECK(std::isinf(report.mean_gap[0]));
}

TEST_CASE("mean dynamics stay a probability vector and settle") {
    const ChainSpec spec = water_tank_spec();
    const ChainMatrices mats = build_matrices(spec);
    const StationaryPolicy policy = solve_stationary(mats);
    const Mat closed = closed_loop_generator(mats, policy);
    const Vec p_limit = stationary_distribution(closed);

    Vec p = Vec::Unit(3, 0);  // start in a sensor state
    const double h = 0.01;
    for (int step = 0; step < 5000; ++step) {
        const Vec f1 = closed * p;
        const Vec f2 = closed * (p + 0.5 * h * f1);
        const Vec f3 = closed * (p + 0.5 * h * f2);
        const Vec f4 = closed * (p + h * f3);
        p += (h / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
        CHECK(p.minCoeff() >= -1e-12);
        CHECK(std::abs(p.sum() - 1.0) <= 1e-10);
    }
    CHECK((p - p_limit).lpNorm<Eigen::Infinity>() <= 1e-8);
}
