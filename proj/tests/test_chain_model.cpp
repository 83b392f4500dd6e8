#include <doctest.h>

#include "ctsched/chain_model.hpp"
#include "ctsched/errors.hpp"

using namespace ctsched;

namespace {

ChainSpec two_tank_spec() {
    // L = 2, identity sensitivity, sampling rate 1, return rate 10,
    // weights (0.5, 0.1).
    Vec xi(2);
    xi << 0.5, 0.1;
    return ChainSpec::uniform(2, 1.0, 10.0, xi);
}

}  // namespace

TEST_CASE("generators for a single sensor") {
    const auto G = build_generators(1);
    REQUIRE(G.size() == 2);
    Mat up(2, 2);  // idle (state 1) -> sensor (state 0)
    up << 0, 1, 0, -1;
    Mat down(2, 2);
    down << -1, 0, 1, 0;
    CHECK(G[sampling_counter(0)] == up);
    CHECK(G[return_counter(0)] == down);
}

TEST_CASE("jump only fires from its source state") {
    const auto G = build_generators(2);
    const Mat& up1 = G[sampling_counter(1)];  // idle -> sensor 1
    const Vec from_idle = up1 * Vec::Unit(3, 2);
    CHECK(from_idle == Vec::Unit(3, 1) - Vec::Unit(3, 2));
    CHECK((up1 * Vec::Unit(3, 0)).isZero(0.0));
}

TEST_CASE("generator structure invariants") {
    for (int L : {1, 2, 5}) {
        for (const Mat& G : build_generators(L)) {
            CHECK(G.colwise().sum().isZero(0.0));
            int negative_diag = 0;
            int positive_off = 0;
            for (Index j = 0; j < G.cols(); ++j)
                for (Index i = 0; i < G.rows(); ++i) {
                    if (G(i, j) == 0.0) continue;
                    if (i == j) {
                        CHECK(G(i, j) == -1.0);
                        ++negative_diag;
                    } else {
                        CHECK(G(i, j) == 1.0);
                        ++positive_off;
                    }
                }
            CHECK(negative_diag == 1);
            CHECK(positive_off == 1);
        }
    }
}

TEST_CASE("no sensors is rejected") {
    CHECK_THROWS_AS(build_generators(0), InvalidSpecError);
    ChainSpec spec;
    spec.sensor_count = 0;
    CHECK_THROWS_AS(spec.validate(), InvalidSpecError);
}

TEST_CASE("cost vector and matrix on the two-sensor network") {
    const ChainMatrices mats = build_matrices(two_tank_spec());
    Vec c_expected(3);
    c_expected << 0.0, 0.0, 0.6;
    CHECK(mats.c.isApprox(c_expected, 1e-15));

    Mat S_expected = Mat::Zero(4, 3);
    S_expected(sampling_counter(0), 2) = 0.5;
    S_expected(sampling_counter(1), 2) = 0.1;
    CHECK(mats.S.isApprox(S_expected, 1e-15));
}

TEST_CASE("zero weights zero the cost terms") {
    const ChainSpec spec = ChainSpec::uniform(2, 1.0, 10.0, Vec::Zero(2));
    const ChainMatrices mats = build_matrices(spec);
    CHECK(mats.S.isZero(0.0));
    CHECK(mats.c.isZero(0.0));
}

TEST_CASE("drift and control matrices conserve probability") {
    const ChainMatrices mats = build_matrices(two_tank_spec());
    CHECK(mats.A.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    for (const Mat& B : mats.B)
        CHECK(B.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(validate_generator(mats.A).pass);
    // Off-diagonals of A carry the base rates.
    CHECK(mats.A(0, 2) == 1.0);
    CHECK(mats.A(2, 0) == 10.0);
}

TEST_CASE("construction is deterministic") {
    const ChainMatrices a = build_matrices(two_tank_spec());
    const ChainMatrices b = build_matrices(two_tank_spec());
    CHECK(a.A == b.A);
    CHECK(a.S == b.S);
    CHECK(a.c == b.c);
    for (std::size_t i = 0; i < a.G.size(); ++i) {
        CHECK(a.G[i] == b.G[i]);
        CHECK(a.B[i] == b.B[i]);
    }
}

TEST_CASE("negative base rate is rejected") {
    ChainSpec spec = two_tank_spec();
    spec.base_rates[1] = -0.5;
    CHECK_THROWS_AS(build_matrices(spec), InvalidSpecError);
}

TEST_CASE("generator validation") {
    Mat ok(2, 2);
    ok << -1, 2, 1, -2;
    CHECK(validate_generator(ok).pass);

    Mat bad(2, 2);
    bad << 1, -1, -1, 1;
    const GeneratorCheck check = validate_generator(bad);
    CHECK_FALSE(check.pass);
    bool sign_violation = false;
    for (const auto& v : check.violations)
        sign_violation |= v.kind == GeneratorViolation::Kind::negative_off_diagonal;
    CHECK(sign_violation);
}
