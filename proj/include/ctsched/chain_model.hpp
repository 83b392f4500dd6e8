#pragma once

#include <vector>

#include "ctsched/types.hpp"

namespace ctsched {

// Counter index convention, fixed once and used everywhere: with 0-based
// sensor s, counter 2s+1 jumps idle -> sensor s (a sampling event) and
// counter 2s jumps sensor s -> idle. States are the sensors 0..L-1
// followed by the idle node at index L. In the 1-based convention of the
// rate tables this makes even counters the sampling ones.

inline int sampling_counter(int sensor) { return 2 * sensor + 1; }
inline int return_counter(int sensor) { return 2 * sensor; }

/// True where counter i can fire from a state, i.e. G_i e_state != 0.
inline bool counter_fires_from(int counter, int state, int idle_state) {
    return counter % 2 == 1 ? state == idle_state : state == counter / 2;
}

/// State the counter lands on when it fires.
inline int counter_target(int counter, int idle_state) {
    return counter % 2 == 1 ? counter / 2 : idle_state;
}

/// Network description: L sensors, base Poisson rates, control
/// sensitivities and sampling-cost weights.
struct ChainSpec {
    int sensor_count = 0;  ///< L
    Vec base_rates;        ///< mu0, length 2L, ordered by the counter convention
    Mat sensitivity;       ///< alpha, 2L x 2L
    Vec cost_weights;      ///< xi, length L, nonnegative

    int state_count() const { return sensor_count + 1; }
    int counter_count() const { return 2 * sensor_count; }
    int idle_state() const { return sensor_count; }

    /// Spec with identity sensitivity and uniform rates: every sensor
    /// samples at base rate `rate_sample` and returns at `rate_return`.
    static ChainSpec uniform(int sensor_count, double rate_sample,
                             double rate_return, const Vec& cost_weights);

    /// Throws InvalidSpecError on negative rates/weights or shape mismatch.
    void validate() const;
};

/// Jump generators and derived cost/control matrices of the chain.
struct ChainMatrices {
    std::vector<Mat> G;  ///< m jump generators, n x n
    Mat A;               ///< drift, sum of mu0[i] * G[i]
    std::vector<Mat> B;  ///< control sensitivities, B[i] = sum_j alpha(j,i) G[j]
    Mat S;               ///< m x n running-cost matrix, supported on the idle column
    Vec c;               ///< length-n cost vector, supported on the idle entry
    Vec mu0;             ///< base rates, echoed from the spec
    Mat alpha;           ///< rate sensitivity, echoed from the spec

    int state_count() const { return static_cast<int>(A.rows()); }
    int counter_count() const { return static_cast<int>(G.size()); }
    int idle_state() const { return state_count() - 1; }
};

/// One detected departure from generator structure.
struct GeneratorViolation {
    enum class Kind { negative_off_diagonal, column_sum };
    Kind kind;
    Index row;
    Index col;
    double value;
};

struct GeneratorCheck {
    bool pass = true;
    std::vector<GeneratorViolation> violations;
};

/// Unit-vector jump generators for an L-sensor chain. Counter 2s+1 maps
/// the idle basis vector to sensor s's and counter 2s maps it back.
std::vector<Mat> build_generators(int sensor_count);

/// All chain matrices for a validated spec. Deterministic: equal specs
/// give bit-identical matrices.
ChainMatrices build_matrices(const ChainSpec& spec);

/// Passes iff off-diagonals are >= -tol and every column sums to within
/// tol of zero.
GeneratorCheck validate_generator(const Mat& M, double tol = 1e-9);

}  // namespace ctsched
