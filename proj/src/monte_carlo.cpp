#include "ctsched/monte_carlo.hpp"

#include <cmath>
#include <string>

#include "ctsched/errors.hpp"

namespace ctsched {

namespace {

struct KahanSum {
    double value = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = value + y;
        carry = (t - value) - y;
        value = t;
    }
};

}  // namespace

MonteCarloSummary monte_carlo(const std::function<Vec(int, Rng&)>& runner,
                              int replicates, std::uint64_t master_seed) {
    if (replicates < 2)
        throw InvalidSpecError("need at least two replicates for intervals");

    const Rng master(master_seed);
    std::vector<KahanSum> sum, sum_sq;
    Index size = -1;
    for (int rep = 0; rep < replicates; ++rep) {
        Rng rng = master.substream(static_cast<std::uint64_t>(rep));
        Vec values;
        try {
            values = runner(rep, rng);
        } catch (const Error& e) {
            throw Error("replicate " + std::to_string(rep) + " failed: " + e.what());
        }
        if (size < 0) {
            size = values.size();
            sum.resize(static_cast<std::size_t>(size));
            sum_sq.resize(static_cast<std::size_t>(size));
        } else if (values.size() != size) {
            throw Error("replicate " + std::to_string(rep) +
                        " returned a different number of points");
        }
        for (Index i = 0; i < size; ++i) {
            sum[static_cast<std::size_t>(i)].add(values[i]);
            sum_sq[static_cast<std::size_t>(i)].add(values[i] * values[i]);
        }
    }

    MonteCarloSummary summary;
    summary.replicates = replicates;
    summary.mean.resize(size);
    summary.variance.resize(size);
    summary.ci_half.resize(size);
    const double n = static_cast<double>(replicates);
    for (Index i = 0; i < size; ++i) {
        const double s = sum[static_cast<std::size_t>(i)].value;
        const double s2 = sum_sq[static_cast<std::size_t>(i)].value;
        summary.mean[i] = s / n;
        summary.variance[i] = std::max(0.0, (s2 - s * s / n) / (n - 1.0));
        summary.ci_half[i] = kCiQuantile * std::sqrt(summary.variance[i] / n);
    }
    return summary;
}

}  // namespace ctsched
