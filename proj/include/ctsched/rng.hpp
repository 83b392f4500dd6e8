#pragma once

#include <cmath>
#include <cstdint>

namespace ctsched {

/// Counter-based splittable random generator.
///
/// Each output is a strong 64-bit mix of (key, counter), so a stream is
/// fully determined by its key and any number of independent streams can
/// be derived by mixing a stream index into the key. Monte Carlo
/// replicates each get their own substream; results do not depend on the
/// order replicates run in.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(mix(key ^ 0x6a09e667f3bcc908ULL)) {}

    /// Independent stream derived from (this key, index).
    Rng substream(std::uint64_t index) const {
        return Rng(mix(key_ + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    std::uint64_t next_u64() {
        return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
    }

    /// Uniform draw strictly inside (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 6.283185307179586476925286766559 * uniform();
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ctsched
