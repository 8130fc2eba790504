#pragma once

#include <cstdint>

#include "nmkt/rational.hpp"

namespace nmkt {

/// Deterministic PRNG with a fixed bit stream (xoshiro256** seeded via
/// splitmix64). std::random distributions are implementation-defined, so the
/// draw helpers below are hand-rolled to keep traces byte-identical across
/// platforms and standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n);

    /// Uniform exact rational in [lo, hi) with granularity 2^-63.
    Rat uniform_rat(const Rat& lo, const Rat& hi);

    /// Independent child stream, stable under the parent's state (counter
    /// split, does not consume parent entropy).
    Rng child(uint64_t index) const;

  private:
    uint64_t s_[4];
    uint64_t seed_;
};

}  // namespace nmkt
