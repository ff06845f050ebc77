#pragma once

#include <cstdint>

namespace fsseg {

// Deterministic 64-bit generator (splitmix64 stream). Identical seeds
// produce identical value streams; each instance owns its state, no
// globals. Single-owner: hand one Rng to one consumer at a time.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();

    // Uniform integer in [0, n); n must be positive.
    std::uint32_t uniform_int(std::uint32_t n);

    // Standard normal draw (Marsaglia polar, cached spare).
    double normal();

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stateless avalanche mix of one 64-bit word.
std::uint64_t mix_seed(std::uint64_t x);

// Stable substream seed for (base, a, b), e.g. (run seed, fold, episode).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

}  // namespace fsseg
