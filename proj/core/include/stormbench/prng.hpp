#pragma once

#include <cstdint>
#include <random>

namespace stormbench {

// Deterministic pseudo-random source. The raw engine sequence of
// std::mt19937_64 is fixed by the standard; the uniform and Gaussian
// transforms are implemented here rather than through std::*_distribution,
// whose algorithms are implementation-defined.
class Prng {
public:
    explicit Prng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Top `bits` bits of the next word, bits in [1, 64].
    std::uint64_t next_bits(unsigned bits) { return engine_() >> (64u - bits); }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n > 0. Rejection sampling avoids modulo bias.
    std::uint64_t below(std::uint64_t n);

    // Standard normal (zero mean, unit variance), Box-Muller with a cached
    // second variate.
    double gaussian();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Mixes a base seed with a stream label so independent consumers of one
// experiment seed draw uncorrelated sequences (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

}  // namespace stormbench
