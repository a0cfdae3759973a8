#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stormbench/iq_buffer.hpp"

namespace stormbench {

struct SpreadConfig {
    int chips_per_symbol = 31;
    std::uint64_t pn_seed = 1;
};

void check(const SpreadConfig& cfg);

// +/-1 chip code of length chips_per_symbol, read from a maximal-length LFSR
// whose degree is the smallest m with 2^m - 1 >= chips_per_symbol. The seed
// picks the nonzero starting state, so 31 chips at the default seed are one
// full period of a degree-5 m-sequence.
std::vector<int> pn_code(const SpreadConfig& cfg);

// Short-code spreading: every symbol is repeated over the code and
// multiplied chip by chip.
std::vector<Sample> spread(std::span<const Sample> symbols, std::span<const int> code);
std::vector<Sample> spread(std::span<const Sample> symbols, const SpreadConfig& cfg);

// Correlates each block of chips with the code and averages. Throws
// LengthError when the chip count is not a multiple of the code length.
std::vector<Sample> despread(std::span<const Sample> chips, std::span<const int> code);
std::vector<Sample> despread(std::span<const Sample> chips, const SpreadConfig& cfg);

}  // namespace stormbench
