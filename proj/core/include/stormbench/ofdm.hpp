#pragma once

#include <cstddef>
#include <vector>

#include "stormbench/grid.hpp"
#include "stormbench/iq_buffer.hpp"

namespace stormbench {

struct OfdmConfig {
    std::size_t n_subcarriers = 64;
    std::size_t cp_length = 16;
    std::vector<bool> active_mask;  // empty means every subcarrier but DC

    static OfdmConfig with_defaults(std::size_t n_subcarriers, std::size_t cp_length);

    std::size_t symbol_length() const noexcept { return n_subcarriers + cp_length; }
    bool is_active(std::size_t k) const noexcept { return active_mask.empty() ? k != 0 : active_mask[k]; }
    std::size_t active_count() const noexcept;
};

// Throws ConfigError for a non power-of-two size, cp_length >= n_subcarriers
// or a mask of the wrong length.
void check(const OfdmConfig& cfg);

// One row per OFDM symbol, columns in natural DFT order (column 0 is DC).
// Each row goes through a unitary inverse DFT and gets the last cp_length
// samples prepended. Throws ShapeError for a wrong row length and ConfigError
// when an inactive subcarrier carries energy.
IqBuffer ofdm_modulate(const ComplexGrid& grid, const OfdmConfig& cfg, double sample_rate,
                       std::int64_t start_timestamp = 0);

// Strips the cyclic prefix and applies the forward unitary DFT. Throws
// ShapeError unless the length is a whole number of symbols.
ComplexGrid ofdm_demodulate(const IqBuffer& buffer, const OfdmConfig& cfg);

}  // namespace stormbench
