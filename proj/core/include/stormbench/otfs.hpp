#pragma once

#include <cstddef>

#include "stormbench/grid.hpp"
#include "stormbench/iq_buffer.hpp"

namespace stormbench {

struct OtfsConfig {
    std::size_t m_delay_bins = 64;    // subcarriers
    std::size_t n_doppler_bins = 16;  // time slots per frame
    std::size_t cp_length = 16;

    std::size_t frame_length() const noexcept { return n_doppler_bins * (m_delay_bins + cp_length); }
};

void check(const OtfsConfig& cfg);

// Delay-Doppler grids are (m_delay_bins x n_doppler_bins): element (l, k) is
// delay bin l, Doppler bin k. Time-frequency grids are
// (n_doppler_bins x m_delay_bins): element (n, m) is time slot n, subcarrier m.
//
// ISFFT:  X[n,m] = 1/sqrt(NM) sum_k sum_l x[l,k] exp(j 2 pi (n k / N - m l / M))
ComplexGrid isfft(const ComplexGrid& dd, const OtfsConfig& cfg);
ComplexGrid sfft(const ComplexGrid& tf, const OtfsConfig& cfg);

// ISFFT, then per time slot a unitary inverse DFT across subcarriers with a
// cyclic prefix (Heisenberg transform). Output is one frame of
// frame_length() samples.
IqBuffer otfs_modulate(const ComplexGrid& dd, const OtfsConfig& cfg, double sample_rate,
                       std::int64_t start_timestamp = 0);

// Inverts otfs_modulate for exactly one frame.
ComplexGrid otfs_demodulate(const IqBuffer& buffer, const OtfsConfig& cfg);

}  // namespace stormbench
