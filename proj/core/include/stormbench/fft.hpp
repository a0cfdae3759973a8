#pragma once

#include <span>
#include <vector>

#include "stormbench/iq_buffer.hpp"

namespace stormbench {

// Unitary DFTs (scale 1/sqrt(N) in both directions), backed by FFTW.
// Forward:  X[k] = 1/sqrt(N) sum_n x[n] exp(-j 2 pi k n / N)
// Inverse:  x[n] = 1/sqrt(N) sum_k X[k] exp(+j 2 pi k n / N)
// `in` and `out` may alias. Thread-safe.
void dft_unitary(std::span<const Sample> in, std::span<Sample> out);
void idft_unitary(std::span<const Sample> in, std::span<Sample> out);

std::vector<Sample> dft_unitary(std::span<const Sample> in);
std::vector<Sample> idft_unitary(std::span<const Sample> in);

// Unnormalised forward transform (sum without scaling), used by the PSD
// estimator.
void dft_raw(std::span<const Sample> in, std::span<Sample> out);

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace stormbench
