#pragma once

#include <cstdint>

#include "stormbench/iq_buffer.hpp"

namespace stormbench {

// Gain in dB relative to unit average power.
class GainSetting {
public:
    constexpr GainSetting() = default;
    explicit GainSetting(double gain_db);

    double db() const noexcept { return db_; }
    double amplitude() const noexcept;
    double power() const noexcept;

private:
    double db_ = 0.0;
};

IqBuffer apply_gain(const IqBuffer& buffer, GainSetting gain);

struct MixResult {
    IqBuffer buffer;
    double final_phase;  // phase for the sample after the last, wrapped to [-pi, pi]
};

// Multiplies sample n by exp(j(2*pi*f*n/fs + phase)). Passing final_phase into
// the next call continues the oscillator without a discontinuity. Throws
// RangeError when |freq_offset| >= fs/2.
MixResult mix(const IqBuffer& buffer, double freq_offset, double initial_phase);

// exp(j(phase0 + 2*pi*f*n/fs)) for an absolute sample index. Generators use
// this rather than an accumulated phase so output does not depend on how a
// stream is chunked.
double nco_phase(double phase0, double freq, std::int64_t n, double sample_rate) noexcept;

double wrap_phase(double phase) noexcept;

}  // namespace stormbench
