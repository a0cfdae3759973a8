#include "stormbench/nco.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stormbench/error.hpp"

namespace stormbench {

GainSetting::GainSetting(double gain_db) : db_(gain_db) {
    if (!std::isfinite(gain_db)) fail(ErrorCode::RangeError, "gain must be finite");
}

double GainSetting::amplitude() const noexcept { return std::pow(10.0, db_ / 20.0); }
double GainSetting::power() const noexcept { return std::pow(10.0, db_ / 10.0); }

IqBuffer apply_gain(const IqBuffer& buffer, GainSetting gain) {
    const double a = gain.amplitude();
    std::vector<Sample> out(buffer.samples().begin(), buffer.samples().end());
    for (auto& s : out) s *= a;
    return IqBuffer(std::move(out), buffer.sample_rate(), buffer.start_timestamp());
}

double wrap_phase(double phase) noexcept { return std::remainder(phase, 2.0 * std::numbers::pi); }

double nco_phase(double phase0, double freq, std::int64_t n, double sample_rate) noexcept {
    // Reduce f*n/fs to a fraction of a cycle before scaling so long streams
    // keep full phase precision.
    const double cycles = freq * static_cast<double>(n) / sample_rate;
    const double frac = cycles - std::floor(cycles);
    return phase0 + 2.0 * std::numbers::pi * frac;
}

MixResult mix(const IqBuffer& buffer, double freq_offset, double initial_phase) {
    const double fs = buffer.sample_rate();
    if (!(std::abs(freq_offset) < fs / 2.0)) {
        fail(ErrorCode::RangeError, "frequency offset " + std::to_string(freq_offset) + " Hz beyond Nyquist (" +
                                        std::to_string(fs / 2.0) + " Hz)");
    }
    std::vector<Sample> out(buffer.size());
    const auto in = buffer.samples();
    for (std::size_t n = 0; n < in.size(); ++n) {
        out[n] = in[n] * std::polar(1.0, nco_phase(initial_phase, freq_offset, static_cast<std::int64_t>(n), fs));
    }
    const double final_phase =
        wrap_phase(nco_phase(initial_phase, freq_offset, static_cast<std::int64_t>(in.size()), fs));
    return {IqBuffer(std::move(out), fs, buffer.start_timestamp()), final_phase};
}

}  // namespace stormbench
