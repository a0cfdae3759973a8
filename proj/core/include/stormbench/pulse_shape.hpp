#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "stormbench/iq_buffer.hpp"

namespace stormbench {

struct PulseShape {
    int samples_per_symbol = 8;
    double rolloff = 0.35;
    int span_symbols = 8;

    std::size_t tap_count() const noexcept {
        return static_cast<std::size_t>(span_symbols) * static_cast<std::size_t>(samples_per_symbol) + 1;
    }
    // Delay from a symbol's injection to its matched-filter peak.
    std::size_t loopback_delay() const noexcept { return tap_count() - 1; }
};

// Throws ConfigError unless samples_per_symbol >= 2, rolloff in [0, 1] and
// span_symbols is a positive even number.
void check(const PulseShape& shape);

// Unit-energy root-raised-cosine taps of length span*sps + 1, symmetric about
// the centre tap. The textbook truncated response leaves about 1e-2 of
// intersymbol interference after the matched filter; the taps returned here
// are the nearest symmetric vector (minimum-norm Newton projection) whose
// autocorrelation vanishes exactly at every nonzero multiple of sps. When no
// such vector exists close to the RRC (sps == 2) the plain truncated RRC is
// returned. Results are cached; safe to call concurrently.
std::shared_ptr<const std::vector<double>> pulse_taps(const PulseShape& shape);

// Textbook truncated RRC, unit energy, no orthogonality refinement.
std::vector<double> rrc_prototype(const PulseShape& shape);

// Full interpolating convolution: symbols upsampled by sps, filtered with
// pulse_taps and scaled by sqrt(sps) so unit-energy symbols give unit mean
// power. Output length is n*sps + taps - 1 (0 for no symbols).
IqBuffer pulse_shape(std::span<const Sample> symbols, const PulseShape& shape, double sample_rate,
                     std::int64_t start_timestamp = 0);

// Matched filter sampled at symbol instants k*sps + loopback_delay() + offset,
// for k in [0, n_symbols). Samples beyond the end of `samples` read as zero.
std::vector<Sample> matched_filter(std::span<const Sample> samples, std::size_t n_symbols, const PulseShape& shape,
                                   std::size_t offset = 0);

// Matched-filter output at one sample index (same scaling as matched_filter).
Sample matched_filter_at(std::span<const Sample> samples, std::size_t center_index, std::span<const double> taps,
                         int samples_per_symbol);

// Streaming form of pulse_shape: each pushed symbol releases the next sps
// output samples. The emitted stream equals the first n*sps samples of
// pulse_shape() over the same symbols, bit for bit.
class PulseShaper {
public:
    explicit PulseShaper(const PulseShape& shape);

    void push(Sample symbol, std::vector<Sample>& out);

    const PulseShape& shape() const noexcept { return shape_; }

private:
    PulseShape shape_;
    std::shared_ptr<const std::vector<double>> taps_;
    std::vector<Sample> history_;  // ring of the last span+1 symbols
    std::size_t pushed_ = 0;
    double scale_;
};

}  // namespace stormbench
