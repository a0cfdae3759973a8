#include "stormbench/constellation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "stormbench/error.hpp"

namespace stormbench {

namespace {

struct Layout {
    unsigned i_bits;
    unsigned q_bits;
};

Layout layout_of(Modulation m) {
    switch (m) {
        case Modulation::Bpsk: return {1, 0};
        case Modulation::Qpsk: return {1, 1};
        case Modulation::Qam8: return {2, 1};
        case Modulation::Qam16: return {2, 2};
        case Modulation::Qam64: return {3, 3};
    }
    return {1, 0};
}

// Amplitude of Gray-coded axis label g on an L-level PAM axis: label 0 maps to
// the most positive level, so BPSK sends bit 0 as +1.
double axis_level(std::uint32_t g, unsigned bits) {
    const std::uint32_t levels = 1u << bits;
    const std::uint32_t index = gray_decode(g);
    return static_cast<double>(levels - 1) - 2.0 * static_cast<double>(index);
}

}  // namespace

std::uint32_t gray_encode(std::uint32_t v) noexcept { return v ^ (v >> 1); }

std::uint32_t gray_decode(std::uint32_t g) noexcept {
    std::uint32_t v = g;
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) v ^= v >> shift;
    return v;
}

std::string_view to_string(Modulation m) noexcept {
    switch (m) {
        case Modulation::Bpsk: return "BPSK";
        case Modulation::Qpsk: return "QPSK";
        case Modulation::Qam8: return "8QAM";
        case Modulation::Qam16: return "16QAM";
        case Modulation::Qam64: return "64QAM";
    }
    return "?";
}

std::optional<Modulation> parse_modulation(std::string_view name) noexcept {
    for (auto m : all_modulations()) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

const std::vector<Modulation>& all_modulations() {
    static const std::vector<Modulation> all = {Modulation::Bpsk, Modulation::Qpsk, Modulation::Qam8,
                                                Modulation::Qam16, Modulation::Qam64};
    return all;
}

Constellation::Constellation(Modulation m) : modulation_(m) {
    const auto lay = layout_of(m);
    i_bits_ = lay.i_bits;
    q_bits_ = lay.q_bits;
    bits_per_symbol_ = i_bits_ + q_bits_;
    const std::uint32_t count = 1u << bits_per_symbol_;
    points_.resize(count);

    double power = 0.0;
    for (std::uint32_t label = 0; label < count; ++label) {
        const std::uint32_t gi = label >> q_bits_;
        const std::uint32_t gq = label & ((1u << q_bits_) - 1u);
        const double re = axis_level(gi, i_bits_);
        const double im = q_bits_ == 0 ? 0.0 : axis_level(gq, q_bits_);
        points_[label] = {re, im};
        power += re * re + im * im;
    }
    scale_ = 1.0 / std::sqrt(power / static_cast<double>(count));
    for (auto& p : points_) p *= scale_;

    min_distance_ = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < points_.size(); ++a) {
        for (std::size_t b = a + 1; b < points_.size(); ++b) {
            min_distance_ = std::min(min_distance_, std::abs(points_[a] - points_[b]));
        }
    }
}

std::vector<Sample> Constellation::map_bits(std::span<const std::uint8_t> bits) const {
    if (bits.size() % bits_per_symbol_ != 0) {
        fail(ErrorCode::LengthError, "bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                                         std::to_string(bits_per_symbol_) + " bits per " +
                                         std::string(to_string(modulation_)) + " symbol");
    }
    std::vector<Sample> out;
    out.reserve(bits.size() / bits_per_symbol_);
    for (std::size_t i = 0; i < bits.size(); i += bits_per_symbol_) {
        std::uint32_t label = 0;
        for (unsigned b = 0; b < bits_per_symbol_; ++b) label = (label << 1) | (bits[i + b] & 1u);
        out.push_back(points_[label]);
    }
    return out;
}

std::vector<Sample> Constellation::map_labels(std::span<const std::uint32_t> labels) const {
    std::vector<Sample> out;
    out.reserve(labels.size());
    for (auto label : labels) out.push_back(points_.at(label));
    return out;
}

std::uint32_t Constellation::decide(Sample s) const noexcept {
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t label = 0; label < points_.size(); ++label) {
        const double d = std::norm(s - points_[label]);
        if (d < best_d) {
            best_d = d;
            best = label;
        }
    }
    return best;
}

std::vector<std::uint8_t> Constellation::label_bits(std::uint32_t label) const {
    std::vector<std::uint8_t> bits(bits_per_symbol_);
    for (unsigned b = 0; b < bits_per_symbol_; ++b) {
        bits[b] = static_cast<std::uint8_t>((label >> (bits_per_symbol_ - 1 - b)) & 1u);
    }
    return bits;
}

}  // namespace stormbench
