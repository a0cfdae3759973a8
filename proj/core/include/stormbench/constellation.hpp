#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stormbench/iq_buffer.hpp"

namespace stormbench {

enum class Modulation { Bpsk, Qpsk, Qam8, Qam16, Qam64 };

std::string_view to_string(Modulation m) noexcept;
std::optional<Modulation> parse_modulation(std::string_view name) noexcept;
const std::vector<Modulation>& all_modulations();

// Gray-labelled constellation with unit average symbol energy. points()[label]
// is the point carrying the bit pattern `label` (MSB first). Square and
// rectangular QAM split the label into an in-phase part (high bits) and a
// quadrature part (low bits); each axis is Gray coded independently.
// The tables are listed in docs/constellations.md.
class Constellation {
public:
    explicit Constellation(Modulation m);

    Modulation modulation() const noexcept { return modulation_; }
    unsigned bits_per_symbol() const noexcept { return bits_per_symbol_; }
    std::size_t size() const noexcept { return points_.size(); }
    std::span<const Sample> points() const noexcept { return points_; }
    const Sample& point(std::uint32_t label) const { return points_.at(label); }

    // Groups of bits_per_symbol() bits (values 0/1, MSB first) to points.
    // Throws LengthError when the bit count is not a multiple.
    std::vector<Sample> map_bits(std::span<const std::uint8_t> bits) const;

    std::vector<Sample> map_labels(std::span<const std::uint32_t> labels) const;

    // Minimum-distance decision.
    std::uint32_t decide(Sample s) const noexcept;

    std::vector<std::uint8_t> label_bits(std::uint32_t label) const;

    // Smallest distance between any two distinct points.
    double min_distance() const noexcept { return min_distance_; }

private:
    Modulation modulation_;
    unsigned bits_per_symbol_;
    unsigned i_bits_ = 0;
    unsigned q_bits_ = 0;
    double scale_ = 1.0;
    std::vector<Sample> points_;
    double min_distance_ = 0.0;
};

std::uint32_t gray_encode(std::uint32_t v) noexcept;
std::uint32_t gray_decode(std::uint32_t g) noexcept;

}  // namespace stormbench
