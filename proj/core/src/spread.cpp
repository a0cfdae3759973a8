#include "stormbench/spread.hpp"

#include <array>
#include <string>

#include "stormbench/error.hpp"

namespace stormbench {

namespace {

// Feedback masks for a right-shifting Fibonacci LFSR: the new top bit is the
// parity of (state & mask). Each mask was checked to give period 2^m - 1.
constexpr std::array<std::uint32_t, 17> kPrimitiveTaps = {
    0,     0,     0x3,   0x3,   0x3,    0x5,   0x3,    0x3,   0x87,
    0x11,  0x9,   0x5,   0x107, 0x27,   0x1007, 0x3,   0x100B,
};

}  // namespace

void check(const SpreadConfig& cfg) {
    if (cfg.chips_per_symbol < 1 || cfg.chips_per_symbol > 65535) {
        fail(ErrorCode::ConfigError, "chips_per_symbol must lie in [1, 65535], got " +
                                         std::to_string(cfg.chips_per_symbol));
    }
}

std::vector<int> pn_code(const SpreadConfig& cfg) {
    check(cfg);
    unsigned degree = 2;
    while (((1u << degree) - 1u) < static_cast<unsigned>(cfg.chips_per_symbol)) ++degree;
    const std::uint32_t mask = (1u << degree) - 1u;
    const std::uint32_t period = mask;
    std::uint32_t state = static_cast<std::uint32_t>(cfg.pn_seed % period) + 1u;
    const std::uint32_t taps = kPrimitiveTaps[degree];

    std::vector<int> code(static_cast<std::size_t>(cfg.chips_per_symbol));
    for (auto& chip : code) {
        chip = (state & 1u) ? -1 : +1;
        const std::uint32_t feedback = static_cast<std::uint32_t>(__builtin_parity(state & taps));
        state = ((state >> 1) | (feedback << (degree - 1))) & mask;
    }
    return code;
}

std::vector<Sample> spread(std::span<const Sample> symbols, std::span<const int> code) {
    std::vector<Sample> chips;
    chips.reserve(symbols.size() * code.size());
    for (const auto& s : symbols) {
        for (int c : code) chips.push_back(c > 0 ? s : -s);
    }
    return chips;
}

std::vector<Sample> spread(std::span<const Sample> symbols, const SpreadConfig& cfg) {
    const auto code = pn_code(cfg);
    return spread(symbols, std::span<const int>(code));
}

std::vector<Sample> despread(std::span<const Sample> chips, std::span<const int> code) {
    const std::size_t n = code.size();
    if (n == 0 || chips.size() % n != 0) {
        fail(ErrorCode::LengthError, "chip count " + std::to_string(chips.size()) + " is not a multiple of " +
                                         std::to_string(n) + " chips per symbol");
    }
    std::vector<Sample> symbols;
    symbols.reserve(chips.size() / n);
    for (std::size_t i = 0; i < chips.size(); i += n) {
        // Mean written as first + mean(deviation from first): identical
        // despread chips reproduce the symbol exactly.
        const Sample first = code[0] > 0 ? chips[i] : -chips[i];
        Sample dev{0.0, 0.0};
        for (std::size_t c = 1; c < n; ++c) {
            const Sample v = code[c] > 0 ? chips[i + c] : -chips[i + c];
            dev += v - first;
        }
        symbols.push_back(first + dev / static_cast<double>(n));
    }
    return symbols;
}

std::vector<Sample> despread(std::span<const Sample> chips, const SpreadConfig& cfg) {
    const auto code = pn_code(cfg);
    return despread(chips, std::span<const int>(code));
}

}  // namespace stormbench
