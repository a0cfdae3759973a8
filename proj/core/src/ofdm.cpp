#include "stormbench/ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stormbench/error.hpp"
#include "stormbench/fft.hpp"

namespace stormbench {

double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

OfdmConfig OfdmConfig::with_defaults(std::size_t n_subcarriers, std::size_t cp_length) {
    OfdmConfig cfg;
    cfg.n_subcarriers = n_subcarriers;
    cfg.cp_length = cp_length;
    return cfg;
}

std::size_t OfdmConfig::active_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t k = 0; k < n_subcarriers; ++k) n += is_active(k) ? 1 : 0;
    return n;
}

void check(const OfdmConfig& cfg) {
    if (!is_power_of_two(cfg.n_subcarriers)) {
        fail(ErrorCode::ConfigError, "n_subcarriers must be a power of two, got " + std::to_string(cfg.n_subcarriers));
    }
    if (cfg.cp_length >= cfg.n_subcarriers) {
        fail(ErrorCode::ConfigError, "cp_length must be smaller than n_subcarriers");
    }
    if (!cfg.active_mask.empty() && cfg.active_mask.size() != cfg.n_subcarriers) {
        fail(ErrorCode::ConfigError, "active_mask length must equal n_subcarriers");
    }
}

IqBuffer ofdm_modulate(const ComplexGrid& grid, const OfdmConfig& cfg, double sample_rate,
                       std::int64_t start_timestamp) {
    check(cfg);
    const std::size_t n = cfg.n_subcarriers;
    if (grid.rows() > 0 && grid.cols() != n) {
        fail(ErrorCode::ShapeError, "grid rows have " + std::to_string(grid.cols()) + " entries, expected " +
                                        std::to_string(n));
    }
    std::vector<Sample> out;
    out.reserve(grid.rows() * cfg.symbol_length());
    std::vector<Sample> body(n);
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        const auto row = grid.row(r);
        for (std::size_t k = 0; k < n; ++k) {
            if (!cfg.is_active(k) && row[k] != Sample{0.0, 0.0}) {
                fail(ErrorCode::ConfigError, "inactive subcarrier " + std::to_string(k) + " carries a nonzero value");
            }
        }
        idft_unitary(row, body);
        out.insert(out.end(), body.end() - static_cast<std::ptrdiff_t>(cfg.cp_length), body.end());
        out.insert(out.end(), body.begin(), body.end());
    }
    return IqBuffer(std::move(out), sample_rate, start_timestamp);
}

ComplexGrid ofdm_demodulate(const IqBuffer& buffer, const OfdmConfig& cfg) {
    check(cfg);
    const std::size_t sym = cfg.symbol_length();
    if (buffer.size() % sym != 0) {
        fail(ErrorCode::ShapeError, "buffer length " + std::to_string(buffer.size()) +
                                        " is not a whole number of OFDM symbols of " + std::to_string(sym));
    }
    const std::size_t rows = buffer.size() / sym;
    ComplexGrid grid(rows, cfg.n_subcarriers);
    const auto samples = buffer.samples();
    for (std::size_t r = 0; r < rows; ++r) {
        dft_unitary(samples.subspan(r * sym + cfg.cp_length, cfg.n_subcarriers), grid.row(r));
    }
    return grid;
}

}  // namespace stormbench
