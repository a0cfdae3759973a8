#include "stormbench/otfs.hpp"

#include <string>

#include "stormbench/error.hpp"
#include "stormbench/fft.hpp"

namespace stormbench {

namespace {

void require_shape(const ComplexGrid& g, std::size_t rows, std::size_t cols, const char* what) {
    if (g.rows() != rows || g.cols() != cols) {
        fail(ErrorCode::ShapeError, std::string(what) + " grid is " + std::to_string(g.rows()) + "x" +
                                        std::to_string(g.cols()) + ", expected " + std::to_string(rows) + "x" +
                                        std::to_string(cols));
    }
}

}  // namespace

void check(const OtfsConfig& cfg) {
    if (!is_power_of_two(cfg.m_delay_bins) || !is_power_of_two(cfg.n_doppler_bins)) {
        fail(ErrorCode::ConfigError, "OTFS grid dimensions must be powers of two");
    }
    if (cfg.cp_length >= cfg.m_delay_bins) {
        fail(ErrorCode::ConfigError, "cp_length must be smaller than m_delay_bins");
    }
}

ComplexGrid isfft(const ComplexGrid& dd, const OtfsConfig& cfg) {
    check(cfg);
    const std::size_t m_bins = cfg.m_delay_bins;
    const std::size_t n_bins = cfg.n_doppler_bins;
    require_shape(dd, m_bins, n_bins, "delay-Doppler");

    // exp(+j 2 pi n k / N) over Doppler is an inverse DFT; exp(-j 2 pi m l / M)
    // over delay is a forward DFT. Both unitary, so the product carries the
    // 1/sqrt(NM) factor.
    ComplexGrid tf(n_bins, m_bins);
    ComplexGrid stage(m_bins, n_bins);
    for (std::size_t l = 0; l < m_bins; ++l) idft_unitary(dd.row(l), stage.row(l));
    std::vector<Sample> col(m_bins);
    std::vector<Sample> res(m_bins);
    for (std::size_t n = 0; n < n_bins; ++n) {
        for (std::size_t l = 0; l < m_bins; ++l) col[l] = stage(l, n);
        dft_unitary(col, res);
        for (std::size_t m = 0; m < m_bins; ++m) tf(n, m) = res[m];
    }
    return tf;
}

ComplexGrid sfft(const ComplexGrid& tf, const OtfsConfig& cfg) {
    check(cfg);
    const std::size_t m_bins = cfg.m_delay_bins;
    const std::size_t n_bins = cfg.n_doppler_bins;
    require_shape(tf, n_bins, m_bins, "time-frequency");

    ComplexGrid stage(m_bins, n_bins);
    std::vector<Sample> res(m_bins);
    for (std::size_t n = 0; n < n_bins; ++n) {
        idft_unitary(tf.row(n), res);
        for (std::size_t l = 0; l < m_bins; ++l) stage(l, n) = res[l];
    }
    ComplexGrid dd(m_bins, n_bins);
    for (std::size_t l = 0; l < m_bins; ++l) dft_unitary(stage.row(l), dd.row(l));
    return dd;
}

IqBuffer otfs_modulate(const ComplexGrid& dd, const OtfsConfig& cfg, double sample_rate,
                       std::int64_t start_timestamp) {
    const ComplexGrid tf = isfft(dd, cfg);
    const std::size_t m_bins = cfg.m_delay_bins;
    std::vector<Sample> out;
    out.reserve(cfg.frame_length());
    std::vector<Sample> body(m_bins);
    for (std::size_t n = 0; n < cfg.n_doppler_bins; ++n) {
        idft_unitary(tf.row(n), body);
        out.insert(out.end(), body.end() - static_cast<std::ptrdiff_t>(cfg.cp_length), body.end());
        out.insert(out.end(), body.begin(), body.end());
    }
    return IqBuffer(std::move(out), sample_rate, start_timestamp);
}

ComplexGrid otfs_demodulate(const IqBuffer& buffer, const OtfsConfig& cfg) {
    check(cfg);
    if (buffer.size() != cfg.frame_length()) {
        fail(ErrorCode::ShapeError, "OTFS frame must be " + std::to_string(cfg.frame_length()) + " samples, got " +
                                        std::to_string(buffer.size()));
    }
    const std::size_t m_bins = cfg.m_delay_bins;
    const std::size_t slot = m_bins + cfg.cp_length;
    ComplexGrid tf(cfg.n_doppler_bins, m_bins);
    const auto samples = buffer.samples();
    for (std::size_t n = 0; n < cfg.n_doppler_bins; ++n) {
        dft_unitary(samples.subspan(n * slot + cfg.cp_length, m_bins), tf.row(n));
    }
    return sfft(tf, cfg);
}

}  // namespace stormbench
