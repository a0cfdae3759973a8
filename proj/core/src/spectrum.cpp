#include "stormbench/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "httplib.h"
#include "stormbench/error.hpp"
#include "stormbench/fft.hpp"

namespace stormbench {

std::string_view to_string(WindowKind w) noexcept {
    switch (w) {
        case WindowKind::Rectangular: return "rectangular";
        case WindowKind::Hann: return "hann";
        case WindowKind::Hamming: return "hamming";
        case WindowKind::Blackman: return "blackman";
    }
    return "?";
}

WindowKind parse_window(std::string_view name) {
    for (auto w : {WindowKind::Rectangular, WindowKind::Hann, WindowKind::Hamming, WindowKind::Blackman}) {
        if (to_string(w) == name) return w;
    }
    fail(ErrorCode::ConfigError, "unknown window " + std::string(name));
}

std::vector<double> window_taps(WindowKind kind, std::size_t n) {
    std::vector<double> w(n, 1.0);
    // Periodic forms, the usual choice for spectral analysis.
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = step * static_cast<double>(i);
        switch (kind) {
            case WindowKind::Rectangular: break;
            case WindowKind::Hann: w[i] = 0.5 - 0.5 * std::cos(x); break;
            case WindowKind::Hamming: w[i] = 0.54 - 0.46 * std::cos(x); break;
            case WindowKind::Blackman: w[i] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x); break;
        }
    }
    return w;
}

double SpectrumFrame::frequency(std::size_t bin) const noexcept {
    const auto half = static_cast<double>(psd_bins.size() / 2);
    return center_offset + (static_cast<double>(bin) - half) * bin_spacing;
}

double SpectrumFrame::total_power() const noexcept {
    double s = 0.0;
    for (double p : psd_bins) s += p;
    return s * bin_spacing;
}

SpectrumFrame compute_psd(std::span<const Sample> x, double fs, const PsdOptions& opt, std::int64_t timestamp,
                          std::uint64_t window_id) {
    const std::size_t n = opt.fft_size;
    if (n < 2) fail(ErrorCode::ConfigError, "fft_size must be at least 2");
    if (!(opt.overlap >= 0.0 && opt.overlap <= 0.9)) fail(ErrorCode::ConfigError, "overlap must lie in [0, 0.9]");
    if (!(fs > 0)) fail(ErrorCode::ConfigError, "sample_rate must be positive");
    if (x.size() < n) {
        fail(ErrorCode::InsufficientData,
             "PSD needs at least " + std::to_string(n) + " samples, got " + std::to_string(x.size()));
    }
    const auto step = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - opt.overlap))));
    const std::size_t segments = (x.size() - n) / step + 1;

    const auto w = window_taps(opt.window, n);
    double w_energy = 0.0;
    for (double v : w) w_energy += v * v;

    std::vector<double> acc(n, 0.0);
    std::vector<Sample> buf(n);
    for (std::size_t s = 0; s < segments; ++s) {
        const auto* seg = x.data() + s * step;
        for (std::size_t i = 0; i < n; ++i) buf[i] = seg[i] * w[i];
        dft_raw(buf, buf);
        for (std::size_t k = 0; k < n; ++k) acc[k] += std::norm(buf[k]);
    }

    SpectrumFrame f;
    f.bin_spacing = fs / static_cast<double>(n);
    f.timestamp = timestamp;
    f.window_id = window_id;
    f.psd_bins.resize(n);
    const double scale = 1.0 / (static_cast<double>(segments) * fs * w_energy);
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < n; ++k) f.psd_bins[(k + half) % n] = acc[k] * scale;
    return f;
}

SpectrumFrame compute_psd(const IqBuffer& buffer, const PsdOptions& options, std::uint64_t window_id) {
    return compute_psd(buffer.samples(), buffer.sample_rate(), options, buffer.start_timestamp(), window_id);
}

double occupied_bandwidth(const SpectrumFrame& f, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorCode::RangeError, "fraction must lie in (0, 1)");
    const std::size_t n = f.psd_bins.size();
    double total = 0.0;
    for (double p : f.psd_bins) total += p;
    if (!(total > 0.0)) return 0.0;
    const double tail = (1.0 - fraction) / 2.0 * total;

    // Each bin's power is spread uniformly over its width.
    auto edge = [&](double target) {
        double cum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double p = f.psd_bins[k];
            if (cum + p >= target && p > 0.0) {
                const double frac = (target - cum) / p;
                return f.frequency(k) - 0.5 * f.bin_spacing + frac * f.bin_spacing;
            }
            cum += p;
        }
        return f.frequency(n - 1) + 0.5 * f.bin_spacing;
    };
    return edge(total - tail) - edge(tail);
}

double band_power(const SpectrumFrame& f, double lo, double hi) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.psd_bins.size(); ++k) {
        const double fk = f.frequency(k);
        if (fk >= lo && fk <= hi) s += f.psd_bins[k];
    }
    return s * f.bin_spacing;
}

std::size_t peak_bin(const SpectrumFrame& f) {
    return static_cast<std::size_t>(std::max_element(f.psd_bins.begin(), f.psd_bins.end()) - f.psd_bins.begin());
}

nlohmann::json to_json(const SpectrumFrame& f, bool base64_bins) {
    nlohmann::json j{{"window_id", f.window_id},
                     {"timestamp", f.timestamp},
                     {"bin_spacing", f.bin_spacing},
                     {"center_offset", f.center_offset},
                     {"n_bins", f.psd_bins.size()}};
    if (base64_bins) {
        // float64 little-endian; every supported target is little-endian.
        std::string raw(f.psd_bins.size() * sizeof(double), '\0');
        std::memcpy(raw.data(), f.psd_bins.data(), raw.size());
        j["bins_b64"] = httplib::detail::base64_encode(raw);
    } else {
        j["bins"] = f.psd_bins;
    }
    return j;
}

SpectrumMonitor::SpectrumMonitor(double sample_rate, MonitorOptions options)
    : sample_rate_(sample_rate), options_(options) {
    if (!(sample_rate > 0)) fail(ErrorCode::ConfigError, "sample_rate must be positive");
    if (!(options_.frame_rate > 0)) fail(ErrorCode::ConfigError, "monitor frame_rate must be positive");
    if (options_.analysis_samples < options_.psd.fft_size) {
        fail(ErrorCode::ConfigError, "analysis_samples must cover at least one FFT");
    }
    period_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(sample_rate / options_.frame_rate)));
}

std::vector<SpectrumFrame> SpectrumMonitor::push(const IqBuffer& buffer) {
    std::vector<SpectrumFrame> produced;
    std::vector<std::shared_ptr<SpectrumSubscription>> subs;
    {
        std::lock_guard lock(mutex_);
        if (!has_pending_ || buffer.start_timestamp() != pending_start_ + static_cast<std::int64_t>(pending_.size())) {
            pending_.clear();
            pending_start_ = buffer.start_timestamp();
            has_pending_ = true;
        }
        pending_.insert(pending_.end(), buffer.samples().begin(), buffer.samples().end());
        while (pending_.size() >= period_) {
            const std::size_t take = std::min(period_, options_.analysis_samples);
            if (take >= options_.psd.fft_size) {
                std::span<const Sample> seg(pending_.data() + (period_ - take), take);
                produced.push_back(compute_psd(seg, sample_rate_, options_.psd,
                                               pending_start_ + static_cast<std::int64_t>(period_ - take), next_id_++));
            }
            pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(period_));
            pending_start_ += static_cast<std::int64_t>(period_);
        }
        std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
        for (const auto& w : subscribers_) {
            if (auto s = w.lock()) subs.push_back(std::move(s));
        }
        for (const auto& frame : produced) {
            for (const auto& s : subs) {
                if (!(s->rate_ > 0)) continue;
                const double min_gap = sample_rate_ / s->rate_;
                if (s->delivered_ && static_cast<double>(frame.timestamp - s->last_) < min_gap - 0.5) continue;
                s->delivered_ = true;
                s->last_ = frame.timestamp;
                s->queue_.push(frame);
            }
        }
    }
    return produced;
}

std::shared_ptr<SpectrumSubscription> SpectrumMonitor::subscribe(double rate) {
    if (!(rate >= 0) || !std::isfinite(rate)) fail(ErrorCode::RangeError, "stream rate must be >= 0");
    auto s = std::make_shared<SpectrumSubscription>(rate, options_.queue_capacity);
    std::lock_guard lock(mutex_);
    subscribers_.push_back(s);
    return s;
}

void SpectrumMonitor::close_all() {
    std::lock_guard lock(mutex_);
    for (const auto& w : subscribers_) {
        if (auto s = w.lock()) s->close();
    }
    subscribers_.clear();
}

std::uint64_t SpectrumMonitor::frames_produced() const {
    std::lock_guard lock(mutex_);
    return next_id_;
}

}  // namespace stormbench
