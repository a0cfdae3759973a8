#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stormbench/broadcast.hpp"
#include "stormbench/iq_buffer.hpp"

namespace stormbench {

enum class WindowKind { Rectangular, Hann, Hamming, Blackman };

std::string_view to_string(WindowKind w) noexcept;
WindowKind parse_window(std::string_view name);
std::vector<double> window_taps(WindowKind kind, std::size_t n);

struct PsdOptions {
    std::size_t fft_size = 1024;
    double overlap = 0.5;  // fraction of fft_size shared by consecutive segments
    WindowKind window = WindowKind::Hann;
};

// Welch PSD estimate. Bins run from -fs/2 to fs/2 - bin_spacing (DC at
// index fft_size/2), linear power per Hz.
struct SpectrumFrame {
    std::vector<double> psd_bins;
    double bin_spacing = 0.0;   // Hz
    double center_offset = 0.0;  // Hz, frequency of the DC bin
    std::int64_t timestamp = 0;  // stream index of the first analysed sample
    std::uint64_t window_id = 0;

    double frequency(std::size_t bin) const noexcept;
    // Sum of psd * bin_spacing: mean power of the analysed samples.
    double total_power() const noexcept;
};

// Throws InsufficientData when fewer than fft_size samples are given and
// ConfigError for overlap outside [0, 0.9] or fft_size < 2.
SpectrumFrame compute_psd(std::span<const Sample> samples, double sample_rate, const PsdOptions& options = {},
                          std::int64_t timestamp = 0, std::uint64_t window_id = 0);
SpectrumFrame compute_psd(const IqBuffer& buffer, const PsdOptions& options = {}, std::uint64_t window_id = 0);

// Width of the band holding `fraction` of the power, with (1 - fraction)/2
// excluded on each side. Edges are interpolated inside bins. 0 for a frame
// without power.
double occupied_bandwidth(const SpectrumFrame& frame, double fraction = 0.99);
// Power between two frequencies (whole bins whose centre lies inside).
double band_power(const SpectrumFrame& frame, double f_low, double f_high);
std::size_t peak_bin(const SpectrumFrame& frame);

nlohmann::json to_json(const SpectrumFrame& frame, bool base64_bins = true);

struct MonitorOptions {
    PsdOptions psd{};
    double frame_rate = 10.0;             // frames per second of stream time
    std::size_t analysis_samples = 8192;  // samples analysed per frame
    std::size_t queue_capacity = 32;      // per subscriber, drop-oldest
};

// Rate-limited view of the monitor's frames. Frames are delivered at most
// `rate` per second of stream time and in timestamp order; a full queue
// discards its oldest frame.
class SpectrumSubscription {
public:
    SpectrumSubscription(double rate, std::size_t capacity) : rate_(rate), queue_(capacity) {}

    double rate() const noexcept { return rate_; }
    Subscription<SpectrumFrame>& frames() noexcept { return queue_; }
    void close() { queue_.close(); }

private:
    friend class SpectrumMonitor;
    double rate_;
    std::int64_t last_ = 0;
    bool delivered_ = false;
    Subscription<SpectrumFrame> queue_;
};

// Turns the monitor tap into SpectrumFrames. Every frame_rate^-1 seconds of
// stream time it estimates the PSD of the most recent analysis_samples
// samples. A timestamp discontinuity (dropped buffers) restarts the
// accumulation. Thread-safe.
class SpectrumMonitor {
public:
    SpectrumMonitor(double sample_rate, MonitorOptions options = {});

    // Returns the frames produced by this buffer.
    std::vector<SpectrumFrame> push(const IqBuffer& buffer);

    // rate 0 yields no frames but keeps the subscription open.
    std::shared_ptr<SpectrumSubscription> subscribe(double rate);
    void close_all();

    const MonitorOptions& options() const noexcept { return options_; }
    std::uint64_t frames_produced() const;

private:
    double sample_rate_;
    MonitorOptions options_;
    std::size_t period_;
    mutable std::mutex mutex_;
    std::vector<Sample> pending_;
    std::int64_t pending_start_ = 0;
    bool has_pending_ = false;
    std::uint64_t next_id_ = 0;
    std::vector<std::weak_ptr<SpectrumSubscription>> subscribers_;
};

}  // namespace stormbench
