#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"
#include "stormbench/channel.hpp"
#include "stormbench/constellation.hpp"
#include "stormbench/generators.hpp"
#include "stormbench/metrics.hpp"
#include "stormbench/session.hpp"

namespace stormbench {

// The victim link: framed single-carrier transmission, each frame a known
// access preamble followed by a payload of frame_bits bits repeated
// `repetition` times.
struct LinkConfig {
    Modulation modulation = Modulation::Qpsk;
    std::size_t frame_bits = 1024;
    int repetition = 1;  // 1, 2 or 4; majority vote across copies
    int samples_per_symbol = 4;
    double rolloff = 0.35;
    std::size_t preamble_length = 64;
    std::uint64_t preamble_seed = 0x5eed;

    std::size_t payload_symbols() const;  // per copy
    std::size_t frame_symbols() const;
};

void check(const LinkConfig& cfg);

// Fills the next out.size() interference samples (sequential pulls starting
// at stream index 0).
using InterferenceSource = std::function<void(std::span<Sample> out)>;

InterferenceSource generator_source(std::shared_ptr<WaveformGenerator> generator);

// Pulls interference from a session's transmitter output, advancing the
// session as needed. Once the session stops emitting, the source yields
// zeros. Replaces the session's transmitter sink.
InterferenceSource session_source(Session& session);

struct LinkTrialOptions {
    double duration = 1.0;  // seconds
    double sample_rate = 1e6;
    double window = 1.0;  // metrics window, seconds
    std::uint64_t seed = 1;
    KldOptions kld{};
    nlohmann::json context = nlohmann::json::object();
    // Called with each window's record as soon as the window is complete.
    std::function<void(const MetricsRecord&)> on_record;
    // Preamble matched-filter outputs of each window, with and without
    // interference, in frame order; lets a caller capture what ASER and KLD
    // were computed from.
    std::function<void(std::int64_t window, std::span<const Sample> rx, std::span<const Sample> ref)>
        on_window_symbols;
};

struct LinkTrialResult {
    std::vector<double> throughput;  // per window, bits/s
    std::vector<MetricsRecord> records;
    double nominal_throughput = 0.0;  // F / frame duration
    std::size_t frames_sent = 0;
    std::size_t frames_delivered = 0;
};

// Streams the link through the scene with genie timing: the matched filter
// is sampled at the known symbol instants, a least-squares gain from each
// frame's preamble equalises that frame, and a frame is delivered iff its
// voted payload has no symbol error. Throughput counts delivered bits per
// window (frames are credited to the window holding their last sample).
// ASER and KLD come from the preamble matched-filter outputs; the KLD
// reference is the same receive chain without interference. An empty
// source means no interference.
LinkTrialResult run_link_trial(const LinkConfig& link, const InterferenceSource& interference,
                               const SceneConfig& scene, const LinkTrialOptions& options);

}  // namespace stormbench
