#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stormbench/iq_buffer.hpp"
#include "stormbench/prng.hpp"

namespace stormbench {

struct Tap {
    std::size_t delay = 0;  // samples
    Sample gain{1.0, 0.0};

    bool operator==(const Tap&) const = default;
};

struct ChannelModel {
    double distance = 1.0;  // m
    double reference_distance = 1.0;
    double path_loss_exponent = 2.0;
    std::vector<Tap> taps;  // empty: a single unit tap
    double noise_psd = 0.0;  // power per Hz; only the link model's is used

    bool operator==(const ChannelModel&) const = default;
};

// Throws ConfigError unless distance >= reference > 0, exponent in [1.5, 6],
// noise_psd >= 0 and tap delays strictly increase.
void check(const ChannelModel& model);

// 10 n log10(d / d0).
double path_loss_db(const ChannelModel& model);

// Sum of |g|^2 over the taps (1 for none).
double tap_power(const ChannelModel& model);

// Scales by 10^(-PL/20) and convolves with the taps. The output keeps the
// input's length and timestamp; samples before the buffer read as zero.
IqBuffer propagate(const IqBuffer& signal, const ChannelModel& model);
void propagate_into(std::span<const Sample> in, std::span<Sample> out, const ChannelModel& model);

struct SceneConfig {
    std::string label;
    ChannelModel tx_rx;
    ChannelModel interferer_rx;
    // Link transmit level relative to unit power. Presets set this to place
    // the link at a chosen SIR/SNR operating point.
    double link_gain_db = 0.0;
    // Interferer-receiver distances a sweep visits (scenario3); empty for
    // fixed geometries.
    std::vector<double> interferer_distances;
    std::string notes;
};

void check(const SceneConfig& scene);

// Noise variance (total complex power) per sample at `sample_rate`.
double noise_power(const SceneConfig& scene, double sample_rate);

// propagate(link * link_gain, tx_rx) + propagate(interference, interferer_rx)
// + complex Gaussian noise of variance noise_psd * fs drawn from `seed`.
// An empty interference buffer means none. Throws ConfigError on sample rate
// mismatch and LengthError when the timestamps or lengths disagree.
IqBuffer receive(const IqBuffer& link, const IqBuffer& interference, const SceneConfig& scene, std::uint64_t seed);

// Streaming tap-delay-line filter with a fixed amplitude folded into the
// taps. Keeps the last max_delay inputs between calls.
class TapFilter {
public:
    TapFilter(const ChannelModel& model, double amplitude);
    // out = filtered input, or out += filtered input when accumulating.
    void run(std::span<const Sample> in, std::span<Sample> out, bool accumulate);

private:
    std::vector<Tap> taps_;
    std::vector<Sample> history_;
    std::size_t max_delay_ = 0;
};

// Streaming form: keeps the filter tails of both paths and the noise PRNG
// between blocks, so consecutive calls equal one call over the concatenation.
class ReceiverChannel {
public:
    ReceiverChannel(SceneConfig scene, double sample_rate, std::uint64_t seed);

    // Adds noise and the propagated inputs. `interference` may be empty.
    void process(std::span<const Sample> link, std::span<const Sample> interference, std::span<Sample> out);

    // Independent pieces, for receivers that need a clean reference branch.
    void propagate_link(std::span<const Sample> link, std::span<Sample> out);
    void propagate_interference(std::span<const Sample> interference, std::span<Sample> out);
    void add_noise(std::span<Sample> out);

    const SceneConfig& scene() const noexcept { return scene_; }

private:
    SceneConfig scene_;
    TapFilter link_;
    TapFilter interference_;
    double noise_sigma_;  // per real dimension
    Prng noise_;
};

nlohmann::json to_json(const ChannelModel& m);
nlohmann::json to_json(const SceneConfig& s);
ChannelModel channel_model_from_json(const nlohmann::json& j);
SceneConfig scene_from_json(const nlohmann::json& j);
// Built-in presets scenario1..scenario3 by name, or a path to a scene file.
SceneConfig load_scene(const std::string& name_or_path);
std::vector<std::string> scene_preset_names();

}  // namespace stormbench
