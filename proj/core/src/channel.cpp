#include "stormbench/channel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "stormbench/error.hpp"
#include "stormbench/resources.hpp"

namespace stormbench {

using nlohmann::json;

void check(const ChannelModel& m) {
    if (!(m.reference_distance > 0)) fail(ErrorCode::ConfigError, "reference_distance must be positive");
    if (!(m.distance >= m.reference_distance)) fail(ErrorCode::ConfigError, "distance must be at least reference_distance");
    if (!(m.path_loss_exponent >= 1.5 && m.path_loss_exponent <= 6.0)) {
        fail(ErrorCode::ConfigError, "path_loss_exponent must lie in [1.5, 6]");
    }
    if (!(m.noise_psd >= 0) || !std::isfinite(m.noise_psd)) fail(ErrorCode::ConfigError, "noise_psd must be >= 0");
    for (std::size_t i = 1; i < m.taps.size(); ++i) {
        if (m.taps[i].delay <= m.taps[i - 1].delay) fail(ErrorCode::ConfigError, "tap delays must strictly increase");
    }
}

double path_loss_db(const ChannelModel& m) {
    return 10.0 * m.path_loss_exponent * std::log10(m.distance / m.reference_distance);
}

double tap_power(const ChannelModel& m) {
    if (m.taps.empty()) return 1.0;
    double p = 0.0;
    for (const auto& t : m.taps) p += std::norm(t.gain);
    return p;
}

TapFilter::TapFilter(const ChannelModel& model, double amplitude) {
    taps_ = model.taps.empty() ? std::vector<Tap>{Tap{}} : model.taps;
    for (auto& t : taps_) t.gain *= amplitude;
    max_delay_ = taps_.back().delay;
    history_.assign(max_delay_, Sample{});
}

void TapFilter::run(std::span<const Sample> in, std::span<Sample> out, bool accumulate) {
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
        Sample acc{};
        for (const auto& t : taps_) {
            if (i >= t.delay) {
                acc += t.gain * in[i - t.delay];
            } else {
                acc += t.gain * history_[max_delay_ + i - t.delay];
            }
        }
        out[i] = accumulate ? out[i] + acc : acc;
    }
    if (max_delay_ == 0) return;
    if (n >= max_delay_) {
        std::copy(in.end() - static_cast<std::ptrdiff_t>(max_delay_), in.end(), history_.begin());
    } else {
        std::rotate(history_.begin(), history_.begin() + static_cast<std::ptrdiff_t>(n), history_.end());
        std::copy(in.begin(), in.end(), history_.end() - static_cast<std::ptrdiff_t>(n));
    }
}

void propagate_into(std::span<const Sample> in, std::span<Sample> out, const ChannelModel& model) {
    check(model);
    if (out.size() != in.size()) fail(ErrorCode::LengthError, "propagate_into: output length differs from input");
    TapFilter fir(model, std::pow(10.0, -path_loss_db(model) / 20.0));
    fir.run(in, out, false);
}

IqBuffer propagate(const IqBuffer& signal, const ChannelModel& model) {
    std::vector<Sample> out(signal.size());
    propagate_into(signal.samples(), out, model);
    return IqBuffer(std::move(out), signal.sample_rate(), signal.start_timestamp());
}

void check(const SceneConfig& s) {
    check(s.tx_rx);
    check(s.interferer_rx);
    if (!std::isfinite(s.link_gain_db)) fail(ErrorCode::ConfigError, "link_gain_db must be finite");
}

double noise_power(const SceneConfig& s, double sample_rate) { return s.tx_rx.noise_psd * sample_rate; }

ReceiverChannel::ReceiverChannel(SceneConfig scene, double sample_rate, std::uint64_t seed)
    : scene_((check(scene), std::move(scene))),
      link_(scene_.tx_rx, std::pow(10.0, (scene_.link_gain_db - path_loss_db(scene_.tx_rx)) / 20.0)),
      interference_(scene_.interferer_rx, std::pow(10.0, -path_loss_db(scene_.interferer_rx) / 20.0)),
      noise_sigma_(std::sqrt(noise_power(scene_, sample_rate) / 2.0)),
      noise_(seed) {
    if (!(sample_rate > 0)) fail(ErrorCode::ConfigError, "sample_rate must be positive");
}

void ReceiverChannel::propagate_link(std::span<const Sample> link, std::span<Sample> out) {
    link_.run(link, out, false);
}

void ReceiverChannel::propagate_interference(std::span<const Sample> interference, std::span<Sample> out) {
    interference_.run(interference, out, false);
}

void ReceiverChannel::add_noise(std::span<Sample> out) {
    if (noise_sigma_ == 0.0) return;
    for (auto& s : out) {
        const double re = noise_.gaussian();
        const double im = noise_.gaussian();
        s += Sample(noise_sigma_ * re, noise_sigma_ * im);
    }
}

void ReceiverChannel::process(std::span<const Sample> link, std::span<const Sample> interference,
                              std::span<Sample> out) {
    if (link.size() != out.size() || (!interference.empty() && interference.size() != out.size())) {
        fail(ErrorCode::LengthError, "receiver inputs differ in length");
    }
    link_.run(link, out, false);
    if (!interference.empty()) interference_.run(interference, out, true);
    add_noise(out);
}

IqBuffer receive(const IqBuffer& link, const IqBuffer& interference, const SceneConfig& scene, std::uint64_t seed) {
    if (!interference.empty()) {
        if (interference.sample_rate() != link.sample_rate()) {
            fail(ErrorCode::ConfigError, "link and interference sample rates differ");
        }
        if (interference.start_timestamp() != link.start_timestamp() || interference.size() != link.size()) {
            fail(ErrorCode::LengthError, "link and interference buffers are not aligned");
        }
    }
    ReceiverChannel rx(scene, link.sample_rate(), seed);
    std::vector<Sample> out(link.size());
    rx.process(link.samples(), interference.samples(), out);
    return IqBuffer(std::move(out), link.sample_rate(), link.start_timestamp());
}

json to_json(const ChannelModel& m) {
    json taps = json::array();
    for (const auto& t : m.taps) taps.push_back(json{{"delay", t.delay}, {"gain", {t.gain.real(), t.gain.imag()}}});
    return json{{"distance", m.distance},
                {"reference_distance", m.reference_distance},
                {"path_loss_exponent", m.path_loss_exponent},
                {"taps", std::move(taps)},
                {"noise_psd", m.noise_psd}};
}

json to_json(const SceneConfig& s) {
    json j{{"label", s.label},
           {"link_gain_db", s.link_gain_db},
           {"tx_rx", to_json(s.tx_rx)},
           {"interferer_rx", to_json(s.interferer_rx)}};
    if (!s.interferer_distances.empty()) j["interferer_distances"] = s.interferer_distances;
    if (!s.notes.empty()) j["notes"] = s.notes;
    return j;
}

ChannelModel channel_model_from_json(const json& j) {
    ChannelModel m;
    try {
        m.distance = j.at("distance").get<double>();
        m.reference_distance = j.value("reference_distance", 1.0);
        m.path_loss_exponent = j.at("path_loss_exponent").get<double>();
        m.noise_psd = j.value("noise_psd", 0.0);
        for (const auto& t : j.value("taps", json::array())) {
            Tap tap;
            tap.delay = t.at("delay").get<std::size_t>();
            const auto& g = t.at("gain");
            tap.gain = g.is_array() ? Sample(g.at(0).get<double>(), g.at(1).get<double>()) : Sample(g.get<double>(), 0.0);
            m.taps.push_back(tap);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("bad channel model: ") + e.what());
    }
    check(m);
    return m;
}

SceneConfig scene_from_json(const json& j) {
    SceneConfig s;
    if (!j.is_object()) fail(ErrorCode::ConfigError, "scene must be a JSON object");
    try {
        s.label = j.value("label", std::string());
        s.link_gain_db = j.value("link_gain_db", 0.0);
        s.notes = j.value("notes", std::string());
        s.interferer_distances = j.value("interferer_distances", std::vector<double>{});
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("bad scene: ") + e.what());
    }
    if (!j.contains("tx_rx") || !j.contains("interferer_rx")) {
        fail(ErrorCode::ConfigError, "scene needs tx_rx and interferer_rx channel models");
    }
    s.tx_rx = channel_model_from_json(j["tx_rx"]);
    s.interferer_rx = channel_model_from_json(j["interferer_rx"]);
    check(s);
    return s;
}

std::vector<std::string> scene_preset_names() {
    std::vector<std::string> names;
    for (const auto& f : resources::scene_presets()) names.emplace_back(f.name);
    return names;
}

SceneConfig load_scene(const std::string& name_or_path) {
    for (const auto& f : resources::scene_presets()) {
        if (f.name == name_or_path) return scene_from_json(json::parse(f.text));
    }
    std::ifstream in(name_or_path);
    if (!in) fail(ErrorCode::IoError, "no scene preset or file named " + name_or_path);
    try {
        return scene_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, name_or_path + ": " + e.what());
    }
}

}  // namespace stormbench
