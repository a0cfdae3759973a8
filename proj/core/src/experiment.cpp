#include "stormbench/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "stormbench/error.hpp"
#include "stormbench/json_codec.hpp"

namespace stormbench {

using nlohmann::json;

json to_json(const LinkConfig& l) {
    return json{{"modulation", std::string(to_string(l.modulation))},
                {"frame_bits", l.frame_bits},
                {"repetition", l.repetition},
                {"samples_per_symbol", l.samples_per_symbol},
                {"rolloff", l.rolloff},
                {"preamble_length", l.preamble_length},
                {"preamble_seed", l.preamble_seed}};
}

LinkConfig link_config_from_json(const json& j) {
    LinkConfig l;
    try {
        if (j.contains("modulation")) {
            const auto name = j["modulation"].get<std::string>();
            auto m = parse_modulation(name);
            if (!m) fail(ErrorCode::ConfigError, "unknown link modulation " + name);
            l.modulation = *m;
        }
        l.frame_bits = j.value("frame_bits", l.frame_bits);
        l.repetition = j.value("repetition", l.repetition);
        l.samples_per_symbol = j.value("samples_per_symbol", l.samples_per_symbol);
        l.rolloff = j.value("rolloff", l.rolloff);
        l.preamble_length = j.value("preamble_length", l.preamble_length);
        l.preamble_seed = j.value("preamble_seed", l.preamble_seed);
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigError, std::string("bad link config: ") + e.what());
    }
    check(l);
    return l;
}

json to_json(const ExperimentConfig& c) {
    return json{{"simulation", to_json(c.simulation)},
                {"scene", to_json(c.scene)},
                {"schedule", to_json(c.schedule)},
                {"link", to_json(c.link)},
                {"seed", c.seed},
                {"window", c.window},
                {"duration", c.duration},
                {"capture_symbols", c.capture_symbols}};
}

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig c;
    if (!j.is_object()) fail(ErrorCode::ConfigError, "experiment config must be an object");
    if (j.contains("simulation")) c.simulation = parse_simulation_config(j["simulation"]);
    if (!j.contains("scene")) fail(ErrorCode::ConfigError, "experiment needs a scene");
    c.scene = scene_from_json(j["scene"]);
    if (j.contains("schedule")) c.schedule = parse_schedule_plan(j["schedule"]);
    if (j.contains("link")) c.link = link_config_from_json(j["link"]);
    c.seed = j.value("seed", c.seed);
    c.window = j.value("window", c.window);
    c.duration = j.value("duration", c.duration);
    c.capture_symbols = j.value("capture_symbols", c.capture_symbols);
    return c;
}

double schedule_duration(const SchedulePlan& plan) {
    double t = 0.0;
    for (const auto& e : plan.entries) t += (e.on_duration + e.off_duration) * e.repeat;
    return t;
}

json experiment_snapshot(const ExperimentConfig& cfg, const Registry& registry) {
    json descriptors = json::object();
    for (const auto& e : cfg.schedule.entries) {
        if (auto entry = registry.find(e.waveform)) {
            descriptors[e.waveform.value] = to_json(*entry);
        }
    }
    return json{{"experiment", to_json(cfg)}, {"registry", std::move(descriptors)}};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Registry& registry, RunHandle* run,
                                std::function<void(const MetricsRecord&)> on_record) {
    const double duration = cfg.duration > 0 ? cfg.duration : schedule_duration(cfg.schedule);
    if (!(duration > 0)) fail(ErrorCode::ConfigError, "experiment has no duration (empty schedule)");

    Session session(cfg.simulation, std::make_shared<Registry>(registry));
    const auto devices = session.discover_devices();
    if (devices.empty()) fail(ErrorCode::ConfigError, "simulation config declares no devices");
    session.assign_role(devices.front().device_id, Role::Transmitter);
    if (devices.size() > 1) session.assign_role(devices[1].device_id, Role::Monitor);
    if (run) {
        session.set_event_sink([run](const SessionEvent& e) {
            json j = to_json(e);
            run->append_event(std::move(j));
        });
    }
    auto source = session_source(session);
    session.begin_schedule(cfg.schedule);

    LinkTrialOptions opt;
    opt.duration = duration;
    opt.sample_rate = cfg.simulation.sample_rate;
    opt.window = cfg.window;
    opt.seed = cfg.seed;
    opt.context = json{{"scene", cfg.scene.label},
                       {"link_distance", cfg.scene.tx_rx.distance},
                       {"interferer_distance", cfg.scene.interferer_rx.distance}};
    json waveforms = json::array();
    json gains = json::array();
    for (const auto& e : cfg.schedule.entries) {
        waveforms.push_back(e.waveform.value);
        gains.push_back(get_number(e.params, "gain", 0.0));
    }
    opt.context["waveforms"] = waveforms;
    opt.context["gains_db"] = gains;
    opt.on_record = [&](const MetricsRecord& r) {
        if (run) {
            run->append_metrics(r);
            run->append_event(json{{"type", "metrics"}, {"detail", to_json(r)}});
        }
        if (on_record) on_record(r);
    };
    if (run && cfg.capture_symbols) {
        const double symbol_rate = cfg.simulation.sample_rate / cfg.link.samples_per_symbol;
        const auto window_len = static_cast<std::int64_t>(std::llround(cfg.window * cfg.simulation.sample_rate));
        opt.on_window_symbols = [run, symbol_rate, window_len](std::int64_t w, std::span<const Sample> rx,
                                                               std::span<const Sample> ref) {
            char name[32];
            std::snprintf(name, sizeof name, "window-%04lld", static_cast<long long>(w));
            run->capture_iq(std::string(name) + "-rx", IqBuffer({rx.begin(), rx.end()}, symbol_rate, w * window_len));
            run->capture_iq(std::string(name) + "-ref", IqBuffer({ref.begin(), ref.end()}, symbol_rate, w * window_len));
        };
    }

    ExperimentResult result;
    result.trial = run_link_trial(cfg.link, source, cfg.scene, opt);
    // Let the plan run out so every transition is logged.
    while (session.schedule_active()) session.advance(cfg.simulation.buffer_size * 16);
    result.schedule = session.schedule_result();
    return result;
}

std::vector<RecomputedWindow> recompute_metrics(const std::filesystem::path& run_dir) {
    const auto manifest = load_run(run_dir);
    if (!manifest.config.contains("experiment")) {
        fail(ErrorCode::ConfigError, "run " + manifest.run_id + " has no experiment config");
    }
    const auto cfg = experiment_from_json(manifest.config["experiment"]);
    const auto preamble = AccessPreamble::make(cfg.link.preamble_length, cfg.link.modulation, cfg.link.preamble_seed);

    std::map<std::string, const CaptureDescriptor*> by_name;
    for (const auto& c : manifest.captures) by_name[c.name] = &c;

    std::vector<RecomputedWindow> out;
    for (const auto& [name, desc] : by_name) {
        if (name.size() < 3 || name.substr(name.size() - 3) != "-rx") continue;
        const std::string stem = name.substr(0, name.size() - 3);
        auto ref_it = by_name.find(stem + "-ref");
        if (ref_it == by_name.end()) continue;
        const auto rx = read_capture(run_dir / desc->file);
        const auto ref = read_capture(run_dir / ref_it->second->file);

        RecomputedWindow w;
        w.window = std::stoll(stem.substr(stem.find('-') + 1));
        const std::size_t np = preamble.symbols.size();
        std::size_t errors = 0;
        for (std::size_t f = 0; f + np <= rx.size(); f += np) {
            errors += count_symbol_errors(std::span<const Sample>(rx.data() + f, np), preamble);
        }
        w.aser = rx.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(rx.size() / np * np);
        KldOptions kld;
        if (rx.size() >= 10 * kld.bins_per_axis * kld.bins_per_axis) w.kld = compute_kld(rx, ref, kld);
        out.push_back(w);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.window < b.window; });
    return out;
}

}  // namespace stormbench
