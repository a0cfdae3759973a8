#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "stormbench/datalog.hpp"
#include "stormbench/experiment.hpp"
#include "stormbench/json_codec.hpp"
#include "stormbench/registry.hpp"
#include "stormbench/service.hpp"

using namespace stormbench;
using json = nlohmann::json;

namespace {

std::atomic<bool> interrupted{false};

void on_signal(int) { interrupted = true; }

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, path + ": " + e.what());
    }
}

int cmd_serve(const std::string& config_path, int port) {
    ServiceConfig cfg = config_path.empty() ? ServiceConfig{} : load_service_config(config_path);
    if (port >= 0) cfg.port = port;
    ControlService service(cfg);
    service.start();
    std::printf("listening on http://%s:%d (run %s in %s)\n", cfg.host.c_str(), service.port(),
                service.run_id().c_str(), service.run_root().string().c_str());
    std::fflush(stdout);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.stop();
    std::printf("stopped\n");
    return 0;
}

struct RunArgs {
    std::string scene;
    std::string schedule;
    std::string out = "runs";
    std::string config;
    std::string run_id;
    std::string modulation;
    int repetition = 0;
    std::uint64_t seed = 1;
    double duration = 0.0;
    double window = 1.0;
    bool no_captures = false;
};

int cmd_run(const RunArgs& a) {
    ExperimentConfig cfg;
    if (!a.config.empty()) cfg.simulation = load_simulation_config(a.config);
    cfg.scene = load_scene(a.scene);
    cfg.schedule = parse_schedule_plan(read_json_file(a.schedule));
    cfg.seed = a.seed;
    cfg.duration = a.duration;
    cfg.window = a.window;
    cfg.capture_symbols = !a.no_captures;
    json link = to_json(cfg.link);
    if (!a.modulation.empty()) link["modulation"] = a.modulation;
    if (a.repetition > 0) link["repetition"] = a.repetition;
    cfg.link = link_config_from_json(link);

    const auto registry = Registry::with_builtins();
    DatalogOptions opts;
    opts.root = resolve_run_root(a.out);
    auto run = open_run(opts, experiment_snapshot(cfg, registry), a.run_id);
    std::printf("run %s -> %s\n", run->run_id().c_str(), run->directory().string().c_str());
    const auto result = run_experiment(cfg, registry, run.get(), [](const MetricsRecord& r) {
        std::printf("window %3lld  %s  throughput %9.0f bps  aser %.4f  kld %s\n", static_cast<long long>(r.window),
                    r.interference_on ? "on " : "off", r.throughput, r.aser,
                    r.kld ? std::to_string(*r.kld).c_str() : "n/a");
        std::fflush(stdout);
    });
    run->close();
    std::printf("frames %zu/%zu delivered, %zu switches\n", result.trial.frames_delivered, result.trial.frames_sent,
                result.schedule.switches.size());
    return 0;
}

// 0 valid, 1 invalid descriptor, 2 unreadable input.
int cmd_validate(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::fprintf(stderr, "cannot read %s\n", path.c_str());
        return 2;
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Validated<WaveformDescriptor> v;
    try {
        v = validate_descriptor(std::string_view(text));
    } catch (const Error& e) {
        std::fprintf(stderr, "%s: %s\n", path.c_str(), e.what());
        return 2;
    }
    if (v.ok()) {
        std::printf("%s: valid (%s, %zu parameters)\n", path.c_str(), v.value->waveform_name.c_str(),
                    v.value->parameters.size());
        return 0;
    }
    std::printf("%s: %zu violation(s)\n", path.c_str(), v.report.violations.size());
    for (const auto& viol : v.report.violations) {
        std::printf("  %-24s %-20s %s\n", std::string(to_string(viol.code)).c_str(), viol.path.c_str(),
                    viol.message.c_str());
    }
    return 1;
}

int cmd_metrics(const std::string& id, const std::string& runs_dir, bool as_json) {
    std::filesystem::path dir = resolve_run_root(runs_dir) / id;
    if (!std::filesystem::is_directory(dir) && std::filesystem::is_directory(id)) dir = id;
    if (!std::filesystem::is_directory(dir)) fail(ErrorCode::IoError, "no run directory " + dir.string());
    const auto windows = recompute_metrics(dir);
    std::map<std::int64_t, MetricsRecord> logged;
    for (auto& r : load_metrics(dir)) logged[r.window] = r;
    for (const auto& w : windows) {
        const auto it = logged.find(w.window);
        if (as_json) {
            json j{{"window", w.window}, {"aser", w.aser}, {"kld", w.kld ? json(*w.kld) : json(nullptr)}};
            if (it != logged.end()) {
                j["logged_aser"] = it->second.aser;
                j["logged_kld"] = it->second.kld ? json(*it->second.kld) : json(nullptr);
            }
            std::printf("%s\n", j.dump().c_str());
        } else {
            std::printf("window %3lld  aser %.4f  kld %s", static_cast<long long>(w.window), w.aser,
                        w.kld ? std::to_string(*w.kld).c_str() : "n/a");
            if (it != logged.end()) std::printf("  (logged aser %.4f)", it->second.aser);
            std::printf("\n");
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interference generation and evaluation bench"};
    app.require_subcommand(1);

    std::string config_path;
    int port = -1;
    auto* serve = app.add_subcommand("serve", "Run the HTTP control service");
    serve->add_option("--config", config_path, "Service or bench config (JSON)")->check(CLI::ExistingFile);
    serve->add_option("--port", port, "Override the configured port (0 = any)");

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Headless scheduled link trial");
    run->add_option("--scene", ra.scene, "Scene preset name or file")->required();
    run->add_option("--schedule", ra.schedule, "Schedule plan file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", ra.out, "Run directory root (STORMBENCH_RUN_DIR overrides)");
    run->add_option("--config", ra.config, "Bench (simulation) config")->check(CLI::ExistingFile);
    run->add_option("--run-id", ra.run_id, "Run id (default: time-based)");
    run->add_option("--seed", ra.seed, "Experiment seed");
    run->add_option("--duration", ra.duration, "Seconds to simulate (default: whole schedule)");
    run->add_option("--window", ra.window, "Metrics window, seconds");
    run->add_option("--modulation", ra.modulation, "Link modulation (BPSK, QPSK, 8QAM, 16QAM, 64QAM)");
    run->add_option("--repetition", ra.repetition, "Link repetition factor (1, 2 or 4)");
    run->add_flag("--no-captures", ra.no_captures, "Skip per-window symbol captures");

    std::string descriptor;
    auto* validate = app.add_subcommand("validate", "Check a waveform descriptor");
    validate->add_option("descriptor", descriptor, "Descriptor JSON file")->required();

    std::string run_id;
    std::string runs_dir = "runs";
    bool as_json = false;
    auto* metrics = app.add_subcommand("metrics", "Recompute ASER and KLD from a run's captures");
    metrics->add_option("--run", run_id, "Run id or directory")->required();
    metrics->add_option("--runs-dir", runs_dir, "Run directory root (STORMBENCH_RUN_DIR overrides)");
    metrics->add_flag("--json", as_json, "JSON lines output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) return cmd_serve(config_path, port);
        if (*run) return cmd_run(ra);
        if (*validate) return cmd_validate(descriptor);
        if (*metrics) return cmd_metrics(run_id, runs_dir, as_json);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", error_json(e).dump().c_str());
        return 2;
    }
    return 0;
}
