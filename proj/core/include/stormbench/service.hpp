#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"
#include "stormbench/broadcast.hpp"
#include "stormbench/channel.hpp"
#include "stormbench/datalog.hpp"
#include "stormbench/devices.hpp"
#include "stormbench/link_trial.hpp"
#include "stormbench/orchestration_loop.hpp"
#include "stormbench/power.hpp"
#include "stormbench/registry.hpp"
#include "stormbench/spectrum.hpp"

namespace httplib {
class Server;
}

namespace stormbench {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 binds an ephemeral port
    SimulationConfig simulation = default_simulation_config();
    std::filesystem::path run_dir = "runs";  // STORMBENCH_RUN_DIR wins when set
    PowerConfig power;
    MonitorOptions monitor;
    LoopOptions loop;
    // When set, the monitor sees the transmission through this scene's
    // interferer path plus receiver noise, and a victim link runs live
    // against it, publishing MetricsRecords.
    std::optional<SceneConfig> scene;
    LinkConfig link;
    double power_interval = 1.0;  // seconds between power messages
};

// {"host", "port", "run_dir", "simulation": {...} | "simulation_file",
//  "scene": "<preset or path>", "link": {...}, "power": {"capacity_joules",
//  "load_watts"}, "monitor": {"frame_rate", "analysis_samples", "fft_size"},
//  "realtime", "speed"}. Relative paths resolve against `base_dir`.
// Throws ConfigError.
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
ServiceConfig load_service_config(const std::filesystem::path& path);

// The HTTP control surface. Every mutating request runs as a command on the
// orchestration loop and is answered with the resulting session state or a
// structured error; requests and session events are logged to a run that
// lives as long as the service.
//
//   GET  /v1/devices                 POST /v1/devices/{id}/role
//   GET  /v1/waveforms               POST /v1/waveforms
//   GET  /v1/waveforms/{id}/form
//   POST /v1/session/{start,pause,resume,stop,switch}
//   POST /v1/schedule                GET  /v1/power
//   GET  /v1/runs                    GET  /v1/runs/{id}
//   GET  /v1/stream?rate=<fps>&limit=<messages>   (text/event-stream)
class ControlService {
public:
    explicit ControlService(ServiceConfig config, std::shared_ptr<Registry> registry = nullptr);
    ~ControlService();

    ControlService(const ControlService&) = delete;
    ControlService& operator=(const ControlService&) = delete;

    // Binds, opens the service run and starts serving. Throws IoError when
    // the port cannot be bound.
    void start();
    // Idempotent. Stops the session, closes streams and seals the run.
    void stop();
    // Blocks until the server stops.
    void wait();

    int port() const noexcept { return port_; }
    std::string run_id() const;
    std::filesystem::path run_root() const { return run_root_; }
    PowerModel& power() noexcept { return *power_; }
    const ServiceConfig& config() const noexcept { return config_; }

private:
    struct StreamMessage {
        std::string type;  // event, power, metrics
        nlohmann::json data;
    };

    void install_routes();
    void log_event(nlohmann::json event);
    void publish_event(nlohmann::json event);
    nlohmann::json snapshot();
    void monitor_main();
    void link_main();
    void housekeeping_main();

    ServiceConfig config_;
    std::shared_ptr<Registry> registry_;
    std::filesystem::path run_root_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<OrchestrationLoop> loop_;
    std::unique_ptr<PowerModel> power_;
    std::unique_ptr<SpectrumMonitor> monitor_;

    BroadcastChannel<IqBuffer> monitor_feed_{256};
    BroadcastChannel<IqBuffer> link_feed_{1024};
    BroadcastChannel<StreamMessage> messages_{256};
    std::shared_ptr<Subscription<IqBuffer>> monitor_sub_;
    std::shared_ptr<Subscription<IqBuffer>> link_sub_;

    mutable std::mutex run_mutex_;
    std::unique_ptr<RunHandle> run_;

    std::atomic<bool> started_{false};
    std::atomic<bool> stopping_{false};
    std::mutex lifecycle_mutex_;
    std::condition_variable stopped_cv_;
    bool stopped_ = false;
    int port_ = 0;
    std::thread server_thread_;
    std::thread monitor_thread_;
    std::thread link_thread_;
    std::thread housekeeping_thread_;
};

}  // namespace stormbench
