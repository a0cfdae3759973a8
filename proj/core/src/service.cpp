#include "stormbench/service.hpp"

#include <chrono>
#include <fstream>

#include "httplib.h"
#include "stormbench/experiment.hpp"
#include "stormbench/json_codec.hpp"

namespace stormbench {

using json = nlohmann::json;

namespace {

double steady_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::ConfigError, std::string("bad value for ") + key);
    }
}

json to_json(const ServiceConfig& c) {
    json j{{"host", c.host},
           {"port", c.port},
           {"run_dir", c.run_dir.string()},
           {"simulation", to_json(c.simulation)},
           {"power", {{"capacity_joules", c.power.capacity_joules}, {"load_watts", c.power.load_watts}}},
           {"monitor",
            {{"frame_rate", c.monitor.frame_rate},
             {"analysis_samples", c.monitor.analysis_samples},
             {"fft_size", c.monitor.psd.fft_size}}},
           {"realtime", c.loop.realtime},
           {"speed", c.loop.speed},
           {"link", to_json(c.link)}};
    if (c.scene) j["scene"] = to_json(*c.scene);
    return j;
}

// Thrown inside the live link's interference source to unwind the trial
// when the service shuts down.
struct LinkStopped {};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::exception& e) {
    int status = 500;
    if (const auto* se = dynamic_cast<const Error*>(&e)) status = http_status(se->code());
    send_json(res, status, error_json(e));
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
    }
}

std::string sse(const std::string& type, std::uint64_t seq, const json& data) {
    json msg{{"type", type}, {"seq", seq}, {"data", data}};
    return "event: " + type + "\ndata: " + msg.dump() + "\n\n";
}

}  // namespace

ServiceConfig service_config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) fail(ErrorCode::ConfigError, "service config must be a JSON object");
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };
    ServiceConfig c;
    c.host = get_or<std::string>(j, "host", c.host);
    c.port = get_or(j, "port", c.port);
    if (c.port < 0 || c.port > 65535) fail(ErrorCode::ConfigError, "port out of range");
    if (j.contains("run_dir")) c.run_dir = resolve(get_or<std::string>(j, "run_dir", ""));
    if (j.contains("simulation")) {
        c.simulation = parse_simulation_config(j.at("simulation"));
    } else if (j.contains("simulation_file")) {
        c.simulation = load_simulation_config(resolve(get_or<std::string>(j, "simulation_file", "")).string());
    } else if (j.contains("devices")) {
        // A bare bench file doubles as a service config.
        c.simulation = parse_simulation_config(j);
    }
    if (j.contains("power")) {
        const auto& p = j.at("power");
        c.power.capacity_joules = get_or(p, "capacity_joules", c.power.capacity_joules);
        c.power.load_watts = get_or(p, "load_watts", c.power.load_watts);
        if (!(c.power.capacity_joules > 0) || !(c.power.load_watts > 0)) {
            fail(ErrorCode::ConfigError, "power capacity and load must be positive");
        }
    }
    if (j.contains("monitor")) {
        const auto& m = j.at("monitor");
        c.monitor.frame_rate = get_or(m, "frame_rate", c.monitor.frame_rate);
        c.monitor.analysis_samples = get_or(m, "analysis_samples", c.monitor.analysis_samples);
        c.monitor.psd.fft_size = get_or(m, "fft_size", c.monitor.psd.fft_size);
        if (!(c.monitor.frame_rate > 0)) fail(ErrorCode::ConfigError, "monitor frame_rate must be positive");
    }
    c.loop.realtime = get_or(j, "realtime", c.loop.realtime);
    c.loop.speed = get_or(j, "speed", c.loop.speed);
    if (!(c.loop.speed > 0)) fail(ErrorCode::ConfigError, "speed must be positive");
    if (j.contains("scene") && !j.at("scene").is_null()) {
        const auto& s = j.at("scene");
        if (s.is_string()) {
            const auto name = s.get<std::string>();
            const auto presets = scene_preset_names();
            const bool preset = std::find(presets.begin(), presets.end(), name) != presets.end();
            c.scene = load_scene(preset ? name : resolve(name).string());
        } else {
            c.scene = scene_from_json(s);
        }
    }
    if (j.contains("link")) c.link = link_config_from_json(j.at("link"));
    c.power_interval = get_or(j, "power_interval", c.power_interval);
    if (!(c.power_interval > 0)) fail(ErrorCode::ConfigError, "power_interval must be positive");
    return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return service_config_from_json(j, path.parent_path());
}

ControlService::ControlService(ServiceConfig config, std::shared_ptr<Registry> registry)
    : config_(std::move(config)),
      registry_(registry ? std::move(registry) : std::make_shared<Registry>(Registry::with_builtins())),
      run_root_(resolve_run_root(config_.run_dir)),
      power_(std::make_unique<PowerModel>(config_.power, steady_seconds)),
      monitor_(std::make_unique<SpectrumMonitor>(config_.simulation.sample_rate, config_.monitor)) {}

ControlService::~ControlService() {
    try {
        stop();
    } catch (...) {
    }
}

std::string ControlService::run_id() const {
    std::lock_guard lock(run_mutex_);
    return run_ ? run_->run_id() : std::string();
}

void ControlService::start() {
    if (started_.exchange(true)) fail(ErrorCode::IllegalState, "service already started");

    server_ = std::make_unique<httplib::Server>();
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.host);
    } else {
        port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }
    if (port_ < 0) {
        fail(ErrorCode::IoError, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }

    {
        DatalogOptions opts;
        opts.root = run_root_;
        json snap{{"service", to_json(config_)}, {"registry", json::array()}};
        for (const auto& e : registry_->list()) snap["registry"].push_back(stormbench::to_json(e));
        std::lock_guard lock(run_mutex_);
        run_ = open_run(opts, snap);
    }

    auto session = std::make_unique<Session>(config_.simulation, registry_);
    monitor_sub_ = monitor_feed_.subscribe();
    session->add_tap([this](const IqBuffer& b) { monitor_feed_.publish(b); });
    if (config_.scene) {
        link_sub_ = link_feed_.subscribe();
        session->set_transmitter_sink([this](const IqBuffer& b) { link_feed_.publish(b); });
    }
    session->set_event_sink([this](const SessionEvent& e) {
        if (e.type == "state") power_->set_draining(e.detail.value("to", "") == "Running");
        json j = stormbench::to_json(e);
        log_event(j);
        publish_event(std::move(j));
    });
    loop_ = std::make_unique<OrchestrationLoop>(std::move(session), config_.loop);

    power_->on_exhausted([this] {
        json ev{{"type", "power_exhausted"}, {"detail", {{"battery_fraction", 0.0}}}};
        log_event(ev);
        publish_event(ev);
        if (stopping_) return;
        loop_->submit([](Session& s) {
            if (s.state() == SessionState::Running || s.state() == SessionState::Paused) s.stop();
        });
    });

    install_routes();
    monitor_thread_ = std::thread([this] { monitor_main(); });
    if (config_.scene) link_thread_ = std::thread([this] { link_main(); });
    housekeeping_thread_ = std::thread([this] { housekeeping_main(); });
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void ControlService::stop() {
    if (!started_ || stopping_.exchange(true)) return;

    server_->stop();
    if (server_thread_.joinable()) server_thread_.join();

    try {
        loop_->call([](Session& s) {
            if (s.state() == SessionState::Running || s.state() == SessionState::Paused) s.stop();
        });
    } catch (...) {
    }
    loop_->shutdown();

    monitor_feed_.close_all();
    link_feed_.close_all();
    monitor_->close_all();
    messages_.close_all();
    for (auto* t : {&monitor_thread_, &link_thread_, &housekeeping_thread_}) {
        if (t->joinable()) t->join();
    }

    {
        std::lock_guard lock(run_mutex_);
        if (run_ && !run_->closed()) run_->close();
    }
    {
        std::lock_guard lock(lifecycle_mutex_);
        stopped_ = true;
    }
    stopped_cv_.notify_all();
}

void ControlService::wait() {
    std::unique_lock lock(lifecycle_mutex_);
    stopped_cv_.wait(lock, [this] { return stopped_; });
}

void ControlService::log_event(json event) {
    std::lock_guard lock(run_mutex_);
    if (!run_ || run_->closed()) return;
    try {
        run_->append_event(std::move(event));
    } catch (const Error&) {
        // A full disk must not take the live session down; the stream still
        // carries the event.
    }
}

void ControlService::publish_event(json event) { messages_.publish({"event", std::move(event)}); }

json ControlService::snapshot() {
    json s = loop_->call([](Session& session) {
        json j{{"state", std::string(to_string(session.state()))},
               {"stream_clock", session.stream_clock()},
               {"sample_rate", session.sample_rate()},
               {"schedule_active", session.schedule_active()},
               {"devices", json::array()}};
        const auto active = session.active_waveform();
        j["active_waveform"] = active ? json(active->value) : json(nullptr);
        j["params"] = to_json(session.active_params());
        for (const auto& d : session.discover_devices()) j["devices"].push_back(to_json(d));
        if (!session.switch_log().empty()) j["last_switch"] = to_json(session.switch_log().back());
        return j;
    });
    s["power"] = to_json(power_->status());
    s["run_id"] = run_id();
    return s;
}

void ControlService::monitor_main() {
    std::optional<ReceiverChannel> channel;
    if (config_.scene) channel.emplace(*config_.scene, config_.simulation.sample_rate, derive_seed(config_.simulation.seed, 0x3a));
    std::vector<Sample> rx;
    while (true) {
        auto b = monitor_sub_->pop(std::chrono::milliseconds(100));
        if (!b) {
            if (monitor_sub_->closed()) return;
            continue;
        }
        if (channel) {
            rx.assign(b->size(), Sample{});
            channel->propagate_interference(b->samples(), rx);
            channel->add_noise(rx);
            monitor_->push(IqBuffer(rx, b->sample_rate(), b->start_timestamp()));
        } else {
            monitor_->push(*b);
        }
    }
}

void ControlService::link_main() {
    // The live link runs one trial per metrics window over the transmitted
    // stream, so memory stays bounded however long the service lives.
    std::vector<Sample> pending;
    std::size_t offset = 0;
    bool on = false;
    InterferenceSource source = [&](std::span<Sample> out) {
        std::size_t filled = 0;
        while (filled < out.size()) {
            if (offset == pending.size()) {
                auto b = link_sub_->pop(std::chrono::milliseconds(100));
                if (!b) {
                    if (stopping_ || link_sub_->closed()) throw LinkStopped{};
                    continue;
                }
                pending.assign(b->samples().begin(), b->samples().end());
                offset = 0;
            }
            const std::size_t k = std::min(out.size() - filled, pending.size() - offset);
            for (std::size_t i = 0; i < k; ++i) {
                out[filled + i] = pending[offset + i];
                if (pending[offset + i] != Sample{}) on = true;
            }
            filled += k;
            offset += k;
        }
    };
    LinkTrialOptions opt;
    opt.sample_rate = config_.simulation.sample_rate;
    opt.window = 1.0;
    opt.duration = 1.0;
    for (std::int64_t window = 0;; ++window) {
        opt.seed = derive_seed(config_.simulation.seed, static_cast<std::uint64_t>(window) + 0x1000);
        on = false;
        LinkTrialResult r;
        try {
            r = run_link_trial(config_.link, source, *config_.scene, opt);
        } catch (const LinkStopped&) {
            return;
        }
        for (auto rec : r.records) {
            rec.window = window;
            rec.timestamp = static_cast<double>(window) * opt.window;
            rec.interference_on = on;
            rec.context = json{{"scene", config_.scene->label}, {"live", true}};
            {
                std::lock_guard lock(run_mutex_);
                if (run_ && !run_->closed()) {
                    try {
                        run_->append_metrics(rec);
                    } catch (const Error&) {
                    }
                }
            }
            messages_.publish({"metrics", to_json(rec)});
        }
    }
}

void ControlService::housekeeping_main() {
    double next = 0.0;
    while (!stopping_) {
        const double now = steady_seconds();
        if (now >= next) {
            messages_.publish({"power", to_json(power_->status())});
            next = now + config_.power_interval;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

void ControlService::install_routes() {
    auto& srv = *server_;

    // Runs a request handler, mapping exceptions to structured errors. For
    // mutating requests the outcome is also written to the run log.
    auto guarded = [this](bool mutating, auto handler) {
        return [this, mutating, handler](const httplib::Request& req, httplib::Response& res) {
            json request;
            try {
                request = parse_body(req);
                auto [status, body] = handler(req, request);
                send_json(res, status, body);
            } catch (const std::exception& e) {
                send_error(res, e);
            }
            if (mutating) {
                json ev{{"type", "api"}, {"method", req.method}, {"path", req.path}, {"status", res.status}};
                if (!request.is_null() && !request.empty()) ev["request"] = request;
                try {
                    ev["response"] = json::parse(res.body);
                } catch (const json::exception&) {
                }
                log_event(ev);
            }
        };
    };
    using Result = std::pair<int, json>;

    srv.Get("/v1/devices", guarded(false, [this](const httplib::Request&, const json&) -> Result {
                json devices = loop_->call([](Session& s) {
                    json arr = json::array();
                    for (const auto& d : s.discover_devices()) arr.push_back(to_json(d));
                    return arr;
                });
                return {200, json{{"devices", devices}}};
            }));

    srv.Post("/v1/devices/:id/role", guarded(true, [this](const httplib::Request& req, const json& body) -> Result {
                 const std::string id = req.path_params.at("id");
                 if (!body.contains("role") || !body["role"].is_string()) {
                     fail(ErrorCode::ConfigError, "body needs a \"role\" string");
                 }
                 const Role role = parse_role(body["role"].get<std::string>());
                 return {200, loop_->call([&](Session& s) {
                             const auto d = s.assign_role(id, role);
                             return json{{"device", to_json(d)}, {"state", std::string(to_string(s.state()))}};
                         })};
             }));

    srv.Get("/v1/waveforms", guarded(false, [this](const httplib::Request&, const json&) -> Result {
                json arr = json::array();
                for (const auto& e : registry_->list()) arr.push_back(stormbench::to_json(e));
                return {200, json{{"waveforms", arr}}};
            }));

    srv.Post("/v1/waveforms", guarded(true, [this](const httplib::Request&, const json& body) -> Result {
                 auto v = validate_descriptor(body);
                 if (!v.ok()) throw ValidationError(std::move(v.report));
                 const std::string binding = binding_hint(body);
                 return {201, loop_->call([&](Session& s) {
                             const auto id = registry_->register_waveform(*v.value, binding);
                             return json{{"id", id.value},
                                         {"entry", stormbench::to_json(*registry_->find(id))},
                                         {"state", std::string(to_string(s.state()))}};
                         })};
             }));

    srv.Get("/v1/waveforms/:id/form", guarded(false, [this](const httplib::Request& req, const json&) -> Result {
                return {200, to_json(registry_->form_spec(RegistryId{req.path_params.at("id")}))};
            }));

    // start and switch take {"waveform": id, "params": {...}}.
    auto waveform_request = [this](const json& body) {
        if (!body.contains("waveform") || !body["waveform"].is_string()) {
            fail(ErrorCode::ConfigError, "body needs a \"waveform\" string");
        }
        RegistryId id{body["waveform"].get<std::string>()};
        auto v = registry_->validate_params(id, body.value("params", json::object()));
        if (!v.ok()) throw ValidationError(std::move(v.report));
        return std::make_pair(id, std::move(*v.value));
    };

    srv.Post("/v1/session/start", guarded(true, [this, waveform_request](const httplib::Request&, const json& body) -> Result {
                 auto [id, params] = waveform_request(body);
                 return {200, loop_->call([&](Session& s) {
                             s.start(id, params);
                             return json{{"state", std::string(to_string(s.state()))}, {"waveform", id.value}};
                         })};
             }));

    srv.Post("/v1/session/switch", guarded(true, [this, waveform_request](const httplib::Request&, const json& body) -> Result {
                 auto [id, params] = waveform_request(body);
                 return {200, loop_->call([&](Session& s) {
                             const auto ev = s.switch_waveform(id, params);
                             return json{{"state", std::string(to_string(s.state()))}, {"switch", to_json(ev)}};
                         })};
             }));

    auto simple = [this](SessionState (Session::*command)()) {
        return [this, command](const httplib::Request&, const json&) -> Result {
            return {200, loop_->call([command](Session& s) {
                        (s.*command)();
                        return json{{"state", std::string(to_string(s.state()))}};
                    })};
        };
    };
    srv.Post("/v1/session/pause", guarded(true, simple(&Session::pause)));
    srv.Post("/v1/session/resume", guarded(true, simple(&Session::resume)));
    srv.Post("/v1/session/stop", guarded(true, simple(&Session::stop)));

    srv.Post("/v1/schedule", guarded(true, [this](const httplib::Request&, const json& body) -> Result {
                 const SchedulePlan plan = parse_schedule_plan(body);
                 return {200, loop_->call([&](Session& s) {
                             s.begin_schedule(plan);
                             return json{{"state", std::string(to_string(s.state()))},
                                         {"duration", schedule_duration(plan)},
                                         {"start_index", s.stream_clock()}};
                         })};
             }));

    srv.Get("/v1/power", guarded(false, [this](const httplib::Request&, const json&) -> Result {
                return {200, to_json(power_->status())};
            }));

    srv.Get("/v1/runs", guarded(false, [this](const httplib::Request&, const json&) -> Result {
                return {200, json{{"runs", list_runs(run_root_)}, {"current", run_id()}}};
            }));

    srv.Get("/v1/runs/:id", guarded(false, [this](const httplib::Request& req, const json&) -> Result {
                const std::string id = req.path_params.at("id");
                const auto dir = run_root_ / id;
                if (id.empty() || id.find("..") != std::string::npos || !std::filesystem::is_directory(dir)) {
                    return {404, json{{"error", "NotFound"}, {"message", "no run " + id}}};
                }
                std::unique_lock lock(run_mutex_, std::defer_lock);
                if (id == (run_ ? run_->run_id() : std::string())) lock.lock();
                return {200, to_json(load_run(dir))};
            }));

    srv.Get("/v1/stream", [this](const httplib::Request& req, httplib::Response& res) {
        double rate = config_.monitor.frame_rate;
        std::uint64_t limit = 0;
        try {
            if (req.has_param("rate")) rate = std::stod(req.get_param_value("rate"));
            if (req.has_param("limit")) limit = std::stoull(req.get_param_value("limit"));
            if (!(rate >= 0)) fail(ErrorCode::RangeError, "rate must be non-negative");
        } catch (const Error& e) {
            send_error(res, e);
            return;
        } catch (const std::exception&) {
            send_json(res, 400, json{{"error", "ParseError"}, {"message", "bad rate or limit"}});
            return;
        }
        json hello;
        try {
            const bool has_monitor =
                loop_->call([](Session& s) { return s.device_with_role(Role::Monitor).has_value(); });
            if (!has_monitor) fail(ErrorCode::IllegalState, "no device holds the monitor role");
            hello = snapshot();
        } catch (const std::exception& e) {
            send_error(res, e);
            return;
        }

        auto frames = monitor_->subscribe(rate);
        auto messages = messages_.subscribe();
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, frames, messages, limit, hello](std::size_t, httplib::DataSink& sink) {
                std::uint64_t seq = 0;
                auto send = [&](const std::string& type, const json& data) {
                    const std::string text = sse(type, seq++, data);
                    return sink.write(text.data(), text.size());
                };
                auto exhausted = [&] { return limit != 0 && seq >= limit; };
                if (!send("hello", hello)) return false;
                while (!stopping_ && !exhausted()) {
                    bool idle = true;
                    while (!exhausted()) {
                        auto f = frames->frames().try_pop();
                        if (!f) break;
                        idle = false;
                        json data = to_json(*f);
                        data["dropped"] = frames->frames().dropped();
                        if (!send("spectrum", data)) return false;
                    }
                    while (!exhausted()) {
                        auto m = messages->try_pop();
                        if (!m) break;
                        idle = false;
                        if (!send(m->type, m->data)) return false;
                    }
                    if (!sink.is_writable()) return false;
                    if (idle) std::this_thread::sleep_for(std::chrono::milliseconds(20));
                }
                sink.done();
                return true;
            });
    });
}

}  // namespace stormbench
