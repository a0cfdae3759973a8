#include "stormbench/session.hpp"

#include <algorithm>
#include <cmath>

#include "stormbench/error.hpp"
#include "stormbench/prng.hpp"

namespace stormbench {

using nlohmann::json;

std::string_view to_string(SessionState s) noexcept {
    switch (s) {
        case SessionState::Idle: return "Idle";
        case SessionState::Running: return "Running";
        case SessionState::Paused: return "Paused";
        case SessionState::Stopped: return "Stopped";
    }
    return "?";
}

double SwitchEvent::gap_delta() const noexcept {
    const std::int64_t extra = next_start - previous_end - 1;
    return extra <= 0 ? 0.0 : static_cast<double>(extra) / sample_rate;
}

json to_json(const SwitchEvent& e) {
    return json{{"from", e.from_waveform},
                {"to", e.to_waveform},
                {"previous_end", e.previous_end},
                {"previous_end_time", e.previous_end_time()},
                {"next_start", e.next_start},
                {"next_start_time", e.next_start_time()},
                {"gap_delta", e.gap_delta()},
                {"sample_rate", e.sample_rate}};
}

SwitchEvent switch_event_from_json(const json& j) {
    SwitchEvent e;
    e.from_waveform = j.at("from").get<std::string>();
    e.to_waveform = j.at("to").get<std::string>();
    e.previous_end = j.at("previous_end").get<std::int64_t>();
    e.next_start = j.at("next_start").get<std::int64_t>();
    e.sample_rate = j.at("sample_rate").get<double>();
    return e;
}

SchedulePlan parse_schedule_plan(const json& doc) {
    const json* entries = &doc;
    if (doc.is_object()) {
        if (!doc.contains("entries")) fail(ErrorCode::ConfigError, "schedule plan needs an \"entries\" list");
        entries = &doc["entries"];
    }
    if (!entries->is_array()) fail(ErrorCode::ConfigError, "schedule entries must be a list");
    SchedulePlan plan;
    for (std::size_t i = 0; i < entries->size(); ++i) {
        const json& e = (*entries)[i];
        const std::string where = "schedule entry " + std::to_string(i);
        if (!e.is_object() || !e.contains("waveform") || !e["waveform"].is_string()) {
            fail(ErrorCode::ConfigError, where + " needs a waveform name");
        }
        ScheduleEntry entry;
        entry.waveform = RegistryId{e["waveform"].get<std::string>()};
        std::vector<std::string> bad;
        entry.params = params_from_json(e.value("params", json::object()), &bad);
        if (!bad.empty()) fail(ErrorCode::ConfigError, where + ": parameter " + bad.front() + " is not a number or string");
        try {
            entry.on_duration = e.value("on_duration", entry.on_duration);
            entry.off_duration = e.value("off_duration", entry.off_duration);
            entry.repeat = e.value("repeat", entry.repeat);
        } catch (const json::exception&) {
            fail(ErrorCode::ConfigError, where + " has a non-numeric duration or repeat");
        }
        if (!(entry.on_duration > 0) || !(entry.off_duration > 0) || !std::isfinite(entry.on_duration) ||
            !std::isfinite(entry.off_duration)) {
            fail(ErrorCode::ConfigError, where + ": durations must be positive and finite");
        }
        if (entry.repeat < 1) fail(ErrorCode::ConfigError, where + ": repeat must be at least 1");
        plan.entries.push_back(std::move(entry));
    }
    return plan;
}

json to_json(const SchedulePlan& plan) {
    json entries = json::array();
    for (const auto& e : plan.entries) {
        entries.push_back(json{{"waveform", e.waveform.value},
                               {"params", to_json(e.params)},
                               {"on_duration", e.on_duration},
                               {"off_duration", e.off_duration},
                               {"repeat", e.repeat}});
    }
    return json{{"entries", std::move(entries)}};
}

json to_json(const ScheduleWindow& w) {
    return json{{"entry", w.entry},
                {"repetition", w.repetition},
                {"on_start", w.on_start},
                {"off_start", w.off_start},
                {"off_end", w.off_end}};
}

json to_json(const SessionEvent& e) {
    return json{{"type", e.type}, {"sample_index", e.sample_index}, {"detail", e.detail}};
}

Session::Session(SimulationConfig config, std::shared_ptr<const Registry> registry)
    : config_(std::move(config)), registry_(std::move(registry)), devices_(config_.devices) {
    if (!registry_) fail(ErrorCode::ConfigError, "session needs a registry");
    if (!(config_.sample_rate > 0)) fail(ErrorCode::ConfigError, "sample_rate must be positive");
    if (config_.buffer_size == 0) fail(ErrorCode::ConfigError, "buffer_size must be positive");
}

VirtualDevice Session::assign_role(const std::string& device_id, Role role) {
    if (state_ == SessionState::Running || state_ == SessionState::Paused) {
        fail(ErrorCode::IllegalState, "roles can only change while the session is not running");
    }
    auto it = std::find_if(devices_.begin(), devices_.end(), [&](const auto& d) { return d.device_id == device_id; });
    if (it == devices_.end()) fail(ErrorCode::UnknownDevice, "no device \"" + device_id + "\"");
    if (role != Role::Unassigned) {
        for (const auto& d : devices_) {
            if (d.device_id != device_id && d.role == role) {
                fail(ErrorCode::RoleConflict,
                     "device " + d.device_id + " already holds the " + std::string(to_string(role)) + " role");
            }
        }
    }
    it->role = role;
    return *it;
}

std::optional<VirtualDevice> Session::device_with_role(Role role) const {
    for (const auto& d : devices_) {
        if (d.role == role) return d;
    }
    return std::nullopt;
}

std::optional<RegistryId> Session::active_waveform() const { return active_; }

std::size_t Session::add_tap(BufferSink tap) {
    taps_.emplace_back(next_tap_, std::move(tap));
    return next_tap_++;
}

void Session::remove_tap(std::size_t id) {
    taps_.erase(std::remove_if(taps_.begin(), taps_.end(), [&](const auto& t) { return t.first == id; }), taps_.end());
}

void Session::emit(const std::string& type, std::int64_t index, json detail) {
    if (events_) events_(SessionEvent{type, index, std::move(detail)});
}

void Session::set_state(SessionState next, const std::string& reason) {
    const SessionState prev = state_;
    state_ = next;
    json detail{{"from", std::string(to_string(prev))}, {"to", std::string(to_string(next))}, {"reason", reason}};
    if (active_) detail["waveform"] = active_->value;
    emit("state", clock_, std::move(detail));
}

ParamMap Session::validated(const RegistryId& waveform, const ParamMap& params) const {
    auto v = registry_->validate_params(waveform, params);
    if (!v.ok()) throw ValidationError(std::move(v.report));
    return std::move(*v.value);
}

void Session::check_transmitter(const ParamMap& params) const {
    const auto tx = device_with_role(Role::Transmitter);
    if (!tx) fail(ErrorCode::IllegalState, "no transmitter device assigned");
    const auto& caps = tx->capabilities;
    if (config_.sample_rate > caps.max_sample_rate) {
        fail(ErrorCode::ConfigError, "sample rate exceeds what transmitter " + tx->device_id + " supports");
    }
    if (params.count("center_frequency")) {
        const double fc = get_number(params, "center_frequency", 0.0);
        if (fc < caps.min_frequency || fc > caps.max_frequency) {
            ValidationReport r;
            r.violations.push_back({ViolationCode::RangeViolation, "center_frequency",
                                    "center_frequency outside the tuning range of " + tx->device_id});
            throw ValidationError(std::move(r));
        }
    }
}

std::unique_ptr<WaveformGenerator> Session::instantiate(const RegistryId& waveform, const ParamMap& params) {
    return registry_->instantiate(waveform, params, config_.sample_rate, derive_seed(config_.seed, instantiations_++));
}

SessionState Session::start(const RegistryId& waveform, const ParamMap& params) {
    if (state_ != SessionState::Idle && state_ != SessionState::Stopped) {
        fail(ErrorCode::IllegalState, "start requires an Idle or Stopped session, not " + std::string(to_string(state_)));
    }
    ParamMap p = validated(waveform, params);
    check_transmitter(p);
    generator_ = instantiate(waveform, p);
    active_ = waveform;
    active_params_ = std::move(p);
    set_state(SessionState::Running, "start");
    return state_;
}

SessionState Session::pause() {
    if (state_ != SessionState::Running) fail(ErrorCode::IllegalState, "pause requires a Running session");
    set_state(SessionState::Paused, "pause");
    return state_;
}

SessionState Session::resume() {
    if (state_ != SessionState::Paused) fail(ErrorCode::IllegalState, "resume requires a Paused session");
    set_state(SessionState::Running, "resume");
    return state_;
}

SessionState Session::stop() {
    if (state_ != SessionState::Running && state_ != SessionState::Paused) {
        fail(ErrorCode::IllegalState, "stop requires a Running or Paused session");
    }
    schedule_.reset();
    generator_.reset();
    set_state(SessionState::Stopped, "stop");
    active_.reset();
    active_params_.clear();
    return state_;
}

SwitchEvent Session::switch_waveform(const RegistryId& waveform, const ParamMap& params) {
    if (state_ != SessionState::Running) {
        fail(ErrorCode::IllegalState, "switch requires a Running session, not " + std::string(to_string(state_)));
    }
    if (schedule_) fail(ErrorCode::IllegalState, "a schedule owns the transmitter; stop it before switching manually");
    if (!registry_->contains(waveform)) fail(ErrorCode::UnknownWaveform, "unknown waveform \"" + waveform.value + "\"");
    ParamMap p = validated(waveform, params);
    check_transmitter(p);
    auto next = instantiate(waveform, p);

    SwitchEvent e;
    e.from_waveform = active_ ? active_->value : "";
    e.to_waveform = waveform.value;
    e.previous_end = clock_ - 1;
    e.next_start = clock_;
    e.sample_rate = config_.sample_rate;

    generator_ = std::move(next);
    active_ = waveform;
    active_params_ = std::move(p);
    switches_.push_back(e);
    emit("switch", clock_, to_json(e));
    return e;
}

void Session::begin_schedule(const SchedulePlan& plan) {
    if (state_ != SessionState::Idle && state_ != SessionState::Stopped) {
        fail(ErrorCode::IllegalState, "a schedule cannot overlap an active session");
    }
    schedule_result_ = {};
    if (plan.entries.empty()) return;

    ScheduleRun run;
    run.plan = plan;
    for (const auto& e : plan.entries) {
        if (!registry_->contains(e.waveform)) fail(ErrorCode::UnknownWaveform, "unknown waveform \"" + e.waveform.value + "\"");
        ParamMap p = validated(e.waveform, e.params);
        check_transmitter(p);
        run.params.push_back(std::move(p));
    }
    const double fs = config_.sample_rate;
    std::int64_t t = clock_;
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        const auto& e = plan.entries[i];
        const auto on = static_cast<std::int64_t>(std::llround(e.on_duration * fs));
        const auto off = static_cast<std::int64_t>(std::llround(e.off_duration * fs));
        if (on < 1 || off < 1) fail(ErrorCode::ConfigError, "schedule durations shorter than one sample");
        for (int r = 0; r < e.repeat; ++r) {
            run.segments.push_back({t, t + on, i, r, true});
            run.segments.push_back({t + on, t + on + off, i, r, false});
            t += on + off;
        }
    }
    // Instantiate every generator up front so a bad configuration fails
    // before the first sample.
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        run.generators.push_back(instantiate(plan.entries[i].waveform, run.params[i]));
    }
    schedule_ = std::move(run);
    enter_segment(0);
}

void Session::enter_segment(std::size_t index) {
    auto& run = *schedule_;
    run.cursor = index;
    const Segment& seg = run.segments[index];
    const auto& entry = run.plan.entries[seg.entry];
    if (index == 0) {
        active_ = entry.waveform;
        active_params_ = run.params[seg.entry];
        set_state(SessionState::Running, "schedule");
    } else if (seg.on && run.segments[index - 1].entry != seg.entry) {
        SwitchEvent e;
        e.from_waveform = run.plan.entries[run.segments[index - 1].entry].waveform.value;
        e.to_waveform = entry.waveform.value;
        e.previous_end = seg.begin - 1;
        e.next_start = seg.begin;
        e.sample_rate = config_.sample_rate;
        active_ = entry.waveform;
        active_params_ = run.params[seg.entry];
        schedule_result_.switches.push_back(e);
        switches_.push_back(e);
        emit("switch", seg.begin, to_json(e));
    }
    json detail{{"entry", seg.entry}, {"repetition", seg.repetition}, {"waveform", entry.waveform.value}};
    if (seg.on) {
        schedule_result_.windows.push_back({seg.entry, seg.repetition, seg.begin, seg.end, run.segments[index + 1].end});
        emit("window_on", seg.begin, std::move(detail));
    } else {
        emit("window_off", seg.begin, std::move(detail));
    }
}

void Session::finish_schedule() {
    schedule_.reset();
    generator_.reset();
    emit("schedule_complete", clock_, json{{"windows", schedule_result_.windows.size()}});
    set_state(SessionState::Stopped, "schedule_complete");
    active_.reset();
    active_params_.clear();
}

void Session::fill_schedule(std::span<Sample> out, std::int64_t first) {
    auto& run = *schedule_;
    std::size_t done = 0;
    while (done < out.size()) {
        const std::int64_t p = first + static_cast<std::int64_t>(done);
        if (p >= run.segments[run.cursor].end) {
            enter_segment(run.cursor + 1);
            continue;
        }
        const Segment& seg = run.segments[run.cursor];
        const auto k = std::min<std::size_t>(out.size() - done, static_cast<std::size_t>(seg.end - p));
        auto part = out.subspan(done, k);
        if (seg.on) {
            run.generators[seg.entry]->generate_into(part);
        } else {
            std::fill(part.begin(), part.end(), Sample{});
        }
        done += k;
    }
}

std::size_t Session::advance(std::size_t n) {
    std::size_t emitted = 0;
    while (emitted < n && state_ == SessionState::Running) {
        std::size_t k = std::min(n - emitted, config_.buffer_size);
        if (schedule_) {
            const std::int64_t left = schedule_->segments.back().end - clock_;
            k = std::min<std::size_t>(k, static_cast<std::size_t>(left));
        }
        std::vector<Sample> samples(k);
        if (schedule_) {
            fill_schedule(samples, clock_);
        } else {
            generator_->generate_into(samples);
        }
        IqBuffer buffer(std::move(samples), config_.sample_rate, clock_);
        clock_ += static_cast<std::int64_t>(k);
        emitted += k;
        if (sink_) sink_(buffer);
        for (const auto& [_, tap] : taps_) tap(buffer);
        if (schedule_ && clock_ >= schedule_->segments.back().end) finish_schedule();
    }
    return emitted;
}

ScheduleResult Session::run_schedule(const SchedulePlan& plan) {
    begin_schedule(plan);
    while (schedule_ && state_ == SessionState::Running) advance(config_.buffer_size);
    return schedule_result_;
}

}  // namespace stormbench
