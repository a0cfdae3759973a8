#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stormbench/devices.hpp"
#include "stormbench/iq_buffer.hpp"
#include "stormbench/registry.hpp"

namespace stormbench {

enum class SessionState { Idle, Running, Paused, Stopped };

std::string_view to_string(SessionState s) noexcept;

// One runtime transition between two waveforms. Indices are stream sample
// indices; previous_end is the last sample of the old waveform.
struct SwitchEvent {
    std::string from_waveform;
    std::string to_waveform;
    std::int64_t previous_end = 0;
    std::int64_t next_start = 0;
    double sample_rate = 1.0;

    double previous_end_time() const noexcept { return static_cast<double>(previous_end) / sample_rate; }
    double next_start_time() const noexcept { return static_cast<double>(next_start) / sample_rate; }
    // (next_start - previous_end) / fs minus one sample period, floored at 0.
    // Computed in whole samples so a contiguous splice reports exactly 0.
    double gap_delta() const noexcept;
};

nlohmann::json to_json(const SwitchEvent& e);
SwitchEvent switch_event_from_json(const nlohmann::json& j);

struct ScheduleEntry {
    RegistryId waveform;
    ParamMap params;
    double on_duration = 5.0;  // seconds
    double off_duration = 5.0;
    int repeat = 1;
};

struct SchedulePlan {
    std::vector<ScheduleEntry> entries;
};

// {"entries": [{"waveform": "ofdm", "params": {...}, "on_duration": 5,
// "off_duration": 5, "repeat": 6}]}. Throws ConfigError on malformed plans
// (non-positive durations, repeat < 1).
SchedulePlan parse_schedule_plan(const nlohmann::json& document);
nlohmann::json to_json(const SchedulePlan& plan);

// One on/off cycle of a schedule entry: transmitting over [on_start,
// off_start), silent over [off_start, off_end).
struct ScheduleWindow {
    std::size_t entry = 0;
    int repetition = 0;
    std::int64_t on_start = 0;
    std::int64_t off_start = 0;
    std::int64_t off_end = 0;
};

nlohmann::json to_json(const ScheduleWindow& w);

struct ScheduleResult {
    std::vector<SwitchEvent> switches;
    std::vector<ScheduleWindow> windows;
};

// Everything the session reports to its observers (datalog, stream).
struct SessionEvent {
    std::string type;  // state, switch, window_on, window_off, schedule_complete
    std::int64_t sample_index = 0;
    nlohmann::json detail;
};

nlohmann::json to_json(const SessionEvent& e);

// The orchestration state machine. Sample emission is synchronous: advance()
// runs the active generator and hands buffers to the transmitter sink and the
// monitor taps, so a command applied between two advance() calls takes
// effect exactly at a buffer boundary. Not thread-safe; the orchestration
// loop owns one instance.
class Session {
public:
    using BufferSink = std::function<void(const IqBuffer&)>;
    using EventSink = std::function<void(const SessionEvent&)>;

    Session(SimulationConfig config, std::shared_ptr<const Registry> registry);

    const SimulationConfig& config() const noexcept { return config_; }
    const Registry& registry() const noexcept { return *registry_; }
    double sample_rate() const noexcept { return config_.sample_rate; }

    // Devices of the simulation config in file order, with current roles.
    std::vector<VirtualDevice> discover_devices() const { return devices_; }
    // Throws UnknownDevice, RoleConflict (role already held by another
    // device) or IllegalState (session Running or Paused).
    VirtualDevice assign_role(const std::string& device_id, Role role);
    std::optional<VirtualDevice> device_with_role(Role role) const;

    SessionState state() const noexcept { return state_; }
    std::optional<RegistryId> active_waveform() const;
    const ParamMap& active_params() const noexcept { return active_params_; }
    // Index of the next sample to be emitted.
    std::int64_t stream_clock() const noexcept { return clock_; }
    bool schedule_active() const noexcept { return schedule_.has_value(); }

    void set_transmitter_sink(BufferSink sink) { sink_ = std::move(sink); }
    std::size_t add_tap(BufferSink tap);
    void remove_tap(std::size_t id);
    void set_event_sink(EventSink sink) { events_ = std::move(sink); }

    // Idle/Stopped -> Running. Validates params (ValidationError) and
    // requires a transmitter whose capabilities cover center_frequency and
    // the sample rate. Nothing is emitted on failure.
    SessionState start(const RegistryId& waveform, const ParamMap& params);
    SessionState pause();
    SessionState resume();
    SessionState stop();

    // Splices a fresh generator in at the current stream clock. Requires
    // Running outside a schedule.
    SwitchEvent switch_waveform(const RegistryId& waveform, const ParamMap& params);
    const std::vector<SwitchEvent>& switch_log() const noexcept { return switches_; }

    // Arms a duty-cycled plan starting at the current clock; the session is
    // Running until the plan ends, then Stopped. Requires Idle or Stopped.
    // Every entry's params are validated before anything is emitted. An
    // empty plan is a no-op.
    void begin_schedule(const SchedulePlan& plan);
    // begin_schedule, then advance until the plan completes.
    ScheduleResult run_schedule(const SchedulePlan& plan);
    // Windows and switches of the current (or last) schedule.
    const ScheduleResult& schedule_result() const noexcept { return schedule_result_; }

    // Emits up to n samples in buffers of at most config().buffer_size.
    // Returns the number emitted (0 unless Running).
    std::size_t advance(std::size_t n);

private:
    struct Segment {
        std::int64_t begin;
        std::int64_t end;
        std::size_t entry;
        int repetition;
        bool on;
    };
    struct ScheduleRun {
        SchedulePlan plan;
        std::vector<ParamMap> params;
        std::vector<Segment> segments;
        std::size_t cursor = 0;
        std::vector<std::unique_ptr<WaveformGenerator>> generators;
    };

    ParamMap validated(const RegistryId& waveform, const ParamMap& params) const;
    void check_transmitter(const ParamMap& params) const;
    std::unique_ptr<WaveformGenerator> instantiate(const RegistryId& waveform, const ParamMap& params);
    void set_state(SessionState next, const std::string& reason);
    void emit(const std::string& type, std::int64_t index, nlohmann::json detail);
    void fill_schedule(std::span<Sample> out, std::int64_t first);
    void enter_segment(std::size_t index);
    void finish_schedule();

    SimulationConfig config_;
    std::shared_ptr<const Registry> registry_;
    std::vector<VirtualDevice> devices_;

    SessionState state_ = SessionState::Idle;
    std::int64_t clock_ = 0;
    std::optional<RegistryId> active_;
    ParamMap active_params_;
    std::unique_ptr<WaveformGenerator> generator_;
    std::uint64_t instantiations_ = 0;

    std::optional<ScheduleRun> schedule_;
    ScheduleResult schedule_result_;
    std::vector<SwitchEvent> switches_;

    BufferSink sink_;
    std::vector<std::pair<std::size_t, BufferSink>> taps_;
    std::size_t next_tap_ = 1;
    EventSink events_;
};

}  // namespace stormbench
