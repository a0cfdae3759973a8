#pragma once

#include <cstdint>
#include <functional>

#include "json.hpp"
#include "stormbench/channel.hpp"
#include "stormbench/datalog.hpp"
#include "stormbench/devices.hpp"
#include "stormbench/link_trial.hpp"
#include "stormbench/registry.hpp"
#include "stormbench/session.hpp"

namespace stormbench {

// A headless ground run: the scheduled interference plan transmitted by a
// session while a victim link is simulated through the scene.
struct ExperimentConfig {
    SimulationConfig simulation = default_simulation_config();
    SceneConfig scene;
    SchedulePlan schedule;
    LinkConfig link;
    std::uint64_t seed = 1;
    double window = 1.0;    // metrics window, seconds
    double duration = 0.0;  // seconds; 0 runs for the whole schedule
    bool capture_symbols = true;
};

nlohmann::json to_json(const LinkConfig& link);
LinkConfig link_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

// Sum of (on + off) * repeat over the entries, seconds.
double schedule_duration(const SchedulePlan& plan);

struct ExperimentResult {
    LinkTrialResult trial;
    ScheduleResult schedule;
};

// Runs the experiment. With a run handle, the session's events, one metrics
// event and one MetricsRecord per window, and (optionally) per-window
// preamble symbol captures are written to it; the handle stays open.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Registry& registry, RunHandle* run = nullptr,
                                std::function<void(const MetricsRecord&)> on_record = {});

// Config snapshot stored in a run manifest: the experiment plus the
// descriptors of every scheduled waveform.
nlohmann::json experiment_snapshot(const ExperimentConfig& cfg, const Registry& registry);

// ASER and KLD recomputed from a run's window captures.
struct RecomputedWindow {
    std::int64_t window = 0;
    double aser = 0.0;
    std::optional<double> kld;
};

std::vector<RecomputedWindow> recompute_metrics(const std::filesystem::path& run_dir);

}  // namespace stormbench
