#pragma once

#include <functional>
#include <mutex>

#include "json.hpp"

namespace stormbench {

struct PowerStatus {
    double battery_fraction = 1.0;   // [0, 1]
    double estimated_runtime = 0.0;  // seconds
    double load = 0.0;               // watts
};

nlohmann::json to_json(const PowerStatus& s);

struct PowerConfig {
    // 1 kWh pack at a 500 W platform load: two hours from full.
    double capacity_joules = 3.6e6;
    double load_watts = 500.0;
};

// Simulated UPS battery. Charge drains at the configured load while
// draining is enabled (the service enables it while a session runs), and is
// recomputed from the injected clock on every read.
class PowerModel {
public:
    using Clock = std::function<double()>;  // monotone seconds

    explicit PowerModel(PowerConfig config = {}, Clock clock = {});

    PowerStatus status();

    // Throws RangeError for a non-positive load.
    void set_load(double watts);
    // Throws RangeError outside [0, 1].
    void set_fraction(double fraction);
    void set_draining(bool draining);

    // Called once, from status(), when the charge first reads zero.
    void on_exhausted(std::function<void()> callback);

private:
    void update();

    PowerConfig config_;
    Clock clock_;
    std::mutex mutex_;
    double energy_;
    double last_;
    bool draining_ = false;
    bool exhausted_reported_ = false;
    std::function<void()> exhausted_;
};

}  // namespace stormbench
