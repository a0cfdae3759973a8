#include "stormbench/power.hpp"

#include <algorithm>
#include <chrono>

#include "stormbench/error.hpp"

namespace stormbench {

nlohmann::json to_json(const PowerStatus& s) {
    return nlohmann::json{
        {"battery_fraction", s.battery_fraction}, {"estimated_runtime", s.estimated_runtime}, {"load", s.load}};
}

PowerModel::PowerModel(PowerConfig config, Clock clock) : config_(config), clock_(std::move(clock)) {
    if (!(config_.capacity_joules > 0)) fail(ErrorCode::ConfigError, "battery capacity must be positive");
    if (!(config_.load_watts > 0)) fail(ErrorCode::ConfigError, "load must be positive");
    if (!clock_) {
        clock_ = [] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
        };
    }
    energy_ = config_.capacity_joules;
    last_ = clock_();
}

void PowerModel::update() {
    const double now = clock_();
    if (draining_ && now > last_) energy_ = std::max(0.0, energy_ - config_.load_watts * (now - last_));
    last_ = std::max(last_, now);
}

PowerStatus PowerModel::status() {
    std::function<void()> notify;
    PowerStatus s;
    {
        std::lock_guard lock(mutex_);
        update();
        s.battery_fraction = std::clamp(energy_ / config_.capacity_joules, 0.0, 1.0);
        s.load = config_.load_watts;
        s.estimated_runtime = s.battery_fraction * config_.capacity_joules / config_.load_watts;
        if (s.battery_fraction == 0.0 && !exhausted_reported_) {
            exhausted_reported_ = true;
            notify = exhausted_;
        }
    }
    if (notify) notify();
    return s;
}

void PowerModel::set_load(double watts) {
    if (!(watts > 0)) fail(ErrorCode::RangeError, "load must be positive");
    std::lock_guard lock(mutex_);
    update();
    config_.load_watts = watts;
}

void PowerModel::set_fraction(double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) fail(ErrorCode::RangeError, "battery fraction must lie in [0, 1]");
    std::lock_guard lock(mutex_);
    update();
    energy_ = fraction * config_.capacity_joules;
    if (fraction > 0.0) exhausted_reported_ = false;
}

void PowerModel::set_draining(bool draining) {
    std::lock_guard lock(mutex_);
    update();
    draining_ = draining;
}

void PowerModel::on_exhausted(std::function<void()> callback) {
    std::lock_guard lock(mutex_);
    exhausted_ = std::move(callback);
}

}  // namespace stormbench
