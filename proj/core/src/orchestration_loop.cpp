#include "stormbench/orchestration_loop.hpp"

#include <chrono>

namespace stormbench {

OrchestrationLoop::OrchestrationLoop(std::unique_ptr<Session> session, LoopOptions options)
    : session_(std::move(session)), options_(options) {
    thread_ = std::thread([this] { run(); });
}

OrchestrationLoop::~OrchestrationLoop() { shutdown(); }

void OrchestrationLoop::shutdown() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) thread_.join();
}

void OrchestrationLoop::enqueue(std::function<void(Session&)> command) {
    {
        std::lock_guard lock(mutex_);
        if (stopping_) {
            // Run nothing; the packaged task is destroyed and its future
            // reports broken_promise.
            return;
        }
        commands_.push_back(std::move(command));
    }
    cv_.notify_all();
}

void OrchestrationLoop::run() {
    using clock = std::chrono::steady_clock;
    Session& s = *session_;
    bool was_running = false;
    clock::time_point anchor_time{};
    std::int64_t anchor_sample = 0;

    for (;;) {
        std::deque<std::function<void(Session&)>> batch;
        {
            std::unique_lock lock(mutex_);
            if (!stopping_ && commands_.empty()) {
                if (s.state() != SessionState::Running) {
                    cv_.wait(lock, [&] { return stopping_ || !commands_.empty(); });
                } else if (options_.realtime) {
                    const double ahead = static_cast<double>(s.stream_clock() - anchor_sample) /
                                         (s.sample_rate() * options_.speed);
                    const auto due = anchor_time + std::chrono::duration_cast<clock::duration>(
                                                       std::chrono::duration<double>(ahead));
                    cv_.wait_until(lock, due, [&] { return stopping_ || !commands_.empty(); });
                }
            }
            if (stopping_) return;
            batch.swap(commands_);
        }
        for (auto& c : batch) c(s);

        const bool running = s.state() == SessionState::Running;
        if (running && !was_running) {
            anchor_time = clock::now();
            anchor_sample = s.stream_clock();
        }
        was_running = running;
        if (!running) continue;

        if (options_.realtime) {
            const double elapsed = std::chrono::duration<double>(clock::now() - anchor_time).count();
            const auto target = anchor_sample + static_cast<std::int64_t>(elapsed * s.sample_rate() * options_.speed);
            if (s.stream_clock() >= target) continue;
        }
        s.advance(s.config().buffer_size);
    }
}

}  // namespace stormbench
