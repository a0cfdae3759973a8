#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>

#include "stormbench/session.hpp"

namespace stormbench {

struct LoopOptions {
    // Pace emission to the sample clock. Off, the loop emits as fast as the
    // generators run (tests, headless runs).
    bool realtime = true;
    double speed = 1.0;  // stream seconds per wall second when realtime
};

// The single authoritative owner of a Session. Commands are queued and run
// on the loop thread between buffers, in submission order; callers get a
// future for the result (or the exception). Sample emission continues
// between commands and never waits on a caller.
class OrchestrationLoop {
public:
    explicit OrchestrationLoop(std::unique_ptr<Session> session, LoopOptions options = {});
    ~OrchestrationLoop();

    OrchestrationLoop(const OrchestrationLoop&) = delete;
    OrchestrationLoop& operator=(const OrchestrationLoop&) = delete;

    template <class F>
    auto submit(F&& f) -> std::future<std::invoke_result_t<F&, Session&>> {
        using R = std::invoke_result_t<F&, Session&>;
        auto task = std::make_shared<std::packaged_task<R(Session&)>>(std::forward<F>(f));
        auto fut = task->get_future();
        enqueue([task](Session& s) { (*task)(s); });
        return fut;
    }

    // submit(f).get(): blocks the caller, rethrows command errors.
    template <class F>
    auto call(F&& f) {
        return submit(std::forward<F>(f)).get();
    }

    void shutdown();

private:
    void enqueue(std::function<void(Session&)> command);
    void run();

    std::unique_ptr<Session> session_;
    LoopOptions options_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::function<void(Session&)>> commands_;
    bool stopping_ = false;
    std::thread thread_;
};

}  // namespace stormbench
