#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace stormbench {

// Bounded per-subscriber queue. When full, the oldest item is discarded so a
// slow reader never blocks the publisher.
template <class T>
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    std::optional<T> try_pop() {
        std::lock_guard lock(mutex_);
        return pop_locked();
    }

    // Waits up to `timeout`; returns nothing on timeout or once closed and
    // drained.
    template <class Rep, class Period>
    std::optional<T> pop(std::chrono::duration<Rep, Period> timeout) {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
        return pop_locked();
    }

    std::uint64_t dropped() const {
        std::lock_guard lock(mutex_);
        return dropped_;
    }

    bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }

    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    // Publisher side.
    void push(const T& item) {
        {
            std::lock_guard lock(mutex_);
            if (closed_) return;
            if (items_.size() == capacity_) {
                items_.pop_front();
                ++dropped_;
            }
            items_.push_back(item);
        }
        cv_.notify_one();
    }

private:
    std::optional<T> pop_locked() {
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<T> items_;
    std::uint64_t dropped_ = 0;
    bool closed_ = false;
};

// Fan-out of one producer to any number of lossy subscribers. Every
// subscriber sees items in publish order; each drops independently.
template <class T>
class BroadcastChannel {
public:
    explicit BroadcastChannel(std::size_t capacity = 64) : capacity_(capacity) {}

    std::shared_ptr<Subscription<T>> subscribe() {
        auto s = std::make_shared<Subscription<T>>(capacity_);
        std::lock_guard lock(mutex_);
        subscribers_.push_back(s);
        return s;
    }

    void publish(const T& item) {
        std::vector<std::shared_ptr<Subscription<T>>> live;
        {
            std::lock_guard lock(mutex_);
            std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
            for (const auto& w : subscribers_) {
                if (auto s = w.lock()) live.push_back(std::move(s));
            }
        }
        for (const auto& s : live) s->push(item);
    }

    std::size_t subscriber_count() {
        std::lock_guard lock(mutex_);
        std::erase_if(subscribers_, [](const auto& w) { return w.expired(); });
        return subscribers_.size();
    }

    void close_all() {
        std::lock_guard lock(mutex_);
        for (const auto& w : subscribers_) {
            if (auto s = w.lock()) s->close();
        }
        subscribers_.clear();
    }

private:
    std::size_t capacity_;
    std::mutex mutex_;
    std::vector<std::weak_ptr<Subscription<T>>> subscribers_;
};

}  // namespace stormbench
