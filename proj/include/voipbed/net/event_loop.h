#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>
#include <unordered_map>
#include <vector>

namespace voipbed::net {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;
using Duration = std::chrono::nanoseconds;

// Single-threaded reactor: fd readiness + a timer heap + a cross-thread post
// queue. Every method except post() and stop() must be called on the loop
// thread (or before run() starts).
class EventLoop {
  public:
    using Callback = std::function<void()>;
    using TimerId = std::uint64_t;

    EventLoop();
    ~EventLoop();
    EventLoop(const EventLoop&) = delete;
    EventLoop& operator=(const EventLoop&) = delete;

    void watch(int fd, Callback on_readable);
    void unwatch(int fd);

    TimerId schedule_at(TimePoint when, Callback cb);
    TimerId schedule_after(Duration delay, Callback cb);
    void cancel(TimerId id);

    void post(Callback cb);
    void run();
    void stop();

    bool on_loop_thread() const { return std::this_thread::get_id() == owner_.load(); }
    static TimePoint now() { return Clock::now(); }

  private:
    struct Timer {
        TimePoint when;
        TimerId id;
        bool operator>(const Timer& o) const { return when != o.when ? when > o.when : id > o.id; }
    };

    void drain_posted();
    void fire_due_timers();

    int wake_fd_ = -1;
    std::vector<std::pair<int, Callback>> watches_;
    std::priority_queue<Timer, std::vector<Timer>, std::greater<>> heap_;
    std::unordered_map<TimerId, Callback> timers_;
    TimerId next_timer_ = 1;

    std::mutex post_mutex_;
    std::vector<Callback> posted_;
    std::atomic<bool> stop_requested_{false};
    std::atomic<std::thread::id> owner_{};
};

// Runs an EventLoop on a dedicated thread; stops and joins on destruction.
class LoopThread {
  public:
    explicit LoopThread(EventLoop& loop);
    ~LoopThread();
    LoopThread(const LoopThread&) = delete;
    LoopThread& operator=(const LoopThread&) = delete;

    // Runs `fn` on the loop thread and waits for it.
    template <typename Fn>
    auto call(Fn&& fn) -> decltype(fn());

  private:
    EventLoop& loop_;
    std::thread thread_;
};

}  // namespace voipbed::net

#include <future>

namespace voipbed::net {

template <typename Fn>
auto LoopThread::call(Fn&& fn) -> decltype(fn()) {
    using R = decltype(fn());
    if (loop_.on_loop_thread()) return fn();
    std::packaged_task<R()> task(std::forward<Fn>(fn));
    auto fut = task.get_future();
    loop_.post([&task] { task(); });
    return fut.get();
}

}  // namespace voipbed::net
