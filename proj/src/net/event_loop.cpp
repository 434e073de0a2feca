#include "voipbed/net/event_loop.h"

#include <poll.h>
#include <sys/eventfd.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <stdexcept>

namespace voipbed::net {

EventLoop::EventLoop() {
    wake_fd_ = ::eventfd(0, EFD_NONBLOCK | EFD_CLOEXEC);
    if (wake_fd_ < 0) throw std::runtime_error("eventfd failed");
}

EventLoop::~EventLoop() {
    if (wake_fd_ >= 0) ::close(wake_fd_);
}

void EventLoop::watch(int fd, Callback on_readable) {
    unwatch(fd);
    watches_.emplace_back(fd, std::move(on_readable));
}

void EventLoop::unwatch(int fd) {
    std::erase_if(watches_, [fd](const auto& w) { return w.first == fd; });
}

EventLoop::TimerId EventLoop::schedule_at(TimePoint when, Callback cb) {
    TimerId id = next_timer_++;
    timers_.emplace(id, std::move(cb));
    heap_.push(Timer{when, id});
    return id;
}

EventLoop::TimerId EventLoop::schedule_after(Duration delay, Callback cb) {
    return schedule_at(now() + delay, std::move(cb));
}

void EventLoop::cancel(TimerId id) { timers_.erase(id); }

void EventLoop::post(Callback cb) {
    {
        std::lock_guard lock(post_mutex_);
        posted_.push_back(std::move(cb));
    }
    std::uint64_t one = 1;
    [[maybe_unused]] auto n = ::write(wake_fd_, &one, sizeof one);
}

void EventLoop::stop() {
    stop_requested_ = true;
    std::uint64_t one = 1;
    [[maybe_unused]] auto n = ::write(wake_fd_, &one, sizeof one);
}

void EventLoop::drain_posted() {
    std::uint64_t value = 0;
    [[maybe_unused]] auto n = ::read(wake_fd_, &value, sizeof value);
    std::vector<Callback> batch;
    {
        std::lock_guard lock(post_mutex_);
        batch.swap(posted_);
    }
    for (auto& cb : batch) cb();
}

void EventLoop::fire_due_timers() {
    auto current = now();
    while (!heap_.empty() && heap_.top().when <= current) {
        auto id = heap_.top().id;
        heap_.pop();
        auto it = timers_.find(id);
        if (it == timers_.end()) continue;
        auto cb = std::move(it->second);
        timers_.erase(it);
        cb();
    }
}

void EventLoop::run() {
    owner_ = std::this_thread::get_id();
    std::vector<pollfd> fds;
    std::vector<int> ready;
    while (!stop_requested_) {
        while (!heap_.empty() && !timers_.contains(heap_.top().id)) heap_.pop();

        timespec ts{};
        timespec* timeout = nullptr;
        if (!heap_.empty()) {
            auto wait = std::max(Duration::zero(), heap_.top().when - now());
            ts.tv_sec = static_cast<time_t>(wait.count() / 1'000'000'000);
            ts.tv_nsec = static_cast<long>(wait.count() % 1'000'000'000);
            timeout = &ts;
        }

        fds.clear();
        fds.push_back(pollfd{wake_fd_, POLLIN, 0});
        for (const auto& w : watches_) fds.push_back(pollfd{w.first, POLLIN, 0});

        int rc = ::ppoll(fds.data(), fds.size(), timeout, nullptr);
        if (rc < 0 && errno != EINTR) throw std::runtime_error("ppoll failed");

        if (rc > 0) {
            ready.clear();
            for (std::size_t i = 1; i < fds.size(); ++i) {
                if (fds[i].revents & (POLLIN | POLLERR)) ready.push_back(fds[i].fd);
            }
            for (int fd : ready) {
                // A previous callback may have unwatched this fd.
                auto it = std::find_if(watches_.begin(), watches_.end(), [fd](const auto& w) { return w.first == fd; });
                if (it == watches_.end()) continue;
                auto cb = it->second;
                cb();
            }
            if (fds[0].revents & POLLIN) drain_posted();
        }
        fire_due_timers();
    }
    drain_posted();
    owner_ = std::thread::id{};
}

LoopThread::LoopThread(EventLoop& loop) : loop_(loop) {
    std::promise<void> started;
    auto ready = started.get_future();
    thread_ = std::thread([this, &started] {
        loop_.post([&started] { started.set_value(); });
        loop_.run();
    });
    ready.wait();
}

LoopThread::~LoopThread() {
    loop_.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace voipbed::net
