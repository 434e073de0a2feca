#include "voipbed/server/work_queue.h"

#include <algorithm>

namespace voipbed::server {

WorkQueue::WorkQueue(Duration service_cost, Duration max_backlog, Duration grace)
    : service_cost_(service_cost), max_backlog_(max_backlog), grace_(grace) {}

std::optional<TimePoint> WorkQueue::admit(TimePoint now) {
    auto work_from = std::max(now, free_at_);
    auto start = std::max(now, work_from - grace_);
    auto wait = start - now;
    if (service_cost_ > Duration::zero() && wait + service_cost_ > max_backlog_) {
        shed_.fetch_add(1, std::memory_order_relaxed);
        return std::nullopt;
    }
    free_at_ = work_from + service_cost_;
    admitted_.fetch_add(1, std::memory_order_relaxed);
    auto backlog_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(free_at_ - now).count();
    if (backlog_ns > max_seen_ns_.load(std::memory_order_relaxed)) {
        max_seen_ns_.store(backlog_ns, std::memory_order_relaxed);
    }
    return start;
}

Duration WorkQueue::backlog(TimePoint now) const { return std::max(Duration::zero(), Duration(free_at_ - now)); }

QueueStats WorkQueue::stats() const {
    return QueueStats{admitted_.load(), shed_.load(), Duration(max_seen_ns_.load())};
}

void RateMeter::record(TimePoint now) {
    auto tenth = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() / 100;
    auto slot = static_cast<std::size_t>(tenth % kSlots);
    if (slot_epoch_[slot] != tenth) {
        slot_epoch_[slot] = tenth;
        counts_[slot] = 0;
    }
    ++counts_[slot];
}

double RateMeter::rate(TimePoint now) {
    auto tenth = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() / 100;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < kSlots; ++i) {
        if (tenth - slot_epoch_[i] < static_cast<std::int64_t>(kSlots)) total += counts_[i];
    }
    return static_cast<double>(total);
}

}  // namespace voipbed::server
