#pragma once

#include <atomic>
#include <cstdint>
#include <optional>

#include "voipbed/net/event_loop.h"

namespace voipbed::server {

using net::Duration;
using net::TimePoint;

struct QueueStats {
    std::uint64_t admitted = 0;
    std::uint64_t shed = 0;
    Duration max_backlog{0};
};

// Single-server FIFO in virtual time. Each admitted signal adds
// `service_cost` of work. The first `grace` of backlog is absorbed without
// waiting (so a call's own signals don't queue behind each other at idle);
// a signal that would wait longer than `max_backlog` is shed instead.
class WorkQueue {
  public:
    WorkQueue(Duration service_cost, Duration max_backlog, Duration grace = Duration::zero());

    // Time at which service of this signal starts, or nullopt when shed.
    std::optional<TimePoint> admit(TimePoint now);

    Duration backlog(TimePoint now) const;
    QueueStats stats() const;

  private:
    Duration service_cost_;
    Duration max_backlog_;
    Duration grace_;
    TimePoint free_at_{};

    std::atomic<std::uint64_t> admitted_{0};
    std::atomic<std::uint64_t> shed_{0};
    std::atomic<std::int64_t> max_seen_ns_{0};
};

// Sliding one-second arrival-rate meter used for hard-failure detection.
class RateMeter {
  public:
    void record(TimePoint now);
    double rate(TimePoint now);

  private:
    static constexpr std::size_t kSlots = 10;
    std::int64_t slot_epoch_[kSlots] = {};
    std::uint32_t counts_[kSlots] = {};
};

}  // namespace voipbed::server
