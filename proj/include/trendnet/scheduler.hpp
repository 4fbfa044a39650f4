// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <utility>

#include "trendnet/time_util.hpp"

namespace trendnet {

/// Event queue on virtual time. Between events the world is advanced by the
/// stepper in ticks no longer than `max_tick_ms`, aligned to multiples of it.
class VirtualScheduler {
 public:
  using TaskId = std::uint64_t;
  using Callback = std::function<void(TimestampMs)>;
  using Stepper = std::function<void(DurationMs)>;
  using Clock = std::function<TimestampMs()>;

  VirtualScheduler(Stepper step, Clock now, DurationMs max_tick_ms);

  TaskId schedule_at(TimestampMs at, Callback callback);
  bool cancel(TaskId id);
  bool pending(TaskId id) const { return tasks_.contains(id); }

  /// Fires every due event, stepping the world up to and including `end`.
  void run_until(TimestampMs end);

  TimestampMs now() const { return now_(); }
  std::optional<TimestampMs> next_due() const;
  DurationMs max_tick() const noexcept { return max_tick_; }

 private:
  struct Task {
    TimestampMs at;
    Callback callback;
  };
  void fire_due();

  Stepper step_;
  Clock now_;
  DurationMs max_tick_;
  TaskId next_id_ = 1;
  std::map<TaskId, Task> tasks_;
};

}  // namespace trendnet
