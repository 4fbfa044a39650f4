// SPDX-License-Identifier: Apache-2.0
#include "trendnet/scheduler.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "trendnet/error.hpp"

namespace trendnet {

VirtualScheduler::VirtualScheduler(Stepper step, Clock now, DurationMs max_tick_ms)
    : step_(std::move(step)), now_(std::move(now)), max_tick_(max_tick_ms) {
  if (max_tick_ <= 0) {
    throw Error(ErrorCode::InvalidDuration, fmt::format("max tick must be positive, got {}", max_tick_));
  }
}

VirtualScheduler::TaskId VirtualScheduler::schedule_at(TimestampMs at, Callback callback) {
  const auto id = next_id_++;
  tasks_.emplace(id, Task{at, std::move(callback)});
  return id;
}

bool VirtualScheduler::cancel(TaskId id) { return tasks_.erase(id) > 0; }

std::optional<TimestampMs> VirtualScheduler::next_due() const {
  std::optional<TimestampMs> next;
  for (const auto& [_, task] : tasks_) {
    if (!next || task.at < *next) next = task.at;
  }
  return next;
}

void VirtualScheduler::fire_due() {
  // Earliest time first, then insertion order. Callbacks may schedule or
  // cancel tasks, so re-scan after every firing.
  while (true) {
    const auto now = now_();
    auto due = tasks_.end();
    for (auto it = tasks_.begin(); it != tasks_.end(); ++it) {
      if (it->second.at <= now && (due == tasks_.end() || it->second.at < due->second.at)) due = it;
    }
    if (due == tasks_.end()) return;
    auto callback = std::move(due->second.callback);
    tasks_.erase(due);
    callback(now);
  }
}

void VirtualScheduler::run_until(TimestampMs end) {
  fire_due();
  while (now_() < end) {
    const auto now = now_();
    auto target = std::min(end, floor_to(now, max_tick_) + max_tick_);
    if (auto next = next_due(); next && *next > now) target = std::min(target, *next);
    step_(target - now);
    fire_due();
  }
}

}  // namespace trendnet
