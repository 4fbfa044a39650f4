// SPDX-License-Identifier: Apache-2.0
//
// Polls the simulator's two telemetry surfaces: device counters on
// traditional routers (src "collectd") and per-port stats on SDN switches
// (src "sdn").
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trendnet/counters.hpp"
#include "trendnet/error.hpp"
#include "trendnet/netsim.hpp"
#include "trendnet/scheduler.hpp"

namespace trendnet::collector {

inline constexpr std::string_view kSrcCollectd = "collectd";
inline constexpr std::string_view kSrcSdn = "sdn";

struct RawSample {
  std::string src;
  std::string device;
  std::string host_ip;
  std::string interface;
  CounterSet counters;
  TimestampMs timestamp_ms = 0;

  friend bool operator==(const RawSample&, const RawSample&) = default;
};

struct PollSchedule {
  DurationMs period_ms = kHourMs;
  DurationMs jitter_ms = 0;
};

std::vector<RawSample> poll_traditional(const netsim::SimNetwork& net, const std::string& device_id);
std::vector<RawSample> poll_sdn(const netsim::SimNetwork& net);

/// Every device's samples, devices sorted by id and interfaces by name.
std::vector<RawSample> poll_all(const netsim::SimNetwork& net);

/// Consumer of poll rounds. Throwing Error(SinkClosed) from deliver() stops the poller.
class SampleSink {
 public:
  virtual ~SampleSink() = default;
  virtual void deliver(const RawSample& sample) = 0;
  virtual void round_complete(TimestampMs /*ts*/) {}
};

/// Periodic poll task on the virtual clock; the handle returned by run_poller.
class Poller {
 public:
  Poller(const netsim::SimNetwork& net, VirtualScheduler& scheduler, PollSchedule schedule,
         SampleSink& sink);
  ~Poller();
  Poller(const Poller&) = delete;
  Poller& operator=(const Poller&) = delete;

  /// Schedules the first round at `first_due` (defaults to now + period).
  void start(std::optional<TimestampMs> first_due = std::nullopt);
  void stop();
  /// An unscheduled round at the current instant.
  void poll_now();

  bool running() const noexcept { return task_.has_value(); }
  std::size_t rounds() const noexcept { return rounds_; }
  std::optional<TimestampMs> next_due() const noexcept { return next_boundary_; }
  const std::optional<Error>& error() const noexcept { return error_; }

 private:
  void fire(TimestampMs boundary);
  void schedule(TimestampMs boundary);
  bool deliver_round(TimestampMs now);

  const netsim::SimNetwork& net_;
  VirtualScheduler& scheduler_;
  PollSchedule schedule_;
  SampleSink& sink_;
  std::optional<VirtualScheduler::TaskId> task_;
  std::optional<TimestampMs> next_boundary_;
  std::size_t rounds_ = 0;
  std::optional<Error> error_;
};

}  // namespace trendnet::collector
