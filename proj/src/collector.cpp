// SPDX-License-Identifier: Apache-2.0
#include "trendnet/collector.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace trendnet::collector {

namespace {

RawSample to_raw(std::string_view src, const netsim::CounterSample& s) {
  return {std::string(src), s.device, s.host_ip, s.interface, s.counters, s.timestamp_ms};
}

}  // namespace

std::vector<RawSample> poll_traditional(const netsim::SimNetwork& net, const std::string& device_id) {
  std::vector<RawSample> out;
  for (const auto& s : net.read_counters(device_id)) out.push_back(to_raw(kSrcCollectd, s));
  return out;
}

std::vector<RawSample> poll_sdn(const netsim::SimNetwork& net) {
  std::vector<RawSample> out;
  for (const auto& s : net.read_flow_stats()) out.push_back(to_raw(kSrcSdn, s));
  return out;
}

std::vector<RawSample> poll_all(const netsim::SimNetwork& net) {
  std::vector<RawSample> out;
  for (const auto& d : net.topology().devices) {
    if (d.kind != netsim::DeviceKind::Traditional) continue;
    auto part = poll_traditional(net, d.id);
    out.insert(out.end(), part.begin(), part.end());
  }
  auto sdn = poll_sdn(net);
  out.insert(out.end(), sdn.begin(), sdn.end());
  std::stable_sort(out.begin(), out.end(), [](const RawSample& a, const RawSample& b) {
    return std::tie(a.device, a.interface) < std::tie(b.device, b.interface);
  });
  return out;
}

Poller::Poller(const netsim::SimNetwork& net, VirtualScheduler& scheduler, PollSchedule schedule,
               SampleSink& sink)
    : net_(net), scheduler_(scheduler), schedule_(schedule), sink_(sink) {
  if (schedule_.period_ms <= 0 || schedule_.jitter_ms < 0) {
    throw Error(ErrorCode::InvalidDuration,
                fmt::format("poll period must be positive (got {}) and jitter non-negative (got {})",
                            schedule_.period_ms, schedule_.jitter_ms));
  }
}

Poller::~Poller() { stop(); }

void Poller::start(std::optional<TimestampMs> first_due) {
  stop();
  error_.reset();
  schedule(first_due.value_or(scheduler_.now() + schedule_.period_ms));
}

void Poller::stop() {
  if (task_) scheduler_.cancel(*task_);
  task_.reset();
  next_boundary_.reset();
}

void Poller::schedule(TimestampMs boundary) {
  next_boundary_ = boundary;
  TimestampMs at = boundary;
  if (schedule_.jitter_ms > 0) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(boundary));
    at += std::uniform_int_distribution<DurationMs>(0, schedule_.jitter_ms)(rng);
  }
  task_ = scheduler_.schedule_at(at, [this, boundary](TimestampMs) { fire(boundary); });
}

void Poller::fire(TimestampMs boundary) {
  task_.reset();
  if (!deliver_round(scheduler_.now())) return;
  schedule(boundary + schedule_.period_ms);
}

void Poller::poll_now() { deliver_round(scheduler_.now()); }

bool Poller::deliver_round(TimestampMs now) {
  try {
    for (const auto& sample : poll_all(net_)) sink_.deliver(sample);
    sink_.round_complete(now);
    ++rounds_;
    return true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SinkClosed) throw;
    spdlog::warn("poller stopped: {}", e.what());
    error_ = e;
    stop();
    return false;
  }
}

}  // namespace trendnet::collector
