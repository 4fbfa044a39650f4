// SPDX-License-Identifier: Apache-2.0
//
// The in-process system: simulator, poller, bus, store, analytics and
// actioner wired together on one virtual clock, with file persistence in a
// data directory. Both the HTTP service and the CLI drive this class.
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "trendnet/actioner.hpp"
#include "trendnet/analytics.hpp"
#include "trendnet/collector.hpp"
#include "trendnet/config.hpp"
#include "trendnet/journal.hpp"
#include "trendnet/netsim.hpp"
#include "trendnet/pipeline.hpp"
#include "trendnet/scheduler.hpp"
#include "trendnet/tsdb.hpp"

namespace trendnet::service {

enum class EventKind { Sample, Benchmark, Trend, Decision };
std::string_view to_string(EventKind kind) noexcept;

struct EventEnvelope {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Sample;
  TimestampMs ts_ms = 0;
  nlohmann::json payload;

  nlohmann::ordered_json to_json() const;
  static EventEnvelope from_json(const nlohmann::json& j);
};

/// A link egress whose utilization is benchmarked and evaluated.
struct MonitoredLink {
  analytics::LinkRef link;
  netsim::InterfaceRef iface;
  std::int64_t capacity_bps = 0;
};

struct SeriesQuery {
  std::string metric;  // a counter name or "utilization"
  std::string host_ip;
  std::string interface;
  std::string src;  // empty: inferred from the device kind
  TimestampMs from_ms = 0;
  TimestampMs to_ms = std::numeric_limits<TimestampMs>::max();
  std::optional<DurationMs> bucket_ms;
  tsdb::AggregateFn fn = tsdb::AggregateFn::Mean;
};

class Engine {
 public:
  struct Options {
    SystemConfig config = SystemConfig::defaults();
    /// Without a data directory nothing is persisted.
    std::optional<std::filesystem::path> data_dir;
    bool require_approval = false;
  };

  /// Opens or creates the data directory. When it already holds a
  /// config.json, that file wins over `options.config`.
  explicit Engine(Options options);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  TimestampMs now() const;
  /// Runs the world forward; every poll round is evaluated and checkpointed.
  void advance(DurationMs duration);
  void advance_to(TimestampMs t);

  /// Scales the demand src->dst by `factor` over [now, now + duration).
  netsim::Injection inject(const Cidr& src, const Cidr& dst, double factor, DurationMs duration);
  void set_noise_enabled(bool enabled);

  /// Builds benchmarks ending at now for every monitored link (or only
  /// `only`). Throws Error(InsufficientData) naming each deficient
  /// link/hour; nothing is stored in that case.
  std::vector<analytics::Benchmark> run_benchmarks(int days,
                                                   const std::optional<analytics::LinkRef>& only = {});
  std::optional<analytics::Benchmark> benchmark(const std::string& host_ip,
                                                const std::string& interface) const;
  std::vector<analytics::Benchmark> benchmarks() const;
  std::vector<analytics::TrendEvent> trends(std::optional<bool> active = {}) const;
  std::vector<MonitoredLink> monitored_links() const { return monitored_; }

  nlohmann::ordered_json series(const SeriesQuery& q) const;

  std::vector<actioner::LoadBalanceDecision> decisions() const;
  actioner::LoadBalanceDecision approve(const std::string& id);
  actioner::LoadBalanceDecision revert(const std::string& id);

  SystemConfig config() const;
  /// Runtime patch; see patch_runtime_config. Persisted before returning.
  SystemConfig update_config(const nlohmann::json& patch);

  nlohmann::ordered_json topology_json() const;
  nlohmann::ordered_json sim_json() const;

  std::vector<EventEnvelope> events_after(std::uint64_t seq, std::size_t max = 1024) const;
  /// Blocks until an event past `seq` exists or the timeout passes.
  bool wait_event(std::uint64_t seq, std::chrono::milliseconds timeout) const;
  std::uint64_t last_seq() const;

  /// Advances virtual time with wall time at the configured acceleration.
  void start_clock();
  void stop_clock();

  /// Writes state.json. Called after every round and mutation.
  void checkpoint();

  std::size_t rounds() const;

 private:
  class Sink;

  void open_storage();
  void restore(const nlohmann::json& state);
  void fresh_start();
  void on_round(TimestampMs ts);
  void evaluate(const MonitoredLink& m, TimestampMs ts);
  std::optional<analytics::UtilSample> latest_utilization(const netsim::InterfaceRef& iface,
                                                          TimestampMs ts) const;
  actioner::TrendContext context_for(const MonitoredLink& m, TimestampMs ts) const;
  void record_benchmark(const analytics::Benchmark& bm);
  void record_trend(const analytics::TrendTransition& t);
  void record_decision(const actioner::LoadBalanceDecision& d);
  void emit(EventKind kind, TimestampMs ts, nlohmann::json payload);
  void checkpoint_locked();
  void write_config_locked();
  void advance_locked(TimestampMs t);
  std::string src_of(const std::string& device) const;
  std::optional<netsim::InterfaceRef> iface_of(const std::string& host_ip, const std::string& interface) const;
  std::filesystem::path file(const char* name) const { return *data_dir_ / name; }

  SystemConfig cfg_;
  std::optional<std::filesystem::path> data_dir_;
  bool require_approval_ = false;
  actioner::Policy file_policy_ = actioner::Policy::Auto;

  mutable std::mutex mutex_;
  netsim::SimNetwork net_;
  std::unique_ptr<VirtualScheduler> scheduler_;
  std::unique_ptr<pipeline::IngestBus> bus_;
  std::unique_ptr<tsdb::TimeSeriesStore> store_;
  std::unique_ptr<tsdb::IngestBridge> bridge_;
  std::unique_ptr<Sink> sink_;
  std::unique_ptr<collector::Poller> poller_;
  std::unique_ptr<actioner::Actioner> actioner_;

  std::vector<MonitoredLink> monitored_;
  std::map<std::string, analytics::Benchmark> benchmarks_;  // by link key
  std::map<std::string, analytics::TrendState> trend_states_;
  std::vector<std::string> trend_order_;
  std::map<std::string, analytics::TrendEvent> trend_events_;
  std::map<netsim::InterfaceRef, std::map<Cidr, std::uint64_t>> share_;
  std::size_t rounds_ = 0;

  Journal decisions_journal_;
  Journal trends_journal_;
  Journal benchmarks_journal_;
  Journal events_journal_;

  mutable std::mutex events_mutex_;
  mutable std::condition_variable events_cv_;
  std::vector<EventEnvelope> events_;

  std::atomic<bool> clock_running_{false};
  std::thread clock_thread_;
};

}  // namespace trendnet::service
