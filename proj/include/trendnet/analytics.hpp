// SPDX-License-Identifier: Apache-2.0
//
// Utilization from stored counters, hour-of-day benchmarks, sample
// evaluation and the trend state machine.
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trendnet/time_util.hpp"
#include "trendnet/tsdb.hpp"

namespace trendnet::analytics {

inline constexpr double kMaxUtilization = 1.05;

struct AnalyticsConfig {
  double threshold_fraction = 0.7;
  double deviation_multiplier = 2.0;
  int confirm_window = 3;
  DurationMs sample_period_ms = kHourMs;
  int benchmark_days = 3;
  DurationMs benchmark_reset_period_ms = 7 * kDayMs;
  double sigma_floor = 0.01;

  /// Every violated field, named.
  std::vector<std::string> violations() const;
};

struct LinkRef {
  std::string host_ip;
  std::string interface;
  std::string src;

  std::string key() const;  // "host_ip/interface"
  friend auto operator<=>(const LinkRef&, const LinkRef&) = default;
};

struct HourStat {
  double mean = 0.0;
  double sigma = 0.0;
  std::size_t samples = 0;

  friend bool operator==(const HourStat&, const HourStat&) = default;
};

struct Benchmark {
  LinkRef link;
  TimestampMs created_at_ms = 0;
  std::int64_t capacity_bps = 0;
  double threshold = 0.7;
  int days = 0;
  TimestampMs window_end_ms = 0;
  std::array<HourStat, 24> hours{};

  std::string id() const;  // "host_ip/interface@created_at_ms"
  std::size_t total_samples() const;

  nlohmann::ordered_json to_json() const;
  static Benchmark from_json(const nlohmann::json& j);

  friend bool operator==(const Benchmark&, const Benchmark&) = default;
};

struct UtilSample {
  TimestampMs start_ms = 0;
  TimestampMs end_ms = 0;
  double utilization = 0.0;
};

std::uint64_t counter_delta(std::uint32_t prev, std::uint32_t curr) noexcept;

/// Throws Error(ZeroInterval) or Error(ZeroCapacity).
double compute_utilization(double delta_octets, DurationMs dt_ms, double capacity_bps);

/// One sample per consecutive pair of outOctets points.
std::vector<UtilSample> utilization_series(std::span<const tsdb::DataPoint> out_octets,
                                           double capacity_bps);

tsdb::SeriesKey out_octets_key(const LinkRef& link);

/// Window [floor_hour(window_end) - D days, floor_hour(window_end)).
/// Throws Error(InsufficientData) listing every hour with fewer than D samples.
Benchmark build_benchmark(const tsdb::TimeSeriesStore& store, const LinkRef& link,
                          std::int64_t capacity_bps, const AnalyticsConfig& cfg,
                          TimestampMs window_end_ms, TimestampMs created_at_ms);

bool evaluate_sample(const Benchmark& bm, const AnalyticsConfig& cfg, int hour, double util);

bool should_reset(const Benchmark& bm, TimestampMs now_ms, const AnalyticsConfig& cfg) noexcept;

struct TrendEvent {
  std::string id;
  LinkRef link;
  TimestampMs started_at_ms = 0;
  TimestampMs confirmed_at_ms = 0;
  std::optional<TimestampMs> ended_at_ms;
  double peak_utilization = 0.0;
  std::string benchmark_id;

  nlohmann::ordered_json to_json() const;
  static TrendEvent from_json(const nlohmann::json& j);

  friend bool operator==(const TrendEvent&, const TrendEvent&) = default;
};

struct TrendState {
  LinkRef link;
  int consecutive_flags = 0;
  bool active = false;
  std::optional<TrendEvent> current_event;
  TimestampMs pending_start_ms = 0;
  double pending_peak = 0.0;
  std::optional<TimestampMs> last_sample_ms;

  nlohmann::json to_json() const;
  static TrendState from_json(const nlohmann::json& j);

  friend bool operator==(const TrendState&, const TrendState&) = default;
};

enum class TransitionKind { Confirmed, Ended };
std::string_view to_string(TransitionKind kind) noexcept;

struct TrendTransition {
  TransitionKind kind;
  TrendEvent event;
};

struct TrendStep {
  TrendState state;
  std::optional<TrendTransition> transition;
};

/// Throws Error(OutOfOrderSample) unless now_ms is past the previous sample.
TrendStep advance_trend(const TrendState& state, bool flagged, TimestampMs now_ms, double util,
                        const AnalyticsConfig& cfg, const std::string& benchmark_id);

nlohmann::json to_json(const LinkRef& link);
LinkRef link_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnalyticsConfig& cfg);

}  // namespace trendnet::analytics
