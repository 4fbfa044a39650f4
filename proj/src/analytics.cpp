// SPDX-License-Identifier: Apache-2.0
#include "trendnet/analytics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "trendnet/counters.hpp"
#include "trendnet/error.hpp"

namespace trendnet::analytics {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> AnalyticsConfig::violations() const {
  std::vector<std::string> out;
  if (!(threshold_fraction > 0.0 && threshold_fraction <= 1.0)) {
    out.push_back(fmt::format("analytics.threshold_fraction must be in (0, 1], got {}", threshold_fraction));
  }
  if (!(deviation_multiplier > 0.0)) {
    out.push_back(fmt::format("analytics.deviation_multiplier must be positive, got {}", deviation_multiplier));
  }
  if (confirm_window <= 0) {
    out.push_back(fmt::format("analytics.confirm_window must be positive, got {}", confirm_window));
  }
  if (sample_period_ms <= 0) {
    out.push_back(fmt::format("analytics.sample_period_ms must be positive, got {}", sample_period_ms));
  }
  if (benchmark_days <= 0) {
    out.push_back(fmt::format("analytics.benchmark_days must be positive, got {}", benchmark_days));
  }
  if (benchmark_reset_period_ms <= 0) {
    out.push_back(fmt::format("analytics.benchmark_reset_period_ms must be positive, got {}",
                              benchmark_reset_period_ms));
  }
  if (!(sigma_floor >= 0.0)) {
    out.push_back(fmt::format("analytics.sigma_floor must be non-negative, got {}", sigma_floor));
  }
  return out;
}

std::string LinkRef::key() const { return host_ip + "/" + interface; }

std::string Benchmark::id() const { return fmt::format("{}@{}", link.key(), created_at_ms); }

std::size_t Benchmark::total_samples() const {
  std::size_t n = 0;
  for (const auto& h : hours) n += h.samples;
  return n;
}

json to_json(const LinkRef& link) {
  return json{{"host_ip", link.host_ip}, {"interface", link.interface}, {"src", link.src}};
}

LinkRef link_from_json(const json& j) {
  return LinkRef{j.at("host_ip").get<std::string>(), j.at("interface").get<std::string>(),
                 j.value("src", std::string(collector::kSrcCollectd))};
}

json to_json(const AnalyticsConfig& cfg) {
  return json{{"threshold_fraction", cfg.threshold_fraction},
              {"deviation_multiplier", cfg.deviation_multiplier},
              {"confirm_window", cfg.confirm_window},
              {"sample_period_ms", cfg.sample_period_ms},
              {"benchmark_days", cfg.benchmark_days},
              {"benchmark_reset_period_ms", cfg.benchmark_reset_period_ms},
              {"sigma_floor", cfg.sigma_floor}};
}

ordered_json Benchmark::to_json() const {
  ordered_json hrs = ordered_json::array();
  for (int h = 0; h < 24; ++h) {
    hrs.push_back({{"h", h},
                   {"mean", hours[h].mean},
                   {"sigma", hours[h].sigma},
                   {"samples", hours[h].samples}});
  }
  ordered_json j;
  j["id"] = id();
  j["link"] = analytics::to_json(link);
  j["created_at"] = created_at_ms;
  j["capacity_bps"] = capacity_bps;
  j["threshold"] = threshold;
  j["days"] = days;
  j["window_end"] = window_end_ms;
  j["hours"] = std::move(hrs);
  return j;
}

Benchmark Benchmark::from_json(const json& j) {
  try {
    Benchmark bm;
    bm.link = link_from_json(j.at("link"));
    bm.created_at_ms = j.at("created_at").get<TimestampMs>();
    bm.capacity_bps = j.at("capacity_bps").get<std::int64_t>();
    bm.threshold = j.at("threshold").get<double>();
    bm.days = j.value("days", 0);
    bm.window_end_ms = j.value("window_end", TimestampMs{0});
    const auto& hrs = j.at("hours");
    if (hrs.size() != 24) throw Error(ErrorCode::ParseError, "benchmark needs 24 hours");
    for (const auto& row : hrs) {
      auto h = row.at("h").get<int>();
      if (h < 0 || h > 23) throw Error(ErrorCode::ParseError, fmt::format("bad hour {}", h));
      bm.hours[h] = HourStat{row.at("mean").get<double>(), row.at("sigma").get<double>(),
                             row.value("samples", std::size_t{0})};
    }
    return bm;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, fmt::format("benchmark document: {}", e.what()));
  }
}

std::uint64_t counter_delta(std::uint32_t prev, std::uint32_t curr) noexcept {
  if (curr >= prev) return curr - prev;
  return static_cast<std::uint64_t>(curr) + (std::uint64_t{1} << 32) - prev;
}

double compute_utilization(double delta_octets, DurationMs dt_ms, double capacity_bps) {
  if (dt_ms <= 0) throw Error(ErrorCode::ZeroInterval, fmt::format("interval {} ms", dt_ms));
  if (!(capacity_bps > 0.0)) {
    throw Error(ErrorCode::ZeroCapacity, fmt::format("capacity {} bps", capacity_bps));
  }
  const double dt_s = static_cast<double>(dt_ms) / 1000.0;
  const double u = delta_octets * 8.0 / (dt_s * capacity_bps);
  return std::clamp(u, 0.0, kMaxUtilization);
}

std::vector<UtilSample> utilization_series(std::span<const tsdb::DataPoint> out_octets,
                                           double capacity_bps) {
  std::vector<UtilSample> out;
  for (std::size_t i = 1; i < out_octets.size(); ++i) {
    const auto& a = out_octets[i - 1];
    const auto& b = out_octets[i];
    const auto delta = counter_delta(static_cast<std::uint32_t>(a.value),
                                     static_cast<std::uint32_t>(b.value));
    out.push_back({a.ts_ms, b.ts_ms,
                   compute_utilization(static_cast<double>(delta), b.ts_ms - a.ts_ms, capacity_bps)});
  }
  return out;
}

tsdb::SeriesKey out_octets_key(const LinkRef& link) {
  return tsdb::SeriesKey{std::string(metric_name(Metric::OutOctets)), link.host_ip, link.interface,
                         link.src};
}

Benchmark build_benchmark(const tsdb::TimeSeriesStore& store, const LinkRef& link,
                          std::int64_t capacity_bps, const AnalyticsConfig& cfg,
                          TimestampMs window_end_ms, TimestampMs created_at_ms) {
  const auto end = floor_to(window_end_ms, kHourMs);
  const auto start = end - cfg.benchmark_days * kDayMs;
  const auto points = store.query(out_octets_key(link), start, end + 1);

  std::array<std::vector<double>, 24> by_hour;
  for (const auto& s : utilization_series(points, static_cast<double>(capacity_bps))) {
    if (s.start_ms < start || s.end_ms > end) continue;
    by_hour[hour_of_day(s.start_ms)].push_back(s.utilization);
  }

  std::vector<std::string> missing;
  for (int h = 0; h < 24; ++h) {
    if (by_hour[h].size() < static_cast<std::size_t>(cfg.benchmark_days)) {
      missing.push_back(fmt::format("hour {} has {} of {} samples", h, by_hour[h].size(),
                                    cfg.benchmark_days));
    }
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::InsufficientData,
                fmt::format("{} over [{}, {})", link.key(), iso8601_ms(start), iso8601_ms(end)),
                missing);
  }

  Benchmark bm;
  bm.link = link;
  bm.created_at_ms = created_at_ms;
  bm.capacity_bps = capacity_bps;
  bm.threshold = cfg.threshold_fraction;
  bm.days = cfg.benchmark_days;
  bm.window_end_ms = end;
  for (int h = 0; h < 24; ++h) {
    const auto& xs = by_hour[h];
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    bm.hours[h] = HourStat{mean, std::sqrt(ss / static_cast<double>(xs.size())), xs.size()};
  }
  return bm;
}

bool evaluate_sample(const Benchmark& bm, const AnalyticsConfig& cfg, int hour, double util) {
  if (hour < 0 || hour > 23) throw Error(ErrorCode::ValidationError, fmt::format("hour {}", hour));
  const auto& hs = bm.hours[hour];
  return util > cfg.threshold_fraction &&
         std::abs(util - hs.mean) > cfg.deviation_multiplier * std::max(hs.sigma, cfg.sigma_floor);
}

bool should_reset(const Benchmark& bm, TimestampMs now_ms, const AnalyticsConfig& cfg) noexcept {
  return now_ms - bm.created_at_ms >= cfg.benchmark_reset_period_ms;
}

ordered_json TrendEvent::to_json() const {
  ordered_json j;
  j["id"] = id;
  j["link"] = analytics::to_json(link);
  j["started_at"] = started_at_ms;
  j["confirmed_at"] = confirmed_at_ms;
  j["ended_at"] = ended_at_ms ? json(*ended_at_ms) : json(nullptr);
  j["active"] = !ended_at_ms.has_value();
  j["peak_utilization"] = peak_utilization;
  j["benchmark_id"] = benchmark_id;
  return j;
}

TrendEvent TrendEvent::from_json(const json& j) {
  try {
    TrendEvent e;
    e.id = j.at("id").get<std::string>();
    e.link = link_from_json(j.at("link"));
    e.started_at_ms = j.at("started_at").get<TimestampMs>();
    e.confirmed_at_ms = j.at("confirmed_at").get<TimestampMs>();
    if (!j.at("ended_at").is_null()) e.ended_at_ms = j.at("ended_at").get<TimestampMs>();
    e.peak_utilization = j.at("peak_utilization").get<double>();
    e.benchmark_id = j.at("benchmark_id").get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, fmt::format("trend event document: {}", ex.what()));
  }
}

json TrendState::to_json() const {
  json j{{"link", analytics::to_json(link)},
         {"consecutive_flags", consecutive_flags},
         {"active", active},
         {"pending_start", pending_start_ms},
         {"pending_peak", pending_peak}};
  j["current_event"] = current_event ? json(current_event->to_json()) : json(nullptr);
  j["last_sample"] = last_sample_ms ? json(*last_sample_ms) : json(nullptr);
  return j;
}

TrendState TrendState::from_json(const json& j) {
  try {
    TrendState s;
    s.link = link_from_json(j.at("link"));
    s.consecutive_flags = j.at("consecutive_flags").get<int>();
    s.active = j.at("active").get<bool>();
    s.pending_start_ms = j.at("pending_start").get<TimestampMs>();
    s.pending_peak = j.at("pending_peak").get<double>();
    if (!j.at("current_event").is_null()) s.current_event = TrendEvent::from_json(j.at("current_event"));
    if (!j.at("last_sample").is_null()) s.last_sample_ms = j.at("last_sample").get<TimestampMs>();
    return s;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, fmt::format("trend state document: {}", ex.what()));
  }
}

std::string_view to_string(TransitionKind kind) noexcept {
  return kind == TransitionKind::Confirmed ? "confirmed" : "ended";
}

TrendStep advance_trend(const TrendState& state, bool flagged, TimestampMs now_ms, double util,
                        const AnalyticsConfig& cfg, const std::string& benchmark_id) {
  if (state.last_sample_ms && now_ms <= *state.last_sample_ms) {
    throw Error(ErrorCode::OutOfOrderSample,
                fmt::format("{}: sample at {} not after {}", state.link.key(), now_ms,
                            *state.last_sample_ms));
  }
  TrendStep step{state, std::nullopt};
  auto& s = step.state;
  s.last_sample_ms = now_ms;

  if (s.active) {
    if (flagged) {
      s.current_event->peak_utilization = std::max(s.current_event->peak_utilization, util);
      return step;
    }
    auto ended = *s.current_event;
    ended.ended_at_ms = now_ms;
    s.active = false;
    s.current_event.reset();
    s.consecutive_flags = 0;
    step.transition = TrendTransition{TransitionKind::Ended, std::move(ended)};
    return step;
  }

  if (!flagged) {
    s.consecutive_flags = 0;
    return step;
  }
  if (s.consecutive_flags == 0) {
    s.pending_start_ms = now_ms;
    s.pending_peak = util;
  } else {
    s.pending_peak = std::max(s.pending_peak, util);
  }
  ++s.consecutive_flags;
  if (s.consecutive_flags >= cfg.confirm_window) {
    TrendEvent e;
    e.id = fmt::format("{}@{}", s.link.key(), s.pending_start_ms);
    e.link = s.link;
    e.started_at_ms = s.pending_start_ms;
    e.confirmed_at_ms = now_ms;
    e.peak_utilization = s.pending_peak;
    e.benchmark_id = benchmark_id;
    s.active = true;
    s.current_event = e;
    step.transition = TrendTransition{TransitionKind::Confirmed, std::move(e)};
  }
  return step;
}

}  // namespace trendnet::analytics
