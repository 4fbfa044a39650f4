// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "trendnet/analytics.hpp"
#include "trendnet/error.hpp"

using namespace trendnet;
using namespace trendnet::analytics;

namespace {

constexpr std::int64_t kCap = 8'000'000;
constexpr double kFullHourOctets = kCap / 8.0 * 3600.0;
const LinkRef kLink{"10.0.0.10", "FastEthernet0_0", "collectd"};

// Writes hourly outOctets readings so that the interval starting at hour i
// carries utils[i] of capacity. Counters wrap at 2^32.
void write_hourly(tsdb::TimeSeriesStore& store, TimestampMs t0, const std::vector<double>& utils,
                  std::uint64_t start_counter = 0) {
  std::uint64_t counter = start_counter;
  auto key = out_octets_key(kLink);
  store.append(key, {t0, static_cast<double>(counter % (1ull << 32))});
  for (std::size_t i = 0; i < utils.size(); ++i) {
    counter += static_cast<std::uint64_t>(std::llround(utils[i] * kFullHourOctets));
    store.append(key, {t0 + static_cast<TimestampMs>(i + 1) * kHourMs,
                       static_cast<double>(counter % (1ull << 32))});
  }
}

// Independent pass: signed 64-bit modular deltas and a one-pass
// sum/sum-of-squares variance in long double.
std::array<std::pair<long double, long double>, 24> brute_force(const tsdb::TimeSeriesStore& store,
                                                                 TimestampMs begin,
                                                                 TimestampMs end) {
  auto pts = store.query(out_octets_key(kLink), begin, end + 1);
  std::array<long double, 24> s{}, s2{}, n{};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    std::int64_t d = static_cast<std::int64_t>(pts[i].value) - static_cast<std::int64_t>(pts[i - 1].value);
    if (d < 0) d += 4294967296LL;
    long double u = static_cast<long double>(d) * 8.0L /
                    (static_cast<long double>(pts[i].ts_ms - pts[i - 1].ts_ms) / 1000.0L * kCap);
    if (u > 1.05L) u = 1.05L;
    int h = static_cast<int>(((pts[i - 1].ts_ms / 1000 / 3600) % 24));
    s[h] += u;
    s2[h] += u * u;
    n[h] += 1;
  }
  std::array<std::pair<long double, long double>, 24> out{};
  for (int h = 0; h < 24; ++h) {
    long double mean = s[h] / n[h];
    long double var = s2[h] / n[h] - mean * mean;
    out[h] = {mean, std::sqrt(std::max(var, 0.0L))};
  }
  return out;
}

Benchmark flat_benchmark(double mean, double sigma) {
  Benchmark bm;
  bm.link = kLink;
  for (auto& h : bm.hours) h = HourStat{mean, sigma, 3};
  return bm;
}

}  // namespace

TEST_CASE("counter_delta") {
  CHECK(counter_delta(100, 100) == 0);
  CHECK(counter_delta(100, 600) == 500);
  CHECK(counter_delta(4294966000u, 1000) == 2296);
  CHECK(counter_delta(0xFFFFFFFFu, 0) == 1);
}

TEST_CASE("compute_utilization") {
  CHECK(compute_utilization(0, 1000, 1e7) == 0.0);
  CHECK(compute_utilization(4.5e10, 3600 * 1000, 1e8) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(compute_utilization(1'000'000, 1000, 1e7) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(compute_utilization(1e12, 1000, 1e7) == kMaxUtilization);
  CHECK_THROWS_WITH_AS(compute_utilization(1, 0, 1e7), doctest::Contains("ZeroInterval"), Error);
  CHECK_THROWS_WITH_AS(compute_utilization(1, 1000, 0), doctest::Contains("ZeroCapacity"), Error);
}

TEST_CASE("build_benchmark") {
  const AnalyticsConfig cfg;
  const TimestampMs t0 = kDefaultEpochMs;
  const TimestampMs end = t0 + 3 * kDayMs;

  SUBCASE("hour 9 samples 0.5, 0.6, 0.7") {
    std::vector<double> utils(72, 0.1);
    utils[9] = 0.5;
    utils[24 + 9] = 0.6;
    utils[48 + 9] = 0.7;
    tsdb::TimeSeriesStore store;
    write_hourly(store, t0, utils, 4'000'000'000ull);
    auto bm = build_benchmark(store, kLink, kCap, cfg, end, end);
    CHECK(bm.hours[9].mean == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(bm.hours[9].sigma == doctest::Approx(0.08164965809).epsilon(1e-9));
    CHECK(bm.hours[9].samples == 3);
    CHECK(bm.total_samples() == 72);
    CHECK(bm.threshold == cfg.threshold_fraction);
    auto oracle = brute_force(store, t0, end);
    for (int h = 0; h < 24; ++h) {
      CHECK(std::abs(bm.hours[h].mean - static_cast<double>(oracle[h].first)) < 1e-9);
      CHECK(std::abs(bm.hours[h].sigma - static_cast<double>(oracle[h].second)) < 1e-9);
    }
  }

  SUBCASE("constant series") {
    tsdb::TimeSeriesStore store;
    write_hourly(store, t0, std::vector<double>(72, 0.25));
    auto bm = build_benchmark(store, kLink, kCap, cfg, end, end);
    for (const auto& h : bm.hours) {
      CHECK(h.mean == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(h.sigma == doctest::Approx(0.0).epsilon(1e-9));
      CHECK(h.samples == 3);
    }
  }

  SUBCASE("window end inside an hour is floored") {
    tsdb::TimeSeriesStore store;
    write_hourly(store, t0, std::vector<double>(80, 0.25));
    auto bm = build_benchmark(store, kLink, kCap, cfg, end + 25 * 60'000, end);
    CHECK(bm.total_samples() == 72);
  }

  SUBCASE("empty store names every hour") {
    tsdb::TimeSeriesStore store;
    try {
      (void)build_benchmark(store, kLink, kCap, cfg, end, end);
      FAIL("expected InsufficientData");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientData);
      CHECK(e.details().size() == 24);
    }
  }

  SUBCASE("missing last hour is named") {
    tsdb::TimeSeriesStore store;
    write_hourly(store, t0, std::vector<double>(71, 0.25));
    try {
      (void)build_benchmark(store, kLink, kCap, cfg, end, end);
      FAIL("expected InsufficientData");
    } catch (const Error& e) {
      REQUIRE(e.details().size() == 1);
      CHECK(e.details()[0].find("hour 23") != std::string::npos);
    }
  }

  SUBCASE("deterministic and exportable") {
    tsdb::TimeSeriesStore store;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> utils(72);
    for (auto& x : utils) x = u(gen);
    write_hourly(store, t0, utils, 3'000'000'000ull);
    auto a = build_benchmark(store, kLink, kCap, cfg, end, end);
    auto b = build_benchmark(store, kLink, kCap, cfg, end, end);
    CHECK(a == b);
    auto doc = a.to_json();
    CHECK(doc["hours"].size() == 24);
    CHECK(doc["link"]["host_ip"] == "10.0.0.10");
    auto back = Benchmark::from_json(nlohmann::json::parse(doc.dump()));
    CHECK(back == a);
    auto oracle = brute_force(store, t0, end);
    for (int h = 0; h < 24; ++h) {
      CHECK(std::abs(a.hours[h].mean - static_cast<double>(oracle[h].first)) < 1e-9);
      CHECK(std::abs(a.hours[h].sigma - static_cast<double>(oracle[h].second)) < 1e-9);
    }
  }
}

TEST_CASE("evaluate_sample") {
  AnalyticsConfig cfg;
  cfg.threshold_fraction = 0.75;
  auto bm = flat_benchmark(0.60, 0.08165);
  CHECK(evaluate_sample(bm, cfg, 9, 0.95));
  CHECK_FALSE(evaluate_sample(bm, cfg, 9, 0.70));
  CHECK_FALSE(evaluate_sample(bm, cfg, 9, 0.60));
  SUBCASE("mean above threshold, zero deviation") {
    auto high = flat_benchmark(0.9, 0.0);
    CHECK_FALSE(evaluate_sample(high, cfg, 3, 0.9));
  }
  SUBCASE("sigma floor") {
    auto zero = flat_benchmark(0.1, 0.0);
    cfg.sigma_floor = 0.5;
    CHECK_FALSE(evaluate_sample(zero, cfg, 3, 0.8));
    cfg.sigma_floor = 0.01;
    CHECK(evaluate_sample(zero, cfg, 3, 0.8));
  }
}

TEST_CASE("advance_trend") {
  AnalyticsConfig cfg;
  TrendState s;
  s.link = kLink;
  auto feed = [&](bool f, TimestampMs t, double u = 0.9) {
    auto step = advance_trend(s, f, t, u, cfg, "bm");
    s = step.state;
    return step.transition;
  };

  SUBCASE("F,F,F confirms on the third call") {
    CHECK_FALSE(feed(true, 1));
    CHECK_FALSE(feed(true, 2, 0.95));
    auto t = feed(true, 3);
    REQUIRE(t);
    CHECK(t->kind == TransitionKind::Confirmed);
    CHECK(t->event.started_at_ms == 1);
    CHECK(t->event.confirmed_at_ms == 3);
    CHECK(t->event.peak_utilization == 0.95);
    CHECK(t->event.benchmark_id == "bm");
    CHECK(s.active);

    SUBCASE("active then not flagged ends") {
      CHECK_FALSE(feed(true, 4, 0.99));
      auto e = feed(false, 5);
      REQUIRE(e);
      CHECK(e->kind == TransitionKind::Ended);
      CHECK(e->event.ended_at_ms == 5);
      CHECK(e->event.peak_utilization == 0.99);
      CHECK(e->event.id == t->event.id);
      CHECK_FALSE(s.active);
      CHECK(s.consecutive_flags == 0);
    }
  }

  SUBCASE("F,F,notF,F restarts") {
    CHECK_FALSE(feed(true, 1));
    CHECK_FALSE(feed(true, 2));
    CHECK_FALSE(feed(false, 3));
    CHECK(s.consecutive_flags == 0);
    CHECK_FALSE(feed(true, 4));
    CHECK(s.consecutive_flags == 1);
    CHECK_FALSE(s.active);
  }

  SUBCASE("out of order") {
    feed(false, 10);
    CHECK_THROWS_WITH_AS(feed(true, 10), doctest::Contains("OutOfOrderSample"), Error);
    CHECK_THROWS_AS(feed(true, 9), Error);
  }

  SUBCASE("state round-trips through json") {
    feed(true, 1);
    feed(true, 2);
    feed(true, 3);
    CHECK(TrendState::from_json(nlohmann::json::parse(s.to_json().dump())) == s);
  }
}

TEST_CASE("property: trend soundness over random flag sequences") {
  std::mt19937_64 gen(11);
  for (int iter = 0; iter < 2000; ++iter) {
    AnalyticsConfig cfg;
    cfg.confirm_window = 1 + static_cast<int>(gen() % 5);
    TrendState s;
    s.link = kLink;
    std::vector<bool> flags;
    bool confirmed_open = false;
    const int n = static_cast<int>(gen() % 40);
    for (int i = 0; i < n; ++i) {
      const bool f = gen() % 3 != 0;
      flags.push_back(f);
      auto step = advance_trend(s, f, i + 1, 0.9, cfg, "bm");
      s = step.state;
      if (!s.active) CHECK(s.consecutive_flags <= cfg.confirm_window);
      if (s.active) CHECK(s.current_event.has_value());
      if (!step.transition) continue;
      if (step.transition->kind == TransitionKind::Confirmed) {
        CHECK_FALSE(confirmed_open);
        confirmed_open = true;
        const int w = cfg.confirm_window;
        REQUIRE(static_cast<int>(flags.size()) >= w);
        for (int k = 0; k < w; ++k) CHECK(flags[flags.size() - 1 - k]);
        if (static_cast<int>(flags.size()) > w) CHECK_FALSE(flags[flags.size() - 1 - w]);
        CHECK(step.transition->event.started_at_ms == i + 2 - w);
      } else {
        CHECK(confirmed_open);
        CHECK_FALSE(f);
        confirmed_open = false;
      }
    }
  }
}

TEST_CASE("should_reset") {
  AnalyticsConfig cfg;
  Benchmark bm;
  bm.created_at_ms = 1000;
  CHECK_FALSE(should_reset(bm, 1000, cfg));
  CHECK(should_reset(bm, 1000 + 7 * kDayMs, cfg));
  CHECK_FALSE(should_reset(bm, 1000 + 7 * kDayMs - 1, cfg));
}

TEST_CASE("property: counter wrap over 10000 random cases") {
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 10'000; ++i) {
    auto prev = static_cast<std::uint32_t>(gen());
    auto curr = static_cast<std::uint32_t>(gen());
    CHECK(static_cast<std::uint32_t>(prev + counter_delta(prev, curr)) == curr);
  }
}

TEST_CASE("property: wrapping trajectories stay in utilization bounds") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> rate(0.0, 1.2);
  for (int series = 0; series < 200; ++series) {
    // Start close enough to 2^32 that the first hours cross it.
    std::uint64_t counter = (1ull << 32) - 1 - gen() % 2'000'000'000ull;
    std::vector<tsdb::DataPoint> pts{{0, static_cast<double>(counter)}};
    bool wrapped = false;
    for (int h = 1; h <= 50; ++h) {
      const double u = std::min(rate(gen), 1.19);  // stays under one wrap per hour at 8 Mbps
      const auto before = counter >> 32;
      counter += static_cast<std::uint64_t>(u * kFullHourOctets);
      wrapped = wrapped || (counter >> 32) != before;
      pts.push_back({h * kHourMs, static_cast<double>(counter % (1ull << 32))});
    }
    CHECK(wrapped);
    for (const auto& s : utilization_series(pts, kCap)) {
      CHECK(s.utilization >= 0.0);
      CHECK(s.utilization <= kMaxUtilization);
    }
  }
}

TEST_CASE("config violations are listed") {
  AnalyticsConfig cfg;
  CHECK(cfg.violations().empty());
  cfg.threshold_fraction = 1.5;
  cfg.confirm_window = 0;
  auto v = cfg.violations();
  REQUIRE(v.size() == 2);
  CHECK(v[0].find("threshold_fraction") != std::string::npos);
  CHECK(v[1].find("confirm_window") != std::string::npos);
}
