// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "fixtures.hpp"
#include "trendnet/collector.hpp"

using namespace fixtures;
using namespace trendnet::collector;
using trendnet::ErrorCode;
using trendnet::kHourMs;
using trendnet::VirtualScheduler;

namespace {

struct RecordingSink : SampleSink {
  std::vector<RawSample> samples;
  std::vector<trendnet::TimestampMs> rounds;
  std::size_t close_after = SIZE_MAX;

  void deliver(const RawSample& s) override {
    if (samples.size() >= close_after) throw trendnet::Error(ErrorCode::SinkClosed, "closed");
    samples.push_back(s);
  }
  void round_complete(trendnet::TimestampMs ts) override { rounds.push_back(ts); }

  std::size_t count_for(const std::string& device, const std::string& iface) const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [&](const RawSample& s) {
      return s.device == device && s.interface == iface;
    }));
  }
};

struct Harness {
  SimNetwork net;
  VirtualScheduler sched;

  explicit Harness(SimNetwork n)
      : net(std::move(n)),
        sched([this](trendnet::DurationMs dt) { net.step(dt); },
              [this] { return net.clock().now_ms; }, kHourMs) {}
};

}  // namespace

TEST_CASE("poll_traditional: one sample per interface with the device's address") {
  auto net = SimNetwork::build(line(), {});
  auto samples = poll_traditional(net, "R1");
  REQUIRE(samples.size() == 2);
  for (const auto& s : samples) {
    CHECK(s.src == "collectd");
    CHECK(s.host_ip == "10.0.0.1");
    CHECK(s.timestamp_ms == samples[0].timestamp_ms);
    CHECK(s.counters == trendnet::CounterSet{});
  }
}

TEST_CASE("poll_traditional: carries the counter values verbatim") {
  TopologySpec t;
  t.devices = {{"R1", DeviceKind::Traditional, "10.0.0.10"}};
  t.subnets = {{P("10.0.1.0/24"), {{"R1", "FastEthernet0_1"}, 1'000'000}}};
  auto net = SimNetwork::build(t, {});
  auto state = net.save_state();
  state["devices"]["R1"]["counters"]["FastEthernet0_1"] = {18050215, 18102066, 77062, 77063, 0, 0};
  net.restore_state(state);
  auto samples = poll_traditional(net, "R1");
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].interface == "FastEthernet0_1");
  CHECK(samples[0].host_ip == "10.0.0.10");
  CHECK(samples[0].counters.out_octets == 18102066u);
  CHECK(samples[0].counters.out_pkts == 77063u);
  CHECK(samples[0].counters.in_octets == 18050215u);
  CHECK(samples[0].counters.in_pkts == 77062u);
}

TEST_CASE("poll_traditional: propagates simulator errors") {
  auto net = SimNetwork::build(sdn_diamond(), {});
  CHECK_THROWS_AS(poll_traditional(net, "S1"), trendnet::Error);
  CHECK_THROWS_AS(poll_traditional(net, "nope"), trendnet::Error);
}

TEST_CASE("poll_sdn") {
  CHECK(poll_sdn(SimNetwork::build(ring(), {})).empty());

  TopologySpec t;
  t.devices = {{"S1", DeviceKind::SdnSwitch, "192.168.0.1"}};
  t.subnets = {{P("10.1.1.0/24"), {{"S1", "port1"}, 1000}},
               {P("10.1.2.0/24"), {{"S1", "port2"}, 1000}},
               {P("10.1.3.0/24"), {{"S1", "port3"}, 1000}}};
  auto samples = poll_sdn(SimNetwork::build(t, {}));
  REQUIRE(samples.size() == 3);
  for (const auto& s : samples) CHECK(s.src == "sdn");

  auto net = SimNetwork::build(sdn_diamond(), single_demand(P("10.1.1.0/24"), P("10.1.4.0/24"), 4e6));
  net.install_flow({"S1", 77, 200, P("10.1.4.0/24"), "port3", std::nullopt});
  auto before = poll_sdn(net);
  net.step(trendnet::kSecondMs);
  auto after = poll_sdn(net);
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (after[i].device == "S1" && after[i].interface == "port3") {
      CHECK(after[i].counters.out_octets > before[i].counters.out_octets);
    }
  }
}

TEST_CASE("run_poller: 72 hourly periods give 72 deliveries per interface") {
  Harness h(SimNetwork::build(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 1e6)));
  RecordingSink sink;
  Poller poller(h.net, h.sched, {kHourMs, 0}, sink);
  poller.start();
  const auto start = h.net.clock().now_ms;
  h.sched.run_until(start + 72 * kHourMs);
  CHECK(sink.count_for("R1", "Fa0_0") == 72);
  CHECK(sink.count_for("R3", "Fa1_0") == 72);
  CHECK(sink.rounds.size() == 72);
  for (std::size_t i = 0; i < sink.rounds.size(); ++i) {
    CHECK(sink.rounds[i] == start + static_cast<trendnet::TimestampMs>(i + 1) * kHourMs);
  }
}

TEST_CASE("run_poller: 24 hourly periods give 24 deliveries per interface") {
  Harness h(SimNetwork::build(sdn_diamond(), {}));
  RecordingSink sink;
  Poller poller(h.net, h.sched, {kHourMs, 0}, sink);
  poller.start();
  h.sched.run_until(h.net.clock().now_ms + 24 * kHourMs);
  CHECK(sink.count_for("S1", "port2") == 24);
}

TEST_CASE("run_poller: stop after 5 periods") {
  Harness h(SimNetwork::build(ring(), {}));
  RecordingSink sink;
  Poller poller(h.net, h.sched, {kHourMs, 0}, sink);
  poller.start();
  const auto start = h.net.clock().now_ms;
  h.sched.run_until(start + 5 * kHourMs);
  poller.stop();
  h.sched.run_until(start + 10 * kHourMs);
  CHECK(sink.count_for("R1", "Fa0_0") == 5);
  CHECK_FALSE(poller.running());
}

TEST_CASE("run_poller: deterministic order within a round") {
  auto t = ring();
  for (const auto& d : sdn_diamond().devices) t.devices.push_back(d);
  for (const auto& l : sdn_diamond().links) t.links.push_back(l);
  for (const auto& s : sdn_diamond().subnets) t.subnets.insert(s);
  Harness h(SimNetwork::build(t, {}));
  RecordingSink sink;
  Poller poller(h.net, h.sched, {kHourMs, 0}, sink);
  poller.start();
  h.sched.run_until(h.net.clock().now_ms + kHourMs);
  REQUIRE_FALSE(sink.samples.empty());
  for (std::size_t i = 1; i < sink.samples.size(); ++i) {
    const auto& a = sink.samples[i - 1];
    const auto& b = sink.samples[i];
    CHECK(std::tie(a.device, a.interface) < std::tie(b.device, b.interface));
  }
}

TEST_CASE("run_poller: closed sink terminates the task and surfaces the error") {
  Harness h(SimNetwork::build(ring(), {}));
  RecordingSink sink;
  sink.close_after = 3;
  Poller poller(h.net, h.sched, {kHourMs, 0}, sink);
  poller.start();
  h.sched.run_until(h.net.clock().now_ms + 4 * kHourMs);
  CHECK_FALSE(poller.running());
  REQUIRE(poller.error().has_value());
  CHECK(poller.error()->code() == ErrorCode::SinkClosed);
  CHECK(sink.samples.size() == 3);
}

TEST_CASE("run_poller: jitter keeps one round per period") {
  Harness h(SimNetwork::build(ring(), {}));
  RecordingSink sink;
  Poller poller(h.net, h.sched, {kHourMs, 10 * 60 * 1000}, sink);
  poller.start();
  const auto start = h.net.clock().now_ms;
  h.sched.run_until(start + 10 * kHourMs + 30 * 60 * 1000);
  CHECK(sink.rounds.size() == 10);
  for (std::size_t i = 0; i < sink.rounds.size(); ++i) {
    const auto boundary = start + static_cast<trendnet::TimestampMs>(i + 1) * kHourMs;
    CHECK(sink.rounds[i] >= boundary);
    CHECK(sink.rounds[i] <= boundary + 10 * 60 * 1000);
  }
}

TEST_CASE("polling never mutates the simulator") {
  Harness h(SimNetwork::build(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 1e6)));
  h.net.step(kHourMs);
  const auto before = h.net.save_state();
  poll_all(h.net);
  poll_traditional(h.net, "R1");
  CHECK(h.net.save_state() == before);
}

TEST_CASE("poller rejects a non-positive period") {
  Harness h(SimNetwork::build(ring(), {}));
  RecordingSink sink;
  CHECK_THROWS_AS(Poller(h.net, h.sched, {0, 0}, sink), trendnet::Error);
}
