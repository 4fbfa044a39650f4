// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "trendnet/actioner.hpp"
#include "trendnet/error.hpp"

using namespace trendnet;
using namespace trendnet::actioner;
using namespace fixtures;

namespace {

/// H reaches D over A (Fa0_0), B (Fa0_1) or C (Fa0_2).
TopologySpec fan() {
  TopologySpec t;
  t.devices = {{"H", DeviceKind::Traditional, "10.0.0.1"},
               {"A", DeviceKind::Traditional, "10.0.0.2"},
               {"B", DeviceKind::Traditional, "10.0.0.3"},
               {"C", DeviceKind::Traditional, "10.0.0.4"},
               {"D", DeviceKind::Traditional, "10.0.0.5"}};
  t.links = {{{"H", "Fa0_0"}, {"A", "Fa0_0"}, 8'000'000}, {{"H", "Fa0_1"}, {"B", "Fa0_0"}, 8'000'000},
             {{"H", "Fa0_2"}, {"C", "Fa0_0"}, 8'000'000}, {{"A", "Fa0_1"}, {"D", "Fa0_0"}, 8'000'000},
             {{"B", "Fa0_1"}, {"D", "Fa0_1"}, 8'000'000}, {{"C", "Fa0_1"}, {"D", "Fa0_2"}, 8'000'000}};
  t.subnets = {{P("10.0.1.0/24"), {{"H", "Fa1_0"}, 8'000'000}},
               {P("10.0.9.0/24"), {{"D", "Fa1_0"}, 8'000'000}}};
  return t;
}

analytics::TrendTransition confirmed(const std::string& id = "10.0.0.1/Fa0_0@0") {
  analytics::TrendTransition t{analytics::TransitionKind::Confirmed, {}};
  t.event.id = id;
  return t;
}

struct Rig {
  SimNetwork net;
  VirtualScheduler sched;
  std::vector<LoadBalanceDecision> journal;
  Actioner actioner;

  Rig(const TopologySpec& topo, const TrafficProfile& profile, ActionerConfig cfg = {})
      : net(SimNetwork::build(topo, profile)),
        sched([this](DurationMs dt) { net.step(dt); }, [this] { return net.clock().now_ms; }, kHourMs),
        actioner(net, sched, cfg, [this](const LoadBalanceDecision& d) { journal.push_back(d); }) {}
};

double util_of(const TickReport& r, const InterfaceRef& ref) {
  for (const auto& l : r.loads) {
    if (l.egress == ref) return l.carried_bps / 8'000'000.0;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("choose_alternate") {
  auto net = SimNetwork::build(fan(), single_demand(P("10.0.1.0/24"), P("10.0.9.0/24"), 1e6));
  const InterfaceRef congested{"H", "Fa0_0"};
  const auto dst = P("10.0.9.0/24");
  CHECK(choose_alternate(net, congested, dst, {{{"H", "Fa0_1"}, 0.5}, {{"H", "Fa0_2"}, 0.2}}, {}) ==
        InterfaceRef{"H", "Fa0_2"});
  CHECK(choose_alternate(net, congested, dst, {{{"H", "Fa0_1"}, 0.3}, {{"H", "Fa0_2"}, 0.3}}, {}) ==
        InterfaceRef{"H", "Fa0_1"});
  CHECK(choose_alternate(net, {"H", "Fa0_1"}, dst, {{{"H", "Fa0_0"}, 0.3}, {{"H", "Fa0_2"}, 0.3}}, {}) ==
        InterfaceRef{"H", "Fa0_0"});

  SUBCASE("single-homed device") {
    auto line_net = SimNetwork::build(line(), single_demand(P("10.0.1.0/24"), P("10.0.2.0/24"), 1e6));
    CHECK_THROWS_WITH_AS(choose_alternate(line_net, {"R1", "Fa0_0"}, P("10.0.2.0/24"), {}, {}),
                         doctest::Contains("NoAlternatePath"), Error);
  }
  SUBCASE("upstream devices are not candidates") {
    auto ring_net = SimNetwork::build(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 1e6));
    CHECK_THROWS_AS(choose_alternate(ring_net, {"R2", "Fa0_1"}, P("10.0.3.0/24"), {}, {"R1"}), Error);
  }
}

TEST_CASE("plan and execute on a traditional router") {
  auto net = SimNetwork::build(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 1e6));
  const auto prefix = P("10.0.3.0/24");
  const InterfaceRef congested{"R1", "Fa0_0"}, alternate{"R1", "Fa0_1"};
  auto dirs = plan_traditional(prefix, congested, alternate, {});
  REQUIRE(dirs.size() == 2);
  CHECK(dirs[0].egress_interface == "Fa0_0");
  CHECK(dirs[0].local_preference == 90);
  CHECK(dirs[1].egress_interface == "Fa0_1");
  CHECK(dirs[1].local_preference == 110);
  for (const auto& d : dirs) {
    CHECK(d.prefix == prefix);
    CHECK(d.router_id == "R1");
    CHECK(d.mode == RouteMapDirective::Mode::Set);
  }

  const auto before = routing_function(net);
  LoadBalanceDecision d;
  d.id = "dec-1";
  d.directives = dirs;
  d.duration_ms = 6 * kHourMs;
  d = execute(d, net, 42);
  CHECK(d.status == Status::Applied);
  CHECK(d.applied_at_ms == 42);
  CHECK(net.local_preference("R1", prefix, "Fa0_0") == 90);
  CHECK(net.local_preference("R1", prefix, "Fa0_1") == 110);
  CHECK(net.resolve_path(P("10.0.1.0/24"), prefix).front() == Hop{"R1", "Fa0_1"});
  CHECK_THROWS_WITH_AS(execute(d, net, 43), doctest::Contains("IllegalTransition"), Error);

  d = revert(d, net, 50, true);
  CHECK(d.status == Status::Reverted);
  CHECK(d.reverted_at_ms == 50);
  CHECK(routing_function(net) == before);
  CHECK(net.local_preference("R1", prefix, "Fa0_0") == 100);
  CHECK_THROWS_AS(revert(d, net, 51, true), Error);
}

TEST_CASE("execute rolls back on a control-surface error") {
  auto net = SimNetwork::build(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 1e6));
  const auto before = routing_function(net);
  const auto prefix = P("10.0.3.0/24");
  LoadBalanceDecision d;
  d.id = "dec-9";
  d.directives = plan_traditional(prefix, {"R1", "Fa0_0"}, {"R1", "Fa0_1"}, {});
  d.directives.push_back({"R9", prefix, "Fa0_0", 110, RouteMapDirective::Mode::Set});
  d = execute(d, net, 1);
  CHECK(d.status == Status::Failed);
  CHECK(d.error.find("R9") != std::string::npos);
  CHECK_FALSE(d.applied_at_ms.has_value());
  CHECK(net.local_preference("R1", prefix, "Fa0_0") == 100);
  CHECK(net.local_preference("R1", prefix, "Fa0_1") == 100);
  CHECK(routing_function(net) == before);

  SUBCASE("revert of a planned or failed decision is rejected") {
    CHECK_THROWS_AS(revert(d, net, 2, true), Error);
    LoadBalanceDecision planned;
    CHECK_THROWS_AS(revert(planned, net, 2, true), Error);
  }
}

TEST_CASE("plan and execute on an SDN switch") {
  auto net = SimNetwork::build(sdn_diamond(), single_demand(P("10.1.1.0/24"), P("10.1.4.0/24"), 1e6));
  const auto prefix = P("10.1.4.0/24");
  const auto before = routing_function(net);
  REQUIRE(net.resolve_path(P("10.1.1.0/24"), prefix).front() == Hop{"S1", "port2"});

  ActionerConfig cfg;
  auto f = plan_sdn(prefix, {"S1", "port3"}, cfg, kHourMs, 1'000'000);
  CHECK(f.priority == 200);
  CHECK(f.hard_timeout_s == 3600);
  CHECK(f.match_dst_prefix == prefix);
  CHECK(f.action_out_port == "port3");
  cfg.timeout_mode = false;
  CHECK_FALSE(plan_sdn(prefix, {"S1", "port3"}, cfg, kHourMs, 1).hard_timeout_s.has_value());

  LoadBalanceDecision d;
  d.id = "dec-1";
  d.domain = Domain::Sdn;
  d.flows = {f};
  d.duration_ms = kHourMs;
  d = execute(d, net, net.clock().now_ms);
  CHECK(d.status == Status::Applied);
  CHECK(net.resolve_path(P("10.1.1.0/24"), prefix).front() == Hop{"S1", "port3"});

  SUBCASE("explicit revert") {
    d = revert(d, net, 5, false);
    CHECK(routing_function(net) == before);
  }
  SUBCASE("timeout already removed the flow") {
    net.step(kHourMs + 1);
    CHECK(routing_function(net) == before);
    CHECK_THROWS_WITH_AS(revert(d, net, 5, false), doctest::Contains("UnknownCookie"), Error);
    d = revert(d, net, 5, true);
    CHECK(d.status == Status::Reverted);
    CHECK(routing_function(net) == before);
  }
}

TEST_CASE("dominant_prefix") {
  CHECK_FALSE(dominant_prefix({}).has_value());
  CHECK(dominant_prefix({{P("10.0.3.0/24"), 5}, {P("10.0.2.0/24"), 9}}) == P("10.0.2.0/24"));
  CHECK(dominant_prefix({{P("10.0.3.0/24"), 9}, {P("10.0.2.0/24"), 9}}) == P("10.0.2.0/24"));
}

TEST_CASE("Actioner auto policy applies and reverts on schedule") {
  Rig rig(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 24e6));
  const auto before = routing_function(rig.net);
  TrendContext ctx{{"R1", "Fa0_0"}, {{{"R1", "Fa0_0"}, 1.0}}, {{P("10.0.3.0/24"), 3'600'000'000ull}}};
  auto d = rig.actioner.on_trend(confirmed(), ctx);
  REQUIRE(d);
  CHECK(d->id == "dec-1");
  CHECK(d->status == Status::Applied);
  CHECK(d->alternate == InterfaceRef{"R1", "Fa0_1"});
  CHECK(d->trend_event_id == "10.0.0.1/Fa0_0@0");
  CHECK(d->duration_ms == 6 * kHourMs);
  REQUIRE(rig.journal.size() == 2);
  CHECK(rig.journal[0].status == Status::Planned);
  CHECK(rig.journal[1].status == Status::Applied);

  SUBCASE("one open decision per device and prefix") {
    CHECK_FALSE(rig.actioner.on_trend(confirmed("other"), ctx).has_value());
    CHECK(rig.actioner.decisions().size() == 1);
  }
  SUBCASE("ended transitions do nothing") {
    analytics::TrendTransition ended{analytics::TransitionKind::Ended, {}};
    CHECK_FALSE(rig.actioner.on_trend(ended, ctx).has_value());
  }
  SUBCASE("revert fires at applied_at + duration") {
    const auto t0 = rig.net.clock().now_ms;
    rig.sched.run_until(t0 + 6 * kHourMs - 1);
    CHECK(rig.actioner.decision("dec-1").status == Status::Applied);
    rig.sched.run_until(t0 + 6 * kHourMs);
    CHECK(rig.actioner.decision("dec-1").status == Status::Reverted);
    CHECK(rig.actioner.decision("dec-1").reverted_at_ms == t0 + 6 * kHourMs);
    CHECK(routing_function(rig.net) == before);
    CHECK(rig.journal.back().status == Status::Reverted);
  }
  SUBCASE("manual revert cancels the scheduled one") {
    rig.sched.run_until(rig.net.clock().now_ms + kHourMs);
    auto r = rig.actioner.revert("dec-1");
    CHECK(r.status == Status::Reverted);
    CHECK(routing_function(rig.net) == before);
    CHECK_FALSE(rig.sched.next_due().has_value());
    CHECK_THROWS_WITH_AS(rig.actioner.revert("dec-1"), doctest::Contains("IllegalTransition"), Error);
    CHECK_THROWS_WITH_AS(rig.actioner.revert("dec-7"), doctest::Contains("UnknownDecision"), Error);
    rig.sched.run_until(rig.net.clock().now_ms + 10 * kHourMs);
    CHECK(rig.journal.size() == 3);
  }
  SUBCASE("relieved link is skipped") {
    rig.actioner.revert("dec-1");
    Rig other(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 24e6));
    TrendContext stale{{"R1", "Fa0_1"}, {}, {{P("10.0.3.0/24"), 1}}};
    CHECK_FALSE(other.actioner.on_trend(confirmed(), stale).has_value());
  }
}

TEST_CASE("Actioner manual policy waits for approval") {
  ActionerConfig cfg;
  cfg.policy = Policy::Manual;
  Rig rig(sdn_diamond(), single_demand(P("10.1.1.0/24"), P("10.1.4.0/24"), 24e6), cfg);
  const auto before = routing_function(rig.net);
  TrendContext ctx{{"S1", "port2"}, {}, {{P("10.1.4.0/24"), 10}}};
  auto d = rig.actioner.on_trend(confirmed(), ctx);
  REQUIRE(d);
  CHECK(d->status == Status::Planned);
  CHECK(d->domain == Domain::Sdn);
  REQUIRE(d->flows.size() == 1);
  CHECK(d->flows[0].cookie == 1'000'000);
  CHECK(d->flows[0].hard_timeout_s == 6 * 3600);
  CHECK(routing_function(rig.net) == before);
  CHECK_THROWS_AS(rig.actioner.revert(d->id), Error);

  rig.sched.run_until(rig.net.clock().now_ms + 2 * kHourMs);
  auto a = rig.actioner.approve(d->id);
  CHECK(a.status == Status::Applied);
  CHECK(a.applied_at_ms == kDefaultEpochMs + 2 * kHourMs);
  CHECK(rig.net.resolve_path(P("10.1.1.0/24"), P("10.1.4.0/24")).front() == Hop{"S1", "port3"});
  CHECK_THROWS_AS(rig.actioner.approve(d->id), Error);

  rig.sched.run_until(*a.applied_at_ms + 6 * kHourMs);
  CHECK(rig.actioner.decision(d->id).status == Status::Reverted);
  CHECK(routing_function(rig.net) == before);
}

TEST_CASE("planning failure is recorded") {
  Rig rig(line(), single_demand(P("10.0.1.0/24"), P("10.0.2.0/24"), 24e6));
  TrendContext ctx{{"R1", "Fa0_0"}, {}, {{P("10.0.2.0/24"), 10}}};
  auto d = rig.actioner.on_trend(confirmed(), ctx);
  REQUIRE(d);
  CHECK(d->status == Status::Failed);
  CHECK(d->error.find("NoAlternatePath") != std::string::npos);
  // A failed decision does not hold the lock.
  CHECK(rig.actioner.on_trend(confirmed("again"), ctx)->id == "dec-2");
}

TEST_CASE("decision export round-trips and restore reschedules") {
  Rig rig(sdn_diamond(), single_demand(P("10.1.1.0/24"), P("10.1.4.0/24"), 24e6));
  TrendContext ctx{{"S1", "port2"}, {}, {{P("10.1.4.0/24"), 10}}};
  auto d = *rig.actioner.on_trend(confirmed(), ctx);
  auto doc = d.to_json();
  CHECK(doc["status"] == "applied");
  CHECK(doc["rendered"][0]["priority"] == 200);
  CHECK(LoadBalanceDecision::from_json(nlohmann::json::parse(doc.dump())) == d);

  Rig fresh(sdn_diamond(), single_demand(P("10.1.1.0/24"), P("10.1.4.0/24"), 24e6));
  fresh.net.restore_state(rig.net.save_state());
  fresh.actioner.restore(rig.actioner.decisions());
  fresh.sched.run_until(*d.applied_at_ms + d.duration_ms);
  CHECK(fresh.actioner.decision(d.id).status == Status::Reverted);
  auto next = fresh.actioner.on_trend(confirmed("x"), ctx);
  REQUIRE(next);
  CHECK(next->id == "dec-2");
  CHECK(next->flows[0].cookie == 1'000'001);
}

TEST_CASE("closed loop: rerouting shifts measured load") {
  Rig rig(ring(), single_demand(P("10.0.1.0/24"), P("10.0.3.0/24"), 24e6));
  const InterfaceRef congested{"R1", "Fa0_0"}, alternate{"R1", "Fa0_1"};
  auto pre = rig.net.step(kHourMs);
  TrendContext ctx{congested, {{congested, util_of(pre, congested)}, {alternate, util_of(pre, alternate)}},
                   {{P("10.0.3.0/24"), 1}}};
  REQUIRE(rig.actioner.on_trend(confirmed(), ctx)->status == Status::Applied);
  auto post = rig.net.step(kHourMs);
  CHECK(util_of(post, congested) < util_of(pre, congested));
  CHECK(util_of(post, alternate) > util_of(pre, alternate));
}

TEST_CASE("property: apply then revert restores the routing function") {
  std::mt19937_64 gen(5);
  const auto topo = scenario::demo_topology();
  for (int iter = 0; iter < 100; ++iter) {
    ActionerConfig cfg;
    cfg.duration_periods = 1 + static_cast<int>(gen() % 8);
    cfg.timeout_mode = gen() % 2;
    Rig rig(topo, scenario::demo_profile(gen()), cfg);
    const auto before = routing_function(rig.net);
    const auto& demand = rig.net.profile().demands[gen() % 2];
    auto path = rig.net.resolve_path(demand.src, demand.dst);
    const auto& hop = path[gen() % (path.size() - 1)];
    TrendContext ctx{{hop.device, hop.egress}, {}, {{demand.dst, 1}}};
    auto d = rig.actioner.on_trend(confirmed(), ctx);
    REQUIRE(d);
    if (d->status != Status::Applied) continue;
    CHECK(routing_function(rig.net) != before);
    if (gen() % 2) {
      rig.sched.run_until(rig.net.clock().now_ms + d->duration_ms);
    } else {
      rig.sched.run_until(rig.net.clock().now_ms + static_cast<DurationMs>(gen() % d->duration_ms));
      rig.actioner.revert(d->id);
    }
    CHECK(rig.actioner.decision(d->id).status == Status::Reverted);
    CHECK(routing_function(rig.net) == before);
  }
}
