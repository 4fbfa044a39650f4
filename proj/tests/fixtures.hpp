// SPDX-License-Identifier: Apache-2.0
// Small topologies shared by the unit tests.
#pragma once

#include "trendnet/netsim.hpp"
#include "trendnet/scenario.hpp"

namespace fixtures {

using trendnet::Cidr;
using namespace trendnet::netsim;

inline Cidr P(const char* text) { return Cidr::parse(text); }

inline std::array<double, 24> flat(double bps) {
  std::array<double, 24> a{};
  a.fill(bps);
  return a;
}

/// R1 --(cap)-- R2, subnet A on R1, subnet B on R2.
inline TopologySpec line(std::int64_t cap = 10'000'000) {
  TopologySpec t;
  t.devices = {{"R1", DeviceKind::Traditional, "10.0.0.1"},
               {"R2", DeviceKind::Traditional, "10.0.0.2"}};
  t.links = {{{"R1", "Fa0_0"}, {"R2", "Fa0_0"}, cap}};
  t.subnets = {{P("10.0.1.0/24"), {{"R1", "Fa1_0"}, 100'000'000}},
               {P("10.0.2.0/24"), {{"R2", "Fa1_0"}, 100'000'000}}};
  return t;
}

/// Four routers in a ring: R1 reaches R3 via R2 (Fa0_0) or R4 (Fa0_1).
inline TopologySpec ring(std::int64_t cap = 8'000'000) {
  TopologySpec t;
  t.devices = {{"R1", DeviceKind::Traditional, "10.0.0.1"},
               {"R2", DeviceKind::Traditional, "10.0.0.2"},
               {"R3", DeviceKind::Traditional, "10.0.0.3"},
               {"R4", DeviceKind::Traditional, "10.0.0.4"}};
  t.links = {{{"R1", "Fa0_0"}, {"R2", "Fa0_0"}, cap},
             {{"R2", "Fa0_1"}, {"R3", "Fa0_0"}, cap},
             {{"R3", "Fa0_1"}, {"R4", "Fa0_1"}, cap},
             {{"R4", "Fa0_0"}, {"R1", "Fa0_1"}, cap}};
  t.subnets = {{P("10.0.1.0/24"), {{"R1", "Fa1_0"}, cap}},
               {P("10.0.3.0/24"), {{"R3", "Fa1_0"}, cap}}};
  return t;
}

/// S1 fans out to S2 (port2) and S3 (port3); both reach S4 where the
/// destination subnet lives.
inline TopologySpec sdn_diamond(std::int64_t cap = 8'000'000) {
  TopologySpec t;
  t.devices = {{"S1", DeviceKind::SdnSwitch, "192.168.0.1"},
               {"S2", DeviceKind::SdnSwitch, "192.168.0.2"},
               {"S3", DeviceKind::SdnSwitch, "192.168.0.3"},
               {"S4", DeviceKind::SdnSwitch, "192.168.0.4"}};
  t.links = {{{"S1", "port2"}, {"S2", "port1"}, cap},
             {{"S1", "port3"}, {"S3", "port1"}, cap},
             {{"S2", "port2"}, {"S4", "port2"}, cap},
             {{"S3", "port2"}, {"S4", "port3"}, cap}};
  t.subnets = {{P("10.1.1.0/24"), {{"S1", "port1"}, cap}},
               {P("10.1.4.0/24"), {{"S4", "port1"}, cap}}};
  return t;
}

inline TrafficProfile single_demand(Cidr src, Cidr dst, double bps, double sigma = 0.0,
                                    std::uint64_t seed = 7) {
  return TrafficProfile{{Demand{src, dst, flat(bps), sigma}}, seed};
}

}  // namespace fixtures
