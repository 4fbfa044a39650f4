// SPDX-License-Identifier: Apache-2.0
#include "trendnet/scenario.hpp"

namespace trendnet::scenario {

using netsim::DeviceKind;
using netsim::InterfaceRef;

bool is_business_hour(int hour) noexcept {
  return hour >= kBusinessStartHour && hour < kBusinessEndHour;
}

std::array<double, 24> business_hours_profile(double capacity_bps) {
  std::array<double, 24> out{};
  for (int h = 0; h < 24; ++h) {
    out[static_cast<std::size_t>(h)] =
        (is_business_hour(h) ? kBusinessHoursShare : kOffHoursShare) * capacity_bps;
  }
  return out;
}

netsim::TopologySpec demo_topology() {
  netsim::TopologySpec spec;
  spec.devices = {
      {"R1", DeviceKind::Traditional, "10.0.0.10"},
      {"R2", DeviceKind::Traditional, "10.0.0.11"},
      {"R3", DeviceKind::Traditional, "10.0.0.12"},
      {"R4", DeviceKind::Traditional, "10.0.0.13"},
      {"S1", DeviceKind::SdnSwitch, "192.168.56.101"},
      {"S2", DeviceKind::SdnSwitch, "192.168.56.102"},
      {"S3", DeviceKind::SdnSwitch, "192.168.56.103"},
      {"S4", DeviceKind::SdnSwitch, "192.168.56.104"},
  };
  const auto cap = kDemoLinkCapacityBps;
  spec.links = {
      {{"R1", "FastEthernet0_0"}, {"R2", "FastEthernet0_0"}, cap},
      {{"R2", "FastEthernet0_1"}, {"R3", "FastEthernet0_0"}, cap},
      {{"R3", "FastEthernet0_1"}, {"R4", "FastEthernet0_1"}, cap},
      {{"R4", "FastEthernet0_0"}, {"R1", "FastEthernet0_1"}, cap},
      {{"S1", "eth1"}, {"S2", "eth1"}, cap},
      {{"S2", "eth2"}, {"S3", "eth1"}, cap},
      {{"S3", "eth2"}, {"S4", "eth2"}, cap},
      {{"S4", "eth1"}, {"S1", "eth2"}, cap},
  };
  spec.subnets = {
      {Cidr::parse("172.16.1.0/24"), {InterfaceRef{"R1", "FastEthernet1_0"}, cap}},
      {Cidr::parse("172.16.3.0/24"), {InterfaceRef{"R3", "FastEthernet1_0"}, cap}},
      {Cidr::parse("172.17.1.0/24"), {InterfaceRef{"S1", "eth3"}, cap}},
      {Cidr::parse("172.17.3.0/24"), {InterfaceRef{"S3", "eth3"}, cap}},
  };
  return spec;
}

netsim::TrafficProfile demo_profile(std::uint64_t seed) {
  const auto cap = static_cast<double>(kDemoLinkCapacityBps);
  netsim::TrafficProfile profile;
  profile.rng_seed = seed;
  profile.demands = {
      {Cidr::parse("172.16.1.0/24"), Cidr::parse("172.16.3.0/24"), business_hours_profile(cap),
       kNoiseShare * cap},
      {Cidr::parse("172.17.1.0/24"), Cidr::parse("172.17.3.0/24"), business_hours_profile(cap),
       kNoiseShare * cap},
  };
  return profile;
}

}  // namespace trendnet::scenario
