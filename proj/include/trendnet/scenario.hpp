// SPDX-License-Identifier: Apache-2.0
//
// Default demo network: a four-router ring and a four-switch ring, each with
// one edge-to-edge demand following a business-hours diurnal profile.
#pragma once

#include "trendnet/netsim.hpp"

namespace trendnet::scenario {

/// 8 Mbps keeps a full hour of line-rate traffic below 2^32 octets, so one
/// counter wrap per hourly poll at most.
inline constexpr std::int64_t kDemoLinkCapacityBps = 8'000'000;
inline constexpr double kBusinessHoursShare = 0.60;
inline constexpr double kOffHoursShare = 0.10;
inline constexpr double kNoiseShare = 0.05;
inline constexpr int kBusinessStartHour = 8;  // 08:00 inclusive
inline constexpr int kBusinessEndHour = 17;   // 17:00 exclusive

netsim::TopologySpec demo_topology();
netsim::TrafficProfile demo_profile(std::uint64_t seed = 1);

/// 24-entry diurnal profile scaled to `capacity_bps`.
std::array<double, 24> business_hours_profile(double capacity_bps);

bool is_business_hour(int hour) noexcept;

}  // namespace trendnet::scenario
