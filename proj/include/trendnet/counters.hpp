// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace trendnet {

/// The six interface counters every device exposes.
enum class Metric { InOctets, OutOctets, InPkts, OutPkts, InDiscards, OutDiscards };

inline constexpr std::array<Metric, 6> kAllMetrics = {
    Metric::InOctets, Metric::OutOctets, Metric::InPkts,
    Metric::OutPkts,  Metric::InDiscards, Metric::OutDiscards};

std::string_view metric_name(Metric m) noexcept;
std::optional<Metric> metric_from_name(std::string_view name) noexcept;

/// 32-bit wrapping monotone counters.
struct CounterSet {
  std::uint32_t in_octets = 0;
  std::uint32_t out_octets = 0;
  std::uint32_t in_pkts = 0;
  std::uint32_t out_pkts = 0;
  std::uint32_t in_discards = 0;
  std::uint32_t out_discards = 0;

  std::uint32_t get(Metric m) const noexcept;
  std::uint32_t& at(Metric m) noexcept;

  friend bool operator==(const CounterSet&, const CounterSet&) = default;
};

/// Adds `amount` modulo 2^32.
inline void wrap_add(std::uint32_t& counter, std::uint64_t amount) noexcept {
  counter = static_cast<std::uint32_t>(counter + static_cast<std::uint32_t>(amount));
}

}  // namespace trendnet
