// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace trendnet {

/// IPv4 prefix such as "10.0.1.0/24". Host bits are kept as written so the
/// textual form round-trips.
struct Cidr {
  std::uint32_t address = 0;
  int length = 0;

  static Cidr parse(std::string_view text);  // throws Error(InvalidPrefix)

  std::uint32_t mask() const noexcept { return length == 0 ? 0u : ~0u << (32 - length); }
  std::uint32_t network() const noexcept { return address & mask(); }
  bool contains(const Cidr& other) const noexcept {
    return other.length >= length && (other.address & mask()) == network();
  }
  std::string str() const;

  friend auto operator<=>(const Cidr&, const Cidr&) = default;
};

std::uint32_t parse_ipv4(std::string_view text);  // throws Error(InvalidPrefix)
std::string format_ipv4(std::uint32_t address);

}  // namespace trendnet
