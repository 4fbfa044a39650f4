// SPDX-License-Identifier: Apache-2.0
#include "trendnet/cidr.hpp"

#include <charconv>

#include <fmt/format.h>

#include "trendnet/error.hpp"

namespace trendnet {

namespace {

bool parse_uint(std::string_view text, unsigned long max, unsigned long& out) {
  if (text.empty() || text.size() > 3) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && out <= max;
}

}  // namespace

std::uint32_t parse_ipv4(std::string_view text) {
  std::uint32_t address = 0;
  std::string_view rest = text;
  for (int octet = 0; octet < 4; ++octet) {
    auto dot = rest.find('.');
    auto part = octet == 3 ? rest : rest.substr(0, dot);
    unsigned long value = 0;
    if ((octet < 3 && dot == std::string_view::npos) || !parse_uint(part, 255, value)) {
      throw Error(ErrorCode::InvalidPrefix, fmt::format("bad IPv4 address '{}'", text));
    }
    address = (address << 8) | static_cast<std::uint32_t>(value);
    if (octet < 3) rest.remove_prefix(dot + 1);
  }
  return address;
}

std::string format_ipv4(std::uint32_t a) {
  return fmt::format("{}.{}.{}.{}", a >> 24, (a >> 16) & 0xff, (a >> 8) & 0xff, a & 0xff);
}

Cidr Cidr::parse(std::string_view text) {
  auto slash = text.find('/');
  unsigned long length = 0;
  if (slash == std::string_view::npos || !parse_uint(text.substr(slash + 1), 32, length)) {
    throw Error(ErrorCode::InvalidPrefix, fmt::format("bad CIDR prefix '{}'", text));
  }
  return Cidr{parse_ipv4(text.substr(0, slash)), static_cast<int>(length)};
}

std::string Cidr::str() const { return fmt::format("{}/{}", format_ipv4(address), length); }

}  // namespace trendnet
