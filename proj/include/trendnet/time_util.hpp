// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace trendnet {

using TimestampMs = std::int64_t;
using DurationMs = std::int64_t;

inline constexpr DurationMs kSecondMs = 1000;
inline constexpr DurationMs kHourMs = 3600 * kSecondMs;
inline constexpr DurationMs kDayMs = 24 * kHourMs;

/// 2018-04-07T00:00:00Z, the default virtual epoch.
inline constexpr TimestampMs kDefaultEpochMs = 1523059200000;

/// UTC hour of day in [0, 24).
inline int hour_of_day(TimestampMs ts) noexcept {
  auto in_day = ts % kDayMs;
  if (in_day < 0) in_day += kDayMs;
  return static_cast<int>(in_day / kHourMs);
}

inline TimestampMs floor_to(TimestampMs ts, DurationMs bucket) noexcept {
  auto r = ts % bucket;
  if (r < 0) r += bucket;
  return ts - r;
}

/// "2018-04-07T22:05:24.218Z"
std::string iso8601_ms(TimestampMs ts);
/// Inverse of iso8601_ms; accepts only that exact shape. Throws Error(ParseError).
TimestampMs parse_iso8601_ms(std::string_view text);

/// Parses "1h", "15m", "30s", "250ms", "2d" or a bare millisecond count.
/// Throws Error(InvalidDuration).
DurationMs parse_duration(std::string_view text);

}  // namespace trendnet
