// SPDX-License-Identifier: Apache-2.0
#include "trendnet/time_util.hpp"

#include <charconv>
#include <chrono>
#include <string>

#include <fmt/format.h>

#include "trendnet/error.hpp"

namespace trendnet {

namespace {

using namespace std::chrono;

// Civil-from-days / days-from-civil (proleptic Gregorian, UTC).
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int parse_fixed(std::string_view text, std::size_t pos, std::size_t width) {
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + width, value);
  if (ec != std::errc{} || ptr != first + width) {
    throw Error(ErrorCode::ParseError, fmt::format("bad timestamp '{}'", text));
  }
  return value;
}

}  // namespace

std::string iso8601_ms(TimestampMs ts) {
  const sys_days day{days{floor_to(ts, kDayMs) / kDayMs}};
  const year_month_day ymd{day};
  const auto in_day = ts - floor_to(ts, kDayMs);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     in_day / kHourMs, (in_day / 60000) % 60, (in_day / 1000) % 60,
                     in_day % 1000);
}

TimestampMs parse_iso8601_ms(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS.mmmZ
  if (text.size() != 24 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != '.' || text[23] != 'Z') {
    throw Error(ErrorCode::ParseError, fmt::format("bad timestamp '{}'", text));
  }
  const auto days = days_from_civil(parse_fixed(text, 0, 4),
                                    static_cast<unsigned>(parse_fixed(text, 5, 2)),
                                    static_cast<unsigned>(parse_fixed(text, 8, 2)));
  return days * kDayMs + parse_fixed(text, 11, 2) * kHourMs + parse_fixed(text, 14, 2) * 60000 +
         parse_fixed(text, 17, 2) * kSecondMs + parse_fixed(text, 20, 3);
}

DurationMs parse_duration(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr == text.data()) {
    throw Error(ErrorCode::InvalidDuration, fmt::format("bad duration '{}'", text));
  }
  const std::string_view unit(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr));
  DurationMs scale = 0;
  if (unit.empty() || unit == "ms") scale = 1;
  else if (unit == "s") scale = kSecondMs;
  else if (unit == "m") scale = 60 * kSecondMs;
  else if (unit == "h") scale = kHourMs;
  else if (unit == "d") scale = kDayMs;
  if (scale == 0 || value <= 0) {
    throw Error(ErrorCode::InvalidDuration, fmt::format("bad duration '{}'", text));
  }
  return value * scale;
}

}  // namespace trendnet
