#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "memcost/core/error.hpp"

namespace memcost {

using Timestamp = std::chrono::sys_seconds;

namespace detail {

// Howard Hinnant's days_from_civil / civil_from_days.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

inline bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > s.size()) return false;
  unsigned v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + static_cast<unsigned>(s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

/// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM:SS" with an
/// optional trailing 'Z'. Times are taken as UTC.
inline Timestamp parse_timestamp(std::string_view text) {
  std::string_view s = text;
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  const auto fail = [&]() -> Timestamp {
    throw InvalidInput("unparseable timestamp '" + std::string(text) + "'");
  };
  if (!detail::parse_fixed(s, 0, 4, y) || s.size() < 10 || s[4] != '-' ||
      !detail::parse_fixed(s, 5, 2, mo) || s[7] != '-' || !detail::parse_fixed(s, 8, 2, d)) {
    return fail();
  }
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || !detail::parse_fixed(s, 11, 2, h) || s.size() < 16 ||
        s[13] != ':' || !detail::parse_fixed(s, 14, 2, mi)) {
      return fail();
    }
    if (s.size() > 16) {
      if (s.size() != 19 || s[16] != ':' || !detail::parse_fixed(s, 17, 2, sec)) return fail();
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59 || sec > 59) return fail();
  static constexpr unsigned kMonthDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (d > kMonthDays[mo - 1] + (mo == 2 && leap ? 1u : 0u)) return fail();
  const std::int64_t days = detail::days_from_civil(y, mo, d);
  return Timestamp(std::chrono::seconds(days * 86400 + h * 3600 + mi * 60 + sec));
}

/// Canonical rendering: "YYYY-MM-DDTHH:MM:SS".
inline std::string format_timestamp(Timestamp ts) {
  const std::int64_t total = ts.time_since_epoch().count();
  std::int64_t days = total / 86400;
  std::int64_t rem = total % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  const auto c = detail::civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                static_cast<long long>(c.year), c.month, c.day, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem % 3600) / 60), static_cast<long long>(rem % 60));
  return buf;
}

}  // namespace memcost
