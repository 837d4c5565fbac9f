#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace hetcorr {

using Date = std::chrono::sys_days;

/// Parses "YYYY-MM-DD" or the compact "YYYYMMDD" form. Returns nullopt on anything else.
inline std::optional<Date> parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  std::string s(text);
  char tail = 0;
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
  } else if (s.size() == 8 && s.find_first_not_of("0123456789") == std::string::npos) {
    if (std::sscanf(s.c_str(), "%4d%2u%2u", &y, &m, &d) != 3) return std::nullopt;
  } else {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline Date default_start_date() {
  return Date{std::chrono::year_month_day{std::chrono::year{2020}, std::chrono::month{3}, std::chrono::day{1}}};
}

}  // namespace hetcorr
