#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace gentrap::data {

/// Calendar day as a count of days since 1970-01-01.
struct Date {
  std::int32_t days = 0;

  auto operator<=>(const Date&) const = default;
  Date operator+(std::int32_t n) const { return {days + n}; }
  Date operator-(std::int32_t n) const { return {days - n}; }
  std::int32_t operator-(Date other) const { return days - other.days; }

  static Date from_ymd(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    return {static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
  }

  /// "YYYY-MM-DD"; anything after the date (e.g. " 13:00") is ignored.
  static std::optional<Date> parse(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (text.size() < 10) return std::nullopt;
    const std::string head(text.substr(0, 10));
    if (std::sscanf(head.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return from_ymd(y, m, d);
  }

  std::string str() const {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
  }
};

/// Hour-of-day from "YYYY-MM-DD HH:MM" (or "...THH:MM").
inline std::optional<int> parse_hour(std::string_view text) {
  if (text.size() < 13) return std::nullopt;
  const char a = text[11], b = text[12];
  if (a < '0' || a > '9' || b < '0' || b > '9') return std::nullopt;
  const int h = (a - '0') * 10 + (b - '0');
  return h < 24 ? std::optional<int>(h) : std::nullopt;
}

}  // namespace gentrap::data
