#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "llmcast/error.hpp"

namespace llmcast {

/// Calendar day. All dates in the pipeline are civil days without time zone.
using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
    return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

/// Parses strict ISO-8601 YYYY-MM-DD.
inline Date parse_date(std::string_view text) {
    auto bad = [&] { return DataError("invalid date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    auto digits = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') throw bad();
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year{digits(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(digits(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(digits(8, 2))}};
    if (!ymd.ok()) throw bad();
    return Date{ymd};
}

inline std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

inline bool is_monday(Date d) {
    return std::chrono::weekday{d} == std::chrono::Monday;
}

/// Monday of the ISO week containing d.
inline Date week_start(Date d) {
    const unsigned iso = std::chrono::weekday{d}.iso_encoding();  // Mon=1 .. Sun=7
    return d - std::chrono::days{iso - 1};
}

inline long days_between(Date from, Date to) {
    return static_cast<long>((to - from).count());
}

}  // namespace llmcast
