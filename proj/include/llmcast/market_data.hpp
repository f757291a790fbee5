#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "llmcast/date.hpp"
#include "llmcast/error.hpp"

namespace llmcast {

struct PricePoint {
    Date date{};
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    friend bool operator==(const PricePoint&, const PricePoint&) = default;
};

struct PriceSeries {
    std::string symbol;
    std::vector<PricePoint> points;  // strictly increasing by date
};

enum class Granularity { Weekly, Monthly };

inline const char* to_string(Granularity g) {
    return g == Granularity::Weekly ? "weekly" : "monthly";
}

inline Granularity parse_granularity(std::string_view s) {
    if (s == "weekly") return Granularity::Weekly;
    if (s == "monthly") return Granularity::Monthly;
    throw UsageError("unknown granularity '" + std::string(s) + "' (expected weekly|monthly)");
}

/// Days per period. A "month" is a block of four ISO weeks.
inline int period_days(Granularity g) {
    return g == Granularity::Weekly ? 7 : 28;
}

/// How a period's percentage change is anchored.
enum class ReturnAnchor {
    PreviousClose,  // last close of the previous period -> last close of this period
    PeriodOpen,     // first open of this period -> last close of this period
};

/// Week/month boundary rule. Weeks run Monday..Sunday; months are consecutive
/// 4-week blocks whose grid is anchored at `anchor` (the evaluation start).
struct PeriodCalendar {
    Date anchor = make_date(2022, 6, 6);
    ReturnAnchor return_anchor = ReturnAnchor::PreviousClose;

    /// Signed index of the period containing d (0 = period starting at anchor).
    [[nodiscard]] long index_of(Date d, Granularity g) const {
        const long len = period_days(g);
        const long offset = days_between(anchor, d);
        return offset >= 0 ? offset / len : -((-offset + len - 1) / len);
    }

    [[nodiscard]] Date start_of(long index, Granularity g) const {
        return anchor + std::chrono::days{index * period_days(g)};
    }

    [[nodiscard]] Date end_of(long index, Granularity g) const {
        return start_of(index, g) + std::chrono::days{period_days(g) - 1};
    }

    [[nodiscard]] Date period_start(Date d, Granularity g) const { return start_of(index_of(d, g), g); }
};

struct PeriodReturn {
    std::string symbol;
    Date period_start{};
    Date period_end{};
    double pct_change = 0.0;  // percent: 2.3 means +2.3%
};

// ---------------------------------------------------------------------------
// Bins
// ---------------------------------------------------------------------------

struct BinScheme {
    int max_index = 5;

    static BinScheme weekly() { return {5}; }
    static BinScheme monthly() { return {10}; }
    static BinScheme for_granularity(Granularity g) {
        return g == Granularity::Weekly ? weekly() : monthly();
    }

    [[nodiscard]] int bin_count() const { return 2 * (max_index + 1); }

    friend bool operator==(const BinScheme&, const BinScheme&) = default;
};

enum class Direction : std::uint8_t { Down, Up };

/// Categorical return label: "D3", "U1", "U5+" ...
/// `open_ended` marks the unbounded tail bin, whose magnitude equals the scheme max.
struct ReturnBin {
    Direction direction = Direction::Up;
    int magnitude = 1;
    bool open_ended = false;

    [[nodiscard]] std::string render() const {
        std::string s(1, direction == Direction::Up ? 'U' : 'D');
        s += std::to_string(magnitude);
        if (open_ended) s += '+';
        return s;
    }

    [[nodiscard]] bool valid_for(const BinScheme& scheme) const {
        if (magnitude < 1 || magnitude > scheme.max_index) return false;
        return !open_ended || magnitude == scheme.max_index;
    }

    friend bool operator==(const ReturnBin&, const ReturnBin&) = default;
};

/// Parses the exact token grammar [DU]<digits>[+]. Scheme validity is checked separately.
inline std::optional<ReturnBin> try_parse_bin(std::string_view token) {
    if (token.size() < 2) return std::nullopt;
    ReturnBin bin;
    if (token[0] == 'U') {
        bin.direction = Direction::Up;
    } else if (token[0] == 'D') {
        bin.direction = Direction::Down;
    } else {
        return std::nullopt;
    }
    std::size_t i = 1;
    int value = 0;
    while (i < token.size() && token[i] >= '0' && token[i] <= '9') {
        value = value * 10 + (token[i] - '0');
        if (value > 1000) return std::nullopt;
        ++i;
    }
    if (i == 1) return std::nullopt;
    if (i < token.size()) {
        if (token[i] != '+' || i + 1 != token.size()) return std::nullopt;
        bin.open_ended = true;
    }
    bin.magnitude = value;
    return bin;
}

inline ReturnBin parse_bin(std::string_view token, const BinScheme& scheme) {
    auto bin = try_parse_bin(token);
    if (!bin) throw ParseError(ParseError::Kind::Unparseable, "invalid bin token '" + std::string(token) + "'", std::string(token));
    if (!bin->valid_for(scheme)) {
        throw ParseError(ParseError::Kind::BinOutOfScheme,
                         "bin '" + std::string(token) + "' outside scheme with max " + std::to_string(scheme.max_index),
                         std::string(token));
    }
    return *bin;
}

/// U k covers [k-1, k) percent, D k covers (-k, -(k-1)], the tails cover
/// >= max and <= -max. Zero maps to U1.
inline ReturnBin bin_return(double pct, const BinScheme& scheme) {
    if (!std::isfinite(pct)) throw PreconditionError("bin_return: non-finite percent change");
    const double max = scheme.max_index;
    if (pct >= 0.0) {
        if (pct >= max) return {Direction::Up, scheme.max_index, true};
        return {Direction::Up, static_cast<int>(std::floor(pct)) + 1, false};
    }
    if (pct <= -max) return {Direction::Down, scheme.max_index, true};
    return {Direction::Down, static_cast<int>(std::ceil(-pct)), false};
}

/// D<max>+ -> -(max+1), ..., D1 -> -1, U1 -> 0, ..., U<max>+ -> max.
inline int bin_ordinal(const ReturnBin& bin, const BinScheme& scheme) {
    if (!bin.valid_for(scheme)) {
        throw PreconditionError("bin " + bin.render() + " not valid for scheme with max " +
                                std::to_string(scheme.max_index));
    }
    if (bin.direction == Direction::Up) return bin.open_ended ? scheme.max_index : bin.magnitude - 1;
    return bin.open_ended ? -(scheme.max_index + 1) : -bin.magnitude;
}

inline ReturnBin ordinal_to_bin(int k, const BinScheme& scheme) {
    const int max = scheme.max_index;
    if (k < -(max + 1) || k > max) {
        throw PreconditionError("ordinal " + std::to_string(k) + " outside [" +
                                std::to_string(-(max + 1)) + ", " + std::to_string(max) + "]");
    }
    if (k == max) return {Direction::Up, max, true};
    if (k >= 0) return {Direction::Up, k + 1, false};
    if (k == -(max + 1)) return {Direction::Down, max, true};
    return {Direction::Down, -k, false};
}

/// Every bin of the scheme in ascending ordinal order.
inline std::vector<ReturnBin> all_bins(const BinScheme& scheme) {
    std::vector<ReturnBin> out;
    out.reserve(static_cast<std::size_t>(scheme.bin_count()));
    for (int k = -(scheme.max_index + 1); k <= scheme.max_index; ++k) out.push_back(ordinal_to_bin(k, scheme));
    return out;
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view field, std::size_t line_no, const char* what) {
    const std::string s(trim(field));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size() || !std::isfinite(v)) {
        throw DataError("line " + std::to_string(line_no) + ": invalid " + what + " '" + s + "'");
    }
    return v;
}

inline bool valid_symbol(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
    });
}

}  // namespace detail

inline void validate_point(const PricePoint& p, const std::string& where) {
    if (p.open <= 0 || p.high <= 0 || p.low <= 0 || p.close <= 0) {
        throw DataError(where + ": non-positive price");
    }
    if (p.volume < 0) throw DataError(where + ": negative volume");
    if (p.low > p.open || p.open > p.high || p.low > p.close || p.close > p.high) {
        throw DataError(where + ": prices violate low <= open/close <= high");
    }
}

/// Reads `date,symbol,open,high,low,close,volume` CSV. Returns one series per
/// symbol, sorted by symbol, each sorted by date.
inline std::vector<PriceSeries> load_prices(std::istream& in) {
    static constexpr std::string_view kHeader = "date,symbol,open,high,low,close,volume";
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("price CSV is empty");
    ++line_no;
    if (detail::trim(line) != kHeader) {
        throw DataError("line 1: expected header '" + std::string(kHeader) + "'");
    }
    std::map<std::string, std::vector<PricePoint>> by_symbol;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        const std::string where = "line " + std::to_string(line_no);
        if (fields.size() != 7) {
            throw DataError(where + ": expected 7 fields, got " + std::to_string(fields.size()));
        }
        PricePoint p;
        try {
            p.date = parse_date(detail::trim(fields[0]));
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        const std::string symbol(detail::trim(fields[1]));
        if (!detail::valid_symbol(symbol)) throw DataError(where + ": invalid symbol '" + symbol + "'");
        p.open = detail::parse_number(fields[2], line_no, "open");
        p.high = detail::parse_number(fields[3], line_no, "high");
        p.low = detail::parse_number(fields[4], line_no, "low");
        p.close = detail::parse_number(fields[5], line_no, "close");
        p.volume = detail::parse_number(fields[6], line_no, "volume");
        validate_point(p, where);
        by_symbol[symbol].push_back(p);
    }
    std::vector<PriceSeries> out;
    for (auto& [symbol, points] : by_symbol) {
        std::stable_sort(points.begin(), points.end(),
                         [](const PricePoint& a, const PricePoint& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (points[i].date == points[i - 1].date) {
                throw DataError("duplicate row for " + symbol + " on " + format_date(points[i].date));
            }
        }
        out.push_back(PriceSeries{symbol, std::move(points)});
    }
    return out;
}

inline std::vector<PriceSeries> load_prices(std::string_view csv) {
    std::istringstream in{std::string(csv)};
    return load_prices(in);
}

/// Writes the canonical CSV form (round-trips through load_prices).
inline void write_prices(std::ostream& out, const std::vector<PriceSeries>& series) {
    out << "date,symbol,open,high,low,close,volume\n";
    char buf[256];
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f,%.6f,%.0f\n", format_date(p.date).c_str(),
                          s.symbol.c_str(), p.open, p.high, p.low, p.close, p.volume);
            out << buf;
        }
    }
}

/// Points dated strictly before `cutoff`.
inline PriceSeries truncate_before(const PriceSeries& series, Date cutoff) {
    PriceSeries out{series.symbol, {}};
    for (const auto& p : series.points) {
        if (p.date < cutoff) out.points.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Period returns
// ---------------------------------------------------------------------------

/// Week-over-week (or 4-week-block) percentage changes. Periods with no
/// trading days are skipped; with PreviousClose anchoring, the change is taken
/// against the closest earlier period that traded.
inline std::vector<PeriodReturn> period_returns(const PriceSeries& series, Granularity granularity,
                                                const PeriodCalendar& calendar = {}) {
    if (series.points.empty()) throw PreconditionError("period_returns: empty series " + series.symbol);

    struct Period {
        long index;
        double first_open;
        double last_close;
    };
    std::vector<Period> periods;
    for (const auto& p : series.points) {
        const long idx = calendar.index_of(p.date, granularity);
        if (periods.empty() || periods.back().index != idx) {
            periods.push_back({idx, p.open, p.close});
        } else {
            periods.back().last_close = p.close;
        }
    }
    if (calendar.return_anchor == ReturnAnchor::PreviousClose && periods.size() < 2) {
        throw DataError("period_returns: " + series.symbol + " has fewer than two periods with trading data");
    }

    std::vector<PeriodReturn> out;
    out.reserve(periods.size());
    for (std::size_t i = 0; i < periods.size(); ++i) {
        double base = 0.0;
        if (calendar.return_anchor == ReturnAnchor::PreviousClose) {
            if (i == 0) continue;
            base = periods[i - 1].last_close;
        } else {
            base = periods[i].first_open;
        }
        const double pct = 100.0 * (periods[i].last_close - base) / base;
        out.push_back(PeriodReturn{series.symbol, calendar.start_of(periods[i].index, granularity),
                                   calendar.end_of(periods[i].index, granularity), pct});
    }
    return out;
}

}  // namespace llmcast
