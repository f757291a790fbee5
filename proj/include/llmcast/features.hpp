#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmcast/market_data.hpp"

namespace llmcast {

/// Missing-history sentinel. The tree learner routes NaN cells to a learned side.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

enum class RollingStat { Mean, Median, Min, Max, Stddev };
enum class BaseSeries { Open, Close, Low, High, Volume };

inline const char* to_string(RollingStat s) {
    switch (s) {
    case RollingStat::Mean: return "mean";
    case RollingStat::Median: return "median";
    case RollingStat::Min: return "min";
    case RollingStat::Max: return "max";
    case RollingStat::Stddev: return "stddev";
    }
    return "?";
}

inline const char* to_string(BaseSeries b) {
    switch (b) {
    case BaseSeries::Open: return "open";
    case BaseSeries::Close: return "close";
    case BaseSeries::Low: return "low";
    case BaseSeries::High: return "high";
    case BaseSeries::Volume: return "volume";
    }
    return "?";
}

inline double base_value(const PricePoint& p, BaseSeries b) {
    switch (b) {
    case BaseSeries::Open: return p.open;
    case BaseSeries::Close: return p.close;
    case BaseSeries::Low: return p.low;
    case BaseSeries::High: return p.high;
    case BaseSeries::Volume: return p.volume;
    }
    return kMissing;
}

struct FeatureConfig {
    std::vector<int> windows{2, 5, 10, 30, 60, 90};
    std::vector<RollingStat> stats{RollingStat::Mean, RollingStat::Median, RollingStat::Min, RollingStat::Max,
                                   RollingStat::Stddev};
    std::vector<BaseSeries> base_series{BaseSeries::Open, BaseSeries::Close, BaseSeries::Low, BaseSeries::High,
                                        BaseSeries::Volume};
    int return_lags = 8;

    void validate() const {
        if (windows.empty()) throw PreconditionError("FeatureConfig: no windows");
        for (std::size_t i = 0; i < windows.size(); ++i) {
            if (windows[i] < 2) throw PreconditionError("FeatureConfig: window < 2");
            if (i > 0 && windows[i] <= windows[i - 1]) {
                throw PreconditionError("FeatureConfig: windows must be strictly increasing");
            }
        }
        if (return_lags < 0) throw PreconditionError("FeatureConfig: negative return_lags");
    }
};

struct EarningsEvent {
    Date date{};
    double reported_eps = 0.0;
    double estimated_eps = 0.0;
};

struct StockMeta {
    std::string symbol;
    std::string sector;  // empty = unknown/missing
    std::vector<EarningsEvent> earnings;
};

inline StockMeta stock_meta_from_json(const nlohmann::json& j) {
    StockMeta meta;
    try {
        meta.symbol = j.at("symbol").get<std::string>();
        meta.sector = j.value("sector", std::string{});
        for (const auto& e : j.value("earnings", nlohmann::json::array())) {
            meta.earnings.push_back(EarningsEvent{parse_date(e.at("date").get<std::string>()),
                                                  e.at("reportedEPS").get<double>(),
                                                  e.at("estimatedEPS").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid stock meta JSON: ") + e.what());
    }
    for (std::size_t i = 1; i < meta.earnings.size(); ++i) {
        if (meta.earnings[i].date <= meta.earnings[i - 1].date) {
            throw DataError("stock meta " + meta.symbol + ": earnings dates must be increasing");
        }
    }
    return meta;
}

inline nlohmann::json to_json(const StockMeta& meta) {
    nlohmann::json earnings = nlohmann::json::array();
    for (const auto& e : meta.earnings) {
        earnings.push_back({{"date", format_date(e.date)},
                            {"reportedEPS", e.reported_eps},
                            {"estimatedEPS", e.estimated_eps}});
    }
    return {{"symbol", meta.symbol}, {"sector", meta.sector}, {"earnings", earnings}};
}

/// Statistic over one window. Any missing cell makes the result missing.
inline double window_stat(std::span<const double> w, RollingStat stat) {
    for (double v : w) {
        if (is_missing(v)) return kMissing;
    }
    switch (stat) {
    case RollingStat::Mean: {
        double s = 0.0;
        for (double v : w) s += v;
        return s / static_cast<double>(w.size());
    }
    case RollingStat::Median: {
        std::vector<double> tmp(w.begin(), w.end());
        const auto mid = tmp.begin() + static_cast<std::ptrdiff_t>((tmp.size() - 1) / 2);  // lower median
        std::nth_element(tmp.begin(), mid, tmp.end());
        return *mid;
    }
    case RollingStat::Min: return *std::min_element(w.begin(), w.end());
    case RollingStat::Max: return *std::max_element(w.begin(), w.end());
    case RollingStat::Stddev: {
        double mean = 0.0;
        for (double v : w) mean += v;
        mean /= static_cast<double>(w.size());
        double ss = 0.0;
        for (double v : w) ss += (v - mean) * (v - mean);
        return std::sqrt(ss / static_cast<double>(w.size() - 1));
    }
    }
    return kMissing;
}

/// output[t] = stat(series[t-window+1 .. t]); the first window-1 positions are missing.
inline std::vector<double> rolling_stat(std::span<const double> series, int window, RollingStat stat) {
    if (window < 2) throw PreconditionError("rolling_stat: window must be >= 2");
    std::vector<double> out(series.size(), kMissing);
    const auto w = static_cast<std::size_t>(window);
    for (std::size_t t = w - 1; t < series.size(); ++t) {
        out[t] = window_stat(series.subspan(t + 1 - w, w), stat);
    }
    return out;
}

struct FeatureRow {
    std::string symbol;
    Date as_of{};
    std::vector<double> values;
    double target = kMissing;  // percent return of the following period
};

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<FeatureRow> rows;
};

/// Ordered column names; a pure function of the config and sector vocabulary.
inline std::vector<std::string> feature_columns(const FeatureConfig& config, const std::vector<std::string>& sectors) {
    config.validate();
    std::vector<std::string> cols;
    for (auto b : config.base_series) cols.push_back(std::string("raw_") + to_string(b));
    for (auto b : config.base_series) {
        for (int w : config.windows) {
            for (auto s : config.stats) {
                cols.push_back(std::string(to_string(b)) + "_" + to_string(s) + "_" + std::to_string(w));
            }
        }
    }
    for (int w : config.windows) {
        for (auto s : config.stats) cols.push_back(std::string("ret_") + to_string(s) + "_" + std::to_string(w));
    }
    for (int lag = 1; lag <= config.return_lags; ++lag) cols.push_back("lag_return_" + std::to_string(lag));
    cols.emplace_back("days_since_earnings");
    cols.emplace_back("earnings_surprise");
    for (const auto& s : sectors) cols.push_back("sector=" + s);
    return cols;
}

/// One row per schedule date. Features use only data dated <= as_of; the
/// target is the return of the first period starting after as_of (missing at
/// the end of the series).
inline FeatureMatrix build_feature_matrix(const PriceSeries& series, const StockMeta& meta,
                                          const FeatureConfig& config, const std::vector<std::string>& sectors,
                                          const std::vector<Date>& schedule, Granularity granularity,
                                          const PeriodCalendar& calendar = {}) {
    FeatureMatrix m;
    m.columns = feature_columns(config, sectors);
    if (series.points.empty()) throw PreconditionError("build_feature_matrix: empty series " + series.symbol);

    std::size_t sector_slot = sectors.size();
    if (!meta.sector.empty()) {
        const auto it = std::find(sectors.begin(), sectors.end(), meta.sector);
        if (it == sectors.end()) throw DataError("unknown sector '" + meta.sector + "' for " + meta.symbol);
        sector_slot = static_cast<std::size_t>(it - sectors.begin());
    }

    const auto& pts = series.points;
    const std::size_t n = pts.size();

    // Rolling columns over each base series, then over daily close-to-close percent change.
    std::vector<std::vector<double>> rolling;
    for (auto b : config.base_series) {
        std::vector<double> raw(n);
        for (std::size_t i = 0; i < n; ++i) raw[i] = base_value(pts[i], b);
        for (int w : config.windows) {
            for (auto s : config.stats) rolling.push_back(rolling_stat(raw, w, s));
        }
    }
    std::vector<double> daily_ret(n, kMissing);
    for (std::size_t i = 1; i < n; ++i) daily_ret[i] = 100.0 * (pts[i].close - pts[i - 1].close) / pts[i - 1].close;
    for (int w : config.windows) {
        for (auto s : config.stats) rolling.push_back(rolling_stat(daily_ret, w, s));
    }

    std::vector<PeriodReturn> rets;
    try {
        rets = period_returns(series, granularity, calendar);
    } catch (const DataError&) {
        // fewer than two periods: lags and target stay missing
    }

    for (const Date as_of : schedule) {
        if (as_of < pts.front().date || as_of > pts.back().date) {
            throw PreconditionError("schedule date " + format_date(as_of) + " outside price range of " +
                                    series.symbol);
        }
        const auto it = std::upper_bound(pts.begin(), pts.end(), as_of,
                                         [](Date d, const PricePoint& p) { return d < p.date; });
        const auto idx = static_cast<std::size_t>(it - pts.begin()) - 1;

        FeatureRow row{series.symbol, as_of, {}, kMissing};
        row.values.reserve(m.columns.size());
        for (auto b : config.base_series) row.values.push_back(base_value(pts[idx], b));
        for (const auto& col : rolling) row.values.push_back(col[idx]);

        std::vector<double> completed;  // returns of periods ending on or before as_of, latest first
        for (auto r = rets.rbegin(); r != rets.rend(); ++r) {
            if (r->period_end <= as_of) completed.push_back(r->pct_change);
            else if (r->period_start > as_of) row.target = r->pct_change;
        }
        for (int lag = 1; lag <= config.return_lags; ++lag) {
            const auto k = static_cast<std::size_t>(lag - 1);
            row.values.push_back(k < completed.size() ? completed[k] : kMissing);
        }

        const EarningsEvent* last = nullptr;
        for (const auto& e : meta.earnings) {
            if (e.date <= as_of) last = &e;
        }
        row.values.push_back(last ? static_cast<double>(days_between(last->date, as_of)) : kMissing);
        row.values.push_back(last ? last->reported_eps - last->estimated_eps : kMissing);

        for (std::size_t s = 0; s < sectors.size(); ++s) row.values.push_back(s == sector_slot ? 1.0 : 0.0);
        m.rows.push_back(std::move(row));
    }
    return m;
}

}  // namespace llmcast
