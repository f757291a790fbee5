#pragma once

#include <compare>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "llmcast/features.hpp"
#include "llmcast/io.hpp"
#include "llmcast/market_data.hpp"
#include "llmcast/news.hpp"

namespace llmcast {

struct DigestKey {
    std::string scope;
    Date start{};
    int span_weeks = 1;

    auto operator<=>(const DigestKey&) const = default;
};

/// Everything the forecasters read: prices, stock metadata, meta digests,
/// company profiles and peer lists. `truncated()` produces the view an
/// honest forecaster may see at a cutoff date.
class ArtifactStore {
  public:
    PeriodCalendar calendar;
    std::map<std::string, PriceSeries> prices;
    std::map<std::string, StockMeta> meta;
    std::map<std::string, CompanyProfile> profiles;
    std::map<std::string, std::vector<std::string>> peers;

    /// Only meta digests are stored; per-article digests never feed prompts.
    void add_digest(const NewsDigest& d) {
        if (!d.is_meta) throw PreconditionError("ArtifactStore: only meta digests are stored");
        digests_[DigestKey{d.scope, d.week_start, d.span_weeks}] = d;
    }

    [[nodiscard]] const NewsDigest* find_digest(const std::string& scope, Date start, int span_weeks) const {
        const auto it = digests_.find(DigestKey{scope, start, span_weeks});
        return it == digests_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const std::map<DigestKey, NewsDigest>& digests() const { return digests_; }

    [[nodiscard]] const PriceSeries& series(const std::string& symbol) const {
        const auto it = prices.find(symbol);
        if (it == prices.end()) throw DataError("no prices for " + symbol);
        return it->second;
    }

    /// Realized bin per period start, computed from prices.
    [[nodiscard]] std::map<Date, ReturnBin> realized_bins(const std::string& symbol, Granularity g) const {
        std::map<Date, ReturnBin> out;
        const auto scheme = BinScheme::for_granularity(g);
        for (const auto& r : period_returns(series(symbol), g, calendar)) out[r.period_start] = bin_return(r.pct_change, scheme);
        return out;
    }

    [[nodiscard]] std::vector<PeriodReturn> returns(const std::string& symbol, Granularity g) const {
        return period_returns(series(symbol), g, calendar);
    }

    /// Drops every price dated on/after `cutoff` and every digest whose period
    /// has not ended before `cutoff`. Profiles and peers are static.
    [[nodiscard]] ArtifactStore truncated(Date cutoff) const {
        ArtifactStore out;
        out.calendar = calendar;
        out.meta = meta;
        out.profiles = profiles;
        out.peers = peers;
        for (const auto& [sym, s] : prices) {
            auto t = truncate_before(s, cutoff);
            if (!t.points.empty()) out.prices.emplace(sym, std::move(t));
        }
        for (const auto& [key, d] : digests_) {
            if (key.start + std::chrono::days{7 * key.span_weeks} <= cutoff) out.digests_.emplace(key, d);
        }
        return out;
    }

    // -- persistence -------------------------------------------------------
    // <dir>/prices.csv, <dir>/meta/*.json, <dir>/digests.jsonl,
    // <dir>/profiles.jsonl, <dir>/peers.jsonl; absent files are skipped.

    static ArtifactStore load(const fs::path& dir, const PeriodCalendar& calendar = {}) {
        ArtifactStore store;
        store.calendar = calendar;
        if (fs::exists(dir / "prices.csv")) {
            std::ifstream in(dir / "prices.csv");
            for (auto& s : load_prices(in)) store.prices.emplace(s.symbol, std::move(s));
        }
        if (fs::is_directory(dir / "meta")) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(dir / "meta")) {
                if (e.path().extension() == ".json") files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                auto m = stock_meta_from_json(nlohmann::json::parse(read_file(f)));
                store.meta.emplace(m.symbol, std::move(m));
            }
        }
        if (fs::exists(dir / "digests.jsonl")) {
            for (const auto& j : read_jsonl_file(dir / "digests.jsonl")) {
                auto d = digest_from_json(j);
                if (d.is_meta) store.add_digest(d);
            }
        }
        if (fs::exists(dir / "profiles.jsonl")) {
            for (const auto& j : read_jsonl_file(dir / "profiles.jsonl")) {
                auto p = profile_from_json(j);
                store.profiles.emplace(p.symbol, std::move(p));
            }
        }
        if (fs::exists(dir / "peers.jsonl")) {
            for (const auto& j : read_jsonl_file(dir / "peers.jsonl")) {
                store.peers[j.at("symbol").get<std::string>()] = j.at("peers").get<std::vector<std::string>>();
            }
        }
        return store;
    }

    /// Writes the layout `load()` reads, replacing existing files.
    void save(const fs::path& dir) const {
        fs::create_directories(dir / "meta");
        std::vector<PriceSeries> series;
        for (const auto& [sym, s] : prices) series.push_back(s);
        std::ostringstream csv;
        write_prices(csv, series);
        write_file_atomic(dir / "prices.csv", csv.str());
        for (const auto& [sym, m] : meta) write_file_atomic(dir / "meta" / (sym + ".json"), to_json(m).dump(2) + "\n");
        std::vector<nlohmann::json> rows;
        for (const auto& [key, d] : digests_) rows.push_back(to_json(d));
        write_file_atomic(dir / "digests.jsonl", to_jsonl(rows));
        rows.clear();
        for (const auto& [sym, p] : profiles) rows.push_back(to_json(p));
        write_file_atomic(dir / "profiles.jsonl", to_jsonl(rows));
        rows.clear();
        for (const auto& [sym, list] : peers) rows.push_back({{"symbol", sym}, {"peers", list}});
        write_file_atomic(dir / "peers.jsonl", to_jsonl(rows));
    }

  private:
    std::map<DigestKey, NewsDigest> digests_;
};

}  // namespace llmcast
