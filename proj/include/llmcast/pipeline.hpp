#pragma once

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "llmcast/artifact_store.hpp"
#include "llmcast/backtest.hpp"
#include "llmcast/finetune.hpp"
#include "llmcast/news.hpp"

namespace llmcast {

struct DigestRun {
    std::vector<NewsDigest> article_digests;
    std::vector<NewsDigest> meta_digests;  // weekly first, then 4-week blocks
    std::size_t na_articles = 0;
};

/// Article digests, then one weekly meta digest per (scope, week) and one
/// block digest per (scope, 4-week block) built from the weekly ones.
inline DigestRun digest_news(const std::vector<NewsArticle>& articles, NewsPipeline& pipeline,
                             const PeriodCalendar& calendar, bool monthly = true) {
    DigestRun out;
    std::map<std::pair<std::string, Date>, std::vector<NewsDigest>> by_week;
    for (const auto& a : articles) {
        auto d = pipeline.summarize_article(a);
        if (d.is_na()) ++out.na_articles;
        by_week[{d.scope, d.week_start}].push_back(d);
        out.article_digests.push_back(std::move(d));
    }
    std::map<std::pair<std::string, Date>, std::vector<NewsDigest>> by_block;
    for (const auto& [key, digests] : by_week) {
        const bool usable = std::any_of(digests.begin(), digests.end(), [](const NewsDigest& d) { return !d.is_na(); });
        if (!usable) continue;
        auto weekly = pipeline.meta_summarize(digests, key.second, 1);
        if (monthly) by_block[{key.first, calendar.period_start(key.second, Granularity::Monthly)}].push_back(weekly);
        out.meta_digests.push_back(std::move(weekly));
    }
    for (const auto& [key, weeks] : by_block) out.meta_digests.push_back(pipeline.meta_summarize(weeks, key.second, 4));
    return out;
}

struct ProfileRun {
    std::vector<CompanyProfile> profiles;
    std::map<std::string, std::vector<std::string>> peers;
};

inline ProfileRun build_profiles(const std::vector<std::string>& universe, NewsPipeline& pipeline, int peer_count = 3) {
    ProfileRun out;
    for (const auto& sym : universe) {
        out.profiles.push_back(pipeline.generate_profile(sym));
        out.peers[sym] = pipeline.similar_stocks(sym, peer_count);
    }
    return out;
}

struct FinetuneRun {
    std::vector<FinetuneExample> examples;
    std::vector<SkippedTask> skipped;
};

/// One example per (symbol, training period) with enough history. The
/// response is the realized period's digest and bin.
inline FinetuneRun build_finetune_examples(const ArtifactStore& full_store, const RunConfig& cfg,
                                           const PromptConfig& prompt_config, LlmClient& llm,
                                           const CompressionOptions& options = {}) {
    ArtifactStore store = full_store;
    store.calendar = cfg.calendar();
    const auto g = cfg.granularity;
    const int span = g == Granularity::Weekly ? 1 : 4;
    FinetuneRun out;
    for (const auto& sym : cfg.universe) {
        const auto realized = store.realized_bins(sym, g);
        for (Date t : period_starts_in(cfg.train_start, cfg.train_end, g, store.calendar)) {
            const auto bin = realized.find(t);
            if (bin == realized.end()) continue;
            const auto* truth = store.find_digest(sym, t, span);
            if (truth == nullptr || truth->is_na()) {
                out.skipped.push_back({sym, t, "finetune", "no digest for the target period"});
                continue;
            }
            try {
                const auto prompt = build_prompt(ForecastTask{sym, t, g}, store.truncated(t), prompt_config);
                out.examples.push_back(compress_for_finetune(prompt, finetune_response(*truth, bin->second), llm, options));
            } catch (const DataError& e) {
                out.skipped.push_back({sym, t, "finetune", e.what()});
            }
        }
    }
    return out;
}

}  // namespace llmcast
