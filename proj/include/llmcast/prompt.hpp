#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmcast/artifact_store.hpp"
#include "llmcast/hash.hpp"

namespace llmcast {

using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// ceil(chars / 4).
inline std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

struct ForecastTask {
    std::string symbol;
    Date target_period_start{};
    Granularity granularity = Granularity::Weekly;
};

struct PromptConfig {
    int history_periods = 8;
    bool few_shot = false;
    int few_shot_count = 3;
    bool cot = false;
    std::optional<std::size_t> token_budget;

    void validate() const {
        if (history_periods < 1) throw PreconditionError("PromptConfig: history_periods must be >= 1");
        if (few_shot_count < 0 || few_shot_count > 3) throw PreconditionError("PromptConfig: few_shot_count in [0,3]");
    }
};

/// The prompt's sections, kept apart so compression can rewrite them individually.
struct PromptSections {
    std::string instruction_head;  // task statement + bin legend
    std::string profile;           // "Company Profile: ..."
    std::string history;           // "Recent News: ..." with per-period blocks
    std::string examples;          // "Forecasting Examples: ..." (empty when zero-shot)
    std::string instruction_tail;  // output-format instruction
    std::string cot_suffix;        // empty unless chain-of-thought

    [[nodiscard]] std::string join() const {
        std::string text = instruction_head + "\n\n" + profile + "\n\n" + history + "\n\n";
        if (!examples.empty()) text += examples + "\n\n";
        text += instruction_tail;
        if (!cot_suffix.empty()) text += "\n" + cot_suffix;
        return text;
    }
};

struct ForecastPrompt {
    std::string text;
    ForecastTask task;
    PromptConfig config;
    std::size_t token_estimate = 0;
    std::vector<std::string> provenance;  // SHA-256 of each input artifact
    PromptSections sections;
};

inline constexpr std::string_view kCotSuffix = "Can you reason step by step before the finalized output?";
inline constexpr std::string_view kLegendLead = "The trend is represented by bins";

namespace detail {

inline const char* unit(Granularity g) { return g == Granularity::Weekly ? "week" : "month"; }

inline std::string quoted_bins(const BinScheme& scheme) {
    std::string out;
    auto bins = all_bins(scheme);
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (i) out += ", ";
        out += '"' + bins[i].render() + '"';
    }
    return out;
}

}  // namespace detail

inline std::string bin_legend(const BinScheme& scheme) {
    const int m = scheme.max_index;
    auto pct = [](int k) { return std::to_string(k) + "%"; };
    auto range = [&](char d, int k) {
        return "\"" + std::string(1, d) + std::to_string(k) + "\" means price " + (d == 'D' ? "dropping" : "rising") +
               " between " + pct(k - 1) + " and " + pct(k);
    };
    std::string s = std::string(kLegendLead) + " " + detail::quoted_bins(scheme) + ", where \"D" + std::to_string(m) +
                    "+\" means price dropping more than " + pct(m);
    for (int k = m; k > std::max(1, m - 2); --k) s += ", " + range('D', k);
    s += ", \"U" + std::to_string(m) + "+\" means price rising more than " + pct(m);
    for (int k = m; k > std::max(1, m - 2); --k) s += ", " + range('U', k);
    s += ", etc.";
    return s;
}

inline std::string instruction_head(const std::string& symbol, Granularity g) {
    const std::string u = detail::unit(g);
    return "Instruction:\nForecast next " + u + " stock return (price change) for " + symbol +
           ", given the company profile, historical " + (g == Granularity::Weekly ? "weekly" : "monthly") +
           " news summary, keywords, and stock returns, and optionally the examples from other stocks of a similar "
           "company.\n\n" +
           bin_legend(BinScheme::for_granularity(g));
}

inline std::string instruction_tail(Granularity g) {
    const std::string u = detail::unit(g);
    return "Now predict what could be the next " + u +
           "'s Summary, Keywords, and forecast the Stock Return. The predicted Summary/Keywords should explain the "
           "stock return forecasting. You should predict what could happen next " + u +
           ". Do not just summarize the history. The next " + u + " stock return need not be the same as the previous " +
           u + ". Use format Summary: ..., Keywords: ..., Stock Return: ...";
}

/// "8 weeks ago." ... "Last week."
inline std::string period_label(int periods_ago, Granularity g) {
    const std::string u = detail::unit(g);
    if (periods_ago == 1) return "Last " + u + ".";
    return std::to_string(periods_ago) + " " + u + "s ago.";
}

inline std::string render_profile_body(const CompanyProfile& p) {
    std::string s = "Description: " + p.description + "\nPositive Factors:\n";
    for (const auto& f : p.positive_factors) s += f + "\n";
    s += "Negative Factors:\n";
    for (std::size_t i = 0; i < p.negative_factors.size(); ++i) {
        s += p.negative_factors[i];
        if (i + 1 < p.negative_factors.size()) s += "\n";
    }
    return s;
}

inline std::string render_digest(const NewsDigest& d) {
    return "Summary: " + d.summary + "\nKeywords: " + render_keywords(d.keywords);
}

/// One period of history, as fed to the prompt.
struct PeriodContext {
    Date period_start{};
    NewsDigest company;
    NewsDigest macro;
    ReturnBin realized;
};

inline std::string render_history_block(const std::vector<PeriodContext>& history, Granularity g) {
    std::string s;
    const int n = static_cast<int>(history.size());
    for (int i = 0; i < n; ++i) {
        const auto& p = history[static_cast<std::size_t>(i)];
        if (i) s += "\n\n";
        s += period_label(n - i, g) + "\n[" + p.company.scope + "] " + render_digest(p.company) + "\n[Macro] " +
             render_digest(p.macro) + "\nStock Return: " + p.realized.render();
    }
    return s;
}

/// Collects `count` consecutive periods ending just before `before`, oldest first.
/// Throws DataError listing every missing artifact.
inline std::vector<PeriodContext> gather_history(const ArtifactStore& store, const std::string& symbol, Date before,
                                                 int count, Granularity g, std::vector<std::string>* provenance = nullptr) {
    const int span = g == Granularity::Weekly ? 1 : 4;
    const auto len = std::chrono::days{period_days(g)};
    std::map<Date, ReturnBin> bins;
    if (store.prices.count(symbol)) {
        try {
            bins = store.realized_bins(symbol, g);
        } catch (const DataError&) {
            // too little data; every period reports missing below
        }
    }
    std::vector<PeriodContext> out;
    std::vector<std::string> missing;
    for (int k = count; k >= 1; --k) {
        const Date start = before - len * k;
        const auto* company = store.find_digest(symbol, start, span);
        const auto* macro = store.find_digest(std::string(kMacroScope), start, span);
        const auto bin = bins.find(start);
        if (!company) missing.push_back(symbol + " digest " + format_date(start));
        if (!macro) missing.push_back("MACRO digest " + format_date(start));
        if (bin == bins.end()) missing.push_back(symbol + " return " + format_date(start));
        if (company && macro && bin != bins.end()) {
            out.push_back({start, *company, *macro, bin->second});
            if (provenance) {
                provenance->push_back(sha256_hex(to_json(*company).dump()));
                provenance->push_back(sha256_hex(to_json(*macro).dump()));
                provenance->push_back(sha256_hex(symbol + "|" + format_date(start) + "|" + bin->second.render()));
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing artifacts for " + symbol + ":";
        for (const auto& m : missing) msg += " " + m + ";";
        throw DataError(msg);
    }
    return out;
}

inline const CompanyProfile& require_profile(const ArtifactStore& store, const std::string& symbol) {
    const auto it = store.profiles.find(symbol);
    if (it == store.profiles.end()) throw DataError("missing company profile for " + symbol);
    return it->second;
}

/// One few-shot episode from a peer: profile, history, and the realized
/// outcome of `outcome_period`. Carries no instruction text.
inline std::string build_fewshot_block(const ArtifactStore& store, const std::string& peer, Date outcome_period,
                                       int history_periods, Granularity g, std::vector<std::string>* provenance = nullptr) {
    const auto& profile = require_profile(store, peer);
    const auto history = gather_history(store, peer, outcome_period, history_periods, g, provenance);
    const auto outcome = gather_history(store, peer, outcome_period + std::chrono::days{period_days(g)}, 1, g, provenance);
    if (provenance) provenance->push_back(sha256_hex(to_json(profile).dump()));
    const auto& realized = outcome.front();
    const std::string u = detail::unit(g);
    return "Example: " + peer + "\nCompany Profile:\n" + render_profile_body(profile) + "\nRecent News:\n" +
           render_history_block(history, g) + "\nNext " + u + ".\n" + render_digest(realized.company) +
           "\nStock Return: " + realized.realized.render();
}

/// Assembles a forecasting prompt from already-gathered parts.
inline ForecastPrompt assemble_prompt(const ForecastTask& task, const CompanyProfile& profile,
                                      const std::vector<PeriodContext>& history, const std::vector<std::string>& examples,
                                      const PromptConfig& config, const TokenEstimator& estimator = estimate_tokens) {
    config.validate();
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].period_start >= task.target_period_start ||
            (i > 0 && history[i].period_start <= history[i - 1].period_start)) {
            throw PreconditionError("assemble_prompt: history must be strictly increasing and before the target period");
        }
    }
    ForecastPrompt p;
    p.task = task;
    p.config = config;
    p.sections.instruction_head = instruction_head(task.symbol, task.granularity);
    p.sections.profile = "Company Profile:\n" + render_profile_body(profile);
    p.sections.history = "Recent News: News are ordered from oldest news to latest news.\n\n" +
                         render_history_block(history, task.granularity);
    if (config.few_shot && !examples.empty()) {
        std::string ex = "Forecasting Examples:";
        for (const auto& e : examples) ex += "\n\n" + e;
        p.sections.examples = std::move(ex);
    }
    p.sections.instruction_tail = instruction_tail(task.granularity);
    if (config.cot) p.sections.cot_suffix = std::string(kCotSuffix);
    p.text = p.sections.join();
    p.token_estimate = estimator(p.text);
    return p;
}

/// Builds the prompt for `task` from the store. Few-shot examples use the
/// store's peer list and each peer's most recent completed period.
inline ForecastPrompt build_prompt(const ForecastTask& task, const ArtifactStore& store, const PromptConfig& config,
                                   const TokenEstimator& estimator = estimate_tokens) {
    config.validate();
    if (store.calendar.start_of(store.calendar.index_of(task.target_period_start, task.granularity), task.granularity) !=
        task.target_period_start) {
        throw PreconditionError("build_prompt: target " + format_date(task.target_period_start) +
                                " is not a period start");
    }
    std::vector<std::string> provenance;
    const auto& profile = require_profile(store, task.symbol);
    provenance.push_back(sha256_hex(to_json(profile).dump()));
    const auto history =
        gather_history(store, task.symbol, task.target_period_start, config.history_periods, task.granularity, &provenance);

    std::vector<std::string> examples;
    if (config.few_shot) {
        const auto it = store.peers.find(task.symbol);
        if (it == store.peers.end() || it->second.empty()) throw DataError("missing similar-stock list for " + task.symbol);
        const Date outcome = task.target_period_start - std::chrono::days{period_days(task.granularity)};
        for (const auto& peer : it->second) {
            if (static_cast<int>(examples.size()) >= config.few_shot_count) break;
            examples.push_back(
                build_fewshot_block(store, peer, outcome, config.history_periods, task.granularity, &provenance));
        }
    }
    auto prompt = assemble_prompt(task, profile, history, examples, config, estimator);
    prompt.provenance = std::move(provenance);
    if (config.token_budget && prompt.token_estimate > *config.token_budget) {
        throw DataError("prompt for " + task.symbol + " " + format_date(task.target_period_start) + " exceeds token budget (" +
                        std::to_string(prompt.token_estimate) + " > " + std::to_string(*config.token_budget) + ")");
    }
    return prompt;
}

/// The "N periods ago" values of the Recent News section, in text order ("Last" = 1).
inline std::vector<int> extract_history_labels(std::string_view text, Granularity g) {
    const std::string u = detail::unit(g);
    auto start = text.find("Recent News:");
    auto stop = text.find("Forecasting Examples:");
    if (stop == std::string_view::npos) stop = text.find("Now predict");
    if (start == std::string_view::npos) return {};
    const auto section = text.substr(start, stop == std::string_view::npos ? std::string_view::npos : stop - start);
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < section.size()) {
        auto eol = section.find('\n', pos);
        if (eol == std::string_view::npos) eol = section.size();
        const auto line = section.substr(pos, eol - pos);
        if (line == "Last " + u + ".") {
            out.push_back(1);
        } else if (line.size() > u.size() + 7 && line.substr(line.size() - (u.size() + 6)) == u + "s ago.") {
            try {
                out.push_back(std::stoi(std::string(line)));
            } catch (const std::exception&) {
            }
        }
        pos = eol + 1;
    }
    return out;
}

}  // namespace llmcast
