#pragma once

#include <algorithm>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmcast/forecast_parser.hpp"
#include "llmcast/llm_client.hpp"
#include "llmcast/prompt.hpp"

namespace llmcast {

inline constexpr std::size_t kFinetuneTokenBudget = 1024;

struct FinetuneExample {
    std::string symbol;
    Date period_start{};
    Granularity granularity = Granularity::Weekly;
    std::string instruction;
    std::string response;
    std::size_t token_estimate = 0;  // of instruction + "\n" + response
};

/// "Summary: ...\nKeywords: ...\nStock Return: <bin>" for the realized period.
inline std::string finetune_response(const NewsDigest& realized, const ReturnBin& bin) {
    return "Summary: " + realized.summary + "\nKeywords: " + render_keywords(realized.keywords) +
           "\nStock Return: " + bin.render();
}

struct CompressionOptions {
    std::size_t token_budget = kFinetuneTokenBudget;
    int max_rounds = 3;
    std::string model = "gpt-4";
    int max_output_tokens = 512;
};

namespace templates {

inline std::string condense_history(const std::string& symbol, Granularity g, const std::string& history) {
    return std::string("Condense the following historical ") + (g == Granularity::Weekly ? "weekly" : "monthly") +
           " news summaries, keywords and stock returns for " + symbol +
           " into a single, even more concise summary/keywords pair. Keep the stock return trend. Use format "
           "Summary: ..., Keywords: ...\n\n" + history;
}

inline std::string condense_profile(const std::string& profile) {
    return "Condense the following company profile, including its positive and negative factors, into one short "
           "paragraph.\n\n" + profile;
}

inline std::string condense_examples(const std::string& examples) {
    return "Condense the following forecasting examples from similar stocks into one short paragraph. Keep each "
           "example's stock symbol and stock return.\n\n" + examples;
}

inline std::string condense_again(const std::string& text) {
    return "Make the following text even more concise while keeping the key facts.\n\n" + text;
}

}  // namespace templates

/// Shrinks `prompt` into a fine-tuning example within the token budget.
/// Prompts already within budget pass through without LLM calls; otherwise
/// history, profile and examples are each condensed by one call per round.
inline FinetuneExample compress_for_finetune(const ForecastPrompt& prompt, const std::string& response, LlmClient& llm,
                                             const CompressionOptions& options = {},
                                             const TokenEstimator& estimator = estimate_tokens) {
    FinetuneExample ex{prompt.task.symbol, prompt.task.target_period_start, prompt.task.granularity, prompt.text, response, 0};
    auto measure = [&](const std::string& instruction) { return estimator(instruction + "\n" + response); };
    ex.token_estimate = measure(ex.instruction);
    if (ex.token_estimate <= options.token_budget) return ex;

    auto ask = [&](const std::string& text) {
        return trim_copy(llm.complete(CompletionRequest{text, options.max_output_tokens, 0.0, options.model}));
    };
    const auto& s = prompt.sections;
    std::string history = s.history;
    std::string profile = s.profile;
    std::string examples = s.examples;
    for (int round = 1; round <= options.max_rounds; ++round) {
        if (round == 1) {
            history = ask(templates::condense_history(prompt.task.symbol, prompt.task.granularity, history));
            profile = ask(templates::condense_profile(profile));
            if (!examples.empty()) examples = ask(templates::condense_examples(examples));
        } else {
            history = ask(templates::condense_again(history));
            profile = ask(templates::condense_again(profile));
            if (!examples.empty()) examples = ask(templates::condense_again(examples));
        }
        PromptSections compact = s;
        compact.profile = "Company Profile: " + profile;
        compact.history = "Recent News: " + history;
        compact.examples = examples.empty() ? std::string{} : "Forecasting Examples: " + examples;
        ex.instruction = compact.join();
        ex.token_estimate = measure(ex.instruction);
        if (ex.token_estimate <= options.token_budget) return ex;
    }
    throw DataError("compress_for_finetune: " + prompt.task.symbol + " " + format_date(prompt.task.target_period_start) +
                    " still " + std::to_string(ex.token_estimate) + " tokens after " +
                    std::to_string(options.max_rounds) + " rounds");
}

/// Checks the budget and that the response carries a bin valid for its scheme.
inline void validate_example(const FinetuneExample& ex, std::size_t budget = kFinetuneTokenBudget) {
    if (ex.token_estimate > budget) {
        throw DataError("fine-tune example " + ex.symbol + " " + format_date(ex.period_start) + " exceeds token budget");
    }
    parse_forecast(ex.response, BinScheme::for_granularity(ex.granularity));
}

/// One {"instruction","response"} object per line, ordered by (symbol, granularity, period).
/// Returns the number of lines written.
inline std::size_t export_finetune_dataset(std::vector<FinetuneExample> examples, std::ostream& out,
                                           std::size_t budget = kFinetuneTokenBudget) {
    for (const auto& ex : examples) validate_example(ex, budget);
    std::stable_sort(examples.begin(), examples.end(), [](const FinetuneExample& a, const FinetuneExample& b) {
        if (a.symbol != b.symbol) return a.symbol < b.symbol;
        if (a.granularity != b.granularity) return a.granularity < b.granularity;
        return a.period_start < b.period_start;
    });
    if (examples.empty()) std::clog << "warning: fine-tune export: no examples\n";
    for (const auto& ex : examples) {
        out << nlohmann::json{{"instruction", ex.instruction}, {"response", ex.response}}.dump() << '\n';
    }
    return examples.size();
}

/// Period starts in [first, last] on the calendar grid.
inline std::vector<Date> period_starts_in(Date first, Date last, Granularity g, const PeriodCalendar& calendar) {
    std::vector<Date> out;
    long idx = calendar.index_of(first, g);
    if (calendar.start_of(idx, g) < first) ++idx;
    for (; calendar.start_of(idx, g) <= last; ++idx) out.push_back(calendar.start_of(idx, g));
    return out;
}

}  // namespace llmcast
