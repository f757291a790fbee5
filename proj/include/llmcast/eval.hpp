#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmcast/market_data.hpp"
#include "llmcast/news.hpp"

namespace llmcast {

struct PredictionRecord {
    std::string symbol;
    Date period_start{};
    std::string model;
    ReturnBin predicted;
    ReturnBin actual;
    std::optional<std::string> predicted_summary;
    std::optional<std::vector<std::string>> predicted_keywords;
    std::optional<std::string> actual_summary;
    std::optional<std::vector<std::string>> actual_keywords;
};

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline double binary_precision(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw PreconditionError("binary_precision: no records");
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.predicted.direction == r.actual.direction ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

inline double bin_precision(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw PreconditionError("bin_precision: no records");
    std::size_t hits = 0;
    for (const auto& r : records) hits += r.predicted == r.actual ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

inline double ordinal_mse(const std::vector<PredictionRecord>& records, const BinScheme& scheme) {
    if (records.empty()) throw PreconditionError("ordinal_mse: no records");
    double sum = 0.0;
    for (const auto& r : records) {
        if (!r.predicted.valid_for(scheme) || !r.actual.valid_for(scheme)) {
            throw PreconditionError("ordinal_mse: record " + r.symbol + " " + format_date(r.period_start) +
                                    " has bins outside the scheme");
        }
        const double d = bin_ordinal(r.predicted, scheme) - bin_ordinal(r.actual, scheme);
        sum += d * d;
    }
    return sum / static_cast<double>(records.size());
}

/// Lowercased runs of ASCII alphanumerics; bytes >= 0x80 count as word characters.
inline std::vector<std::string> rouge_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) ++counts[{tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                                                  tokens.begin() + static_cast<std::ptrdiff_t>(i + un)}];
    return counts;
}

/// Clipped n-gram overlap, no stemming or stopword removal.
inline RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n) {
    if (n != 1 && n != 2) throw PreconditionError("rouge_n: n must be 1 or 2");
    const auto ref_tokens = rouge_tokens(reference);
    if (ref_tokens.empty()) throw PreconditionError("rouge_n: empty reference");
    const auto cand = ngram_counts(rouge_tokens(candidate), n);
    const auto ref = ngram_counts(ref_tokens, n);
    std::size_t cand_total = 0, ref_total = 0, overlap = 0;
    for (const auto& [g, c] : cand) cand_total += c;
    for (const auto& [g, c] : ref) {
        ref_total += c;
        if (auto it = cand.find(g); it != cand.end()) overlap += std::min(c, it->second);
    }
    RougeScore s;
    s.precision = cand_total ? static_cast<double>(overlap) / static_cast<double>(cand_total) : 0.0;
    s.recall = ref_total ? static_cast<double>(overlap) / static_cast<double>(ref_total) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

/// Mean precision/recall/F1 over the records that carry explanations.
struct RougeAggregate {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalRow {
    std::string model;
    Granularity granularity = Granularity::Weekly;
    double binary_precision = 0.0;
    double bin_precision = 0.0;
    double ordinal_mse = 0.0;
    std::optional<RougeAggregate> rouge1_summary;
    std::optional<RougeAggregate> rouge2_summary;
    std::optional<RougeAggregate> rouge1_keywords;
    std::optional<RougeAggregate> rouge2_keywords;
    std::size_t n_predictions = 0;
    std::size_t n_explained = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

/// Canonical row order: the known model ids first, then anything else alphabetically.
inline int model_rank(const std::string& model) {
    static const std::vector<std::string> order{"most_frequent", "arma_garch", "gbt", "llm_zero", "llm_few", "llm_few_cot"};
    const auto it = std::find(order.begin(), order.end(), model);
    return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

inline void sort_rows(std::vector<EvalRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
        if (a.granularity != b.granularity) return a.granularity < b.granularity;
        if (model_rank(a.model) != model_rank(b.model)) return model_rank(a.model) < model_rank(b.model);
        return a.model < b.model;
    });
}

inline EvalRow evaluate_model(const std::vector<PredictionRecord>& records, const BinScheme& scheme, Granularity g) {
    if (records.empty()) throw PreconditionError("evaluate_model: no records");
    EvalRow row;
    row.model = records.front().model;
    row.granularity = g;
    row.binary_precision = binary_precision(records);
    row.bin_precision = bin_precision(records);
    row.ordinal_mse = ordinal_mse(records, scheme);
    row.n_predictions = records.size();

    RougeAggregate r1s, r2s, r1k, r2k;
    auto add = [](RougeAggregate& a, const RougeScore& s) {
        a.precision += s.precision;
        a.recall += s.recall;
        a.f1 += s.f1;
    };
    for (const auto& r : records) {
        if (!r.predicted_summary || !r.actual_summary || !r.predicted_keywords || !r.actual_keywords) continue;
        if (rouge_tokens(*r.actual_summary).empty() || rouge_tokens(render_keywords(*r.actual_keywords)).empty()) continue;
        ++row.n_explained;
        add(r1s, rouge_n(*r.predicted_summary, *r.actual_summary, 1));
        add(r2s, rouge_n(*r.predicted_summary, *r.actual_summary, 2));
        // keyword lists are joined with single spaces before scoring
        auto join = [](const std::vector<std::string>& k) {
            std::string s;
            for (std::size_t i = 0; i < k.size(); ++i) s += (i ? " " : "") + k[i];
            return s;
        };
        add(r1k, rouge_n(join(*r.predicted_keywords), join(*r.actual_keywords), 1));
        add(r2k, rouge_n(join(*r.predicted_keywords), join(*r.actual_keywords), 2));
    }
    if (row.n_explained > 0) {
        const double n = static_cast<double>(row.n_explained);
        auto mean = [n](RougeAggregate a) { return RougeAggregate{a.precision / n, a.recall / n, a.f1 / n}; };
        row.rouge1_summary = mean(r1s);
        row.rouge2_summary = mean(r2s);
        row.rouge1_keywords = mean(r1k);
        row.rouge2_keywords = mean(r2k);
    }
    return row;
}

/// One row per model id present in `records`.
inline EvalReport evaluate_run(const std::vector<PredictionRecord>& records, const BinScheme& scheme, Granularity g) {
    if (records.empty()) throw PreconditionError("evaluate_run: no records");
    std::map<std::string, std::vector<PredictionRecord>> by_model;
    for (const auto& r : records) by_model[r.model].push_back(r);
    EvalReport report;
    for (const auto& [model, recs] : by_model) report.rows.push_back(evaluate_model(recs, scheme, g));
    sort_rows(report.rows);
    return report;
}

inline EvalReport merge_reports(const std::vector<EvalReport>& reports) {
    EvalReport out;
    for (const auto& r : reports) out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
    sort_rows(out.rows);
    return out;
}

}  // namespace llmcast
