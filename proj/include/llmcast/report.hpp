#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "llmcast/eval.hpp"

namespace llmcast {

inline std::string model_display_name(const std::string& id) {
    static const std::map<std::string, std::string> names{
        {"most_frequent", "Most-Frequent Historical Bin"},
        {"arma_garch", "ARMA-GARCH"},
        {"gbt", "Gradient Boosting Tree Model"},
        {"llm_zero", "LLM Zero-Shot"},
        {"llm_few", "LLM Few-Shot"},
        {"llm_few_cot", "LLM Few-Shot w/ COT"},
    };
    const auto it = names.find(id);
    return it == names.end() ? id : it->second;
}

namespace detail {

inline std::vector<std::string> models_in(const EvalReport& report) {
    std::vector<std::string> models;
    for (const auto& r : report.rows) {
        if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    }
    std::stable_sort(models.begin(), models.end(), [](const std::string& a, const std::string& b) {
        return model_rank(a) != model_rank(b) ? model_rank(a) < model_rank(b) : a < b;
    });
    return models;
}

inline const EvalRow* find_row(const EvalReport& report, const std::string& model, Granularity g) {
    for (const auto& r : report.rows) {
        if (r.model == model && r.granularity == g) return &r;
    }
    return nullptr;
}

inline std::string render_table(const std::string& title, const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& body) {
    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& row : body) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s = "|";
        for (std::size_t c = 0; c < cells.size(); ++c) {
            s += " " + cells[c] + std::string(width[c] - cells[c].size(), ' ') + " |";
        }
        return s + "\n";
    };
    std::string rule = "+";
    for (auto w : width) rule += std::string(w + 2, '-') + "+";
    rule += "\n";
    std::string out = title + "\n" + rule + line(header) + rule;
    for (const auto& row : body) out += line(row);
    return out + rule;
}

}  // namespace detail

/// Plain-text tables shaped like the forecasting and explanation-quality tables.
inline std::string render_text_report(const EvalReport& report) {
    const auto models = detail::models_in(report);
    std::vector<Granularity> grans;
    for (auto g : {Granularity::Weekly, Granularity::Monthly}) {
        for (const auto& r : report.rows) {
            if (r.granularity == g) {
                grans.push_back(g);
                break;
            }
        }
    }
    auto label = [](Granularity g) { return g == Granularity::Weekly ? std::string("Weekly") : std::string("Monthly"); };

    std::vector<std::string> h1{"Model"};
    for (auto g : grans) {
        h1.push_back(label(g) + " Binary Precision");
        h1.push_back(label(g) + " Bin Precision");
        h1.push_back(label(g) + " MSE");
        h1.push_back(label(g) + " N");
    }
    std::vector<std::vector<std::string>> b1;
    for (const auto& m : models) {
        std::vector<std::string> row{model_display_name(m)};
        for (auto g : grans) {
            const auto* r = detail::find_row(report, m, g);
            row.push_back(r ? fmt::format("{:.1f}%", 100.0 * r->binary_precision) : "-");
            row.push_back(r ? fmt::format("{:.1f}%", 100.0 * r->bin_precision) : "-");
            row.push_back(r ? fmt::format("{:.1f}", r->ordinal_mse) : "-");
            row.push_back(r ? std::to_string(r->n_predictions) : "-");
        }
        b1.push_back(std::move(row));
    }
    std::string out = detail::render_table("Stock return forecasting", h1, b1);

    std::vector<std::string> h2{"Model"};
    for (auto g : grans) {
        for (const char* col : {"ROUGE-1 (S)", "ROUGE-2 (S)", "ROUGE-1 (K)", "ROUGE-2 (K)"}) {
            h2.push_back(label(g) + " " + col);
        }
    }
    std::vector<std::vector<std::string>> b2;
    for (const auto& m : models) {
        bool any = false;
        std::vector<std::string> row{model_display_name(m)};
        for (auto g : grans) {
            const auto* r = detail::find_row(report, m, g);
            for (const auto* agg : {r ? &r->rouge1_summary : nullptr, r ? &r->rouge2_summary : nullptr,
                                    r ? &r->rouge1_keywords : nullptr, r ? &r->rouge2_keywords : nullptr}) {
                if (agg && agg->has_value()) {
                    any = true;
                    row.push_back(fmt::format("{:.4f}", (*agg)->f1));
                } else {
                    row.push_back("-");
                }
            }
        }
        if (any) b2.push_back(std::move(row));
    }
    if (!b2.empty()) out += "\n" + detail::render_table("Explanation quality (ROUGE F1)", h2, b2);
    return out;
}

inline nlohmann::json to_json(const RougeAggregate& a) {
    return {{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
}

inline nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json j{{"model", r.model},
                         {"granularity", to_string(r.granularity)},
                         {"binary_precision", r.binary_precision},
                         {"bin_precision", r.bin_precision},
                         {"ordinal_mse", r.ordinal_mse},
                         {"n_predictions", r.n_predictions},
                         {"n_explained", r.n_explained}};
        if (r.rouge1_summary) j["rouge1_summary"] = to_json(*r.rouge1_summary);
        if (r.rouge2_summary) j["rouge2_summary"] = to_json(*r.rouge2_summary);
        if (r.rouge1_keywords) j["rouge1_keywords"] = to_json(*r.rouge1_keywords);
        if (r.rouge2_keywords) j["rouge2_keywords"] = to_json(*r.rouge2_keywords);
        rows.push_back(std::move(j));
    }
    return {{"format", "llmcast.eval_report"}, {"version", 1}, {"rows", rows}};
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport report;
    auto agg = [](const nlohmann::json& row, const char* key) -> std::optional<RougeAggregate> {
        if (!row.contains(key)) return std::nullopt;
        const auto& a = row.at(key);
        return RougeAggregate{a.at("precision").get<double>(), a.at("recall").get<double>(), a.at("f1").get<double>()};
    };
    try {
        for (const auto& r : j.at("rows")) {
            EvalRow row;
            row.model = r.at("model").get<std::string>();
            row.granularity = parse_granularity(r.at("granularity").get<std::string>());
            row.binary_precision = r.at("binary_precision").get<double>();
            row.bin_precision = r.at("bin_precision").get<double>();
            row.ordinal_mse = r.at("ordinal_mse").get<double>();
            row.n_predictions = r.at("n_predictions").get<std::size_t>();
            row.n_explained = r.value("n_explained", std::size_t{0});
            row.rouge1_summary = agg(r, "rouge1_summary");
            row.rouge2_summary = agg(r, "rouge2_summary");
            row.rouge1_keywords = agg(r, "rouge1_keywords");
            row.rouge2_keywords = agg(r, "rouge2_keywords");
            report.rows.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid report JSON: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("invalid report JSON: ") + e.what());
    }
    sort_rows(report.rows);
    return report;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

inline std::string render_records_csv(const std::vector<PredictionRecord>& records) {
    std::string out = "symbol,period_start,model,predicted,actual,predicted_summary,predicted_keywords,actual_summary,actual_keywords\n";
    for (const auto& r : records) {
        out += detail::csv_escape(r.symbol) + "," + format_date(r.period_start) + "," + detail::csv_escape(r.model) + "," +
               r.predicted.render() + "," + r.actual.render() + "," +
               detail::csv_escape(r.predicted_summary.value_or("")) + "," +
               detail::csv_escape(r.predicted_keywords ? render_keywords(*r.predicted_keywords) : "") + "," +
               detail::csv_escape(r.actual_summary.value_or("")) + "," +
               detail::csv_escape(r.actual_keywords ? render_keywords(*r.actual_keywords) : "") + "\n";
    }
    return out;
}

}  // namespace llmcast
