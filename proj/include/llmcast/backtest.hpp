#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmcast/artifact_store.hpp"
#include "llmcast/baselines.hpp"
#include "llmcast/eval.hpp"
#include "llmcast/finetune.hpp"
#include "llmcast/forecast_parser.hpp"
#include "llmcast/llm_client.hpp"
#include "llmcast/prompt.hpp"
#include "llmcast/report.hpp"

namespace llmcast {

inline const std::vector<std::string>& known_models() {
    static const std::vector<std::string> models{"most_frequent", "arma_garch", "gbt", "llm_zero", "llm_few", "llm_few_cot"};
    return models;
}

inline bool is_llm_model(const std::string& m) { return m.rfind("llm_", 0) == 0; }

inline PromptConfig prompt_config_for(const std::string& model, int history_periods) {
    PromptConfig c;
    c.history_periods = history_periods;
    c.few_shot = model == "llm_few" || model == "llm_few_cot";
    c.cot = model == "llm_few_cot";
    return c;
}

struct RunConfig {
    std::vector<std::string> universe;
    Date train_start = make_date(2017, 6, 12);
    Date train_end = make_date(2022, 6, 5);
    Date eval_start = make_date(2022, 6, 6);
    Date eval_end = make_date(2023, 6, 4);
    Granularity granularity = Granularity::Weekly;
    std::vector<std::string> models;
    bool garch_expanding = true;  // refit per target period on all prior returns
    GbtHyper gbt;
    FeatureConfig features;
    int history_periods = 8;
    std::string llm_model = "gpt-4";
    int max_output_tokens = 1024;
    int jobs = 1;
    double max_skip_fraction = 0.05;

    void validate() const {
        if (universe.empty()) throw UsageError("run config: empty universe");
        if (models.empty()) throw UsageError("run config: no models selected");
        for (const auto& m : models) {
            if (std::find(known_models().begin(), known_models().end(), m) == known_models().end()) {
                throw UsageError("run config: unknown model '" + m + "'");
            }
        }
        if (!(train_start <= train_end && train_end < eval_start && eval_start <= eval_end)) {
            throw UsageError("run config: windows must be ordered train_start <= train_end < eval_start <= eval_end");
        }
        if (!is_monday(eval_start)) throw UsageError("run config: eval_start must be a Monday");
        if (jobs < 1) throw UsageError("run config: jobs must be >= 1");
    }

    [[nodiscard]] PeriodCalendar calendar() const { return PeriodCalendar{eval_start, ReturnAnchor::PreviousClose}; }
};

struct SkippedTask {
    std::string symbol;
    Date period_start{};
    std::string model;
    std::string reason;
};

struct BacktestResult {
    EvalReport report;
    std::vector<PredictionRecord> records;
    std::vector<SkippedTask> skipped;
    std::size_t attempted = 0;

    [[nodiscard]] double skip_fraction() const {
        return attempted ? static_cast<double>(skipped.size()) / static_cast<double>(attempted) : 0.0;
    }
};

/// Runs fn(i) for i in [0, n) on `jobs` threads.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t w = 0; w < count; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& t : workers) t.join();
}

/// Sector vocabulary: sorted distinct non-empty sectors across the universe.
inline std::vector<std::string> sector_vocabulary(const ArtifactStore& store, const std::vector<std::string>& universe) {
    std::set<std::string> s;
    for (const auto& sym : universe) {
        if (auto it = store.meta.find(sym); it != store.meta.end() && !it->second.sector.empty()) s.insert(it->second.sector);
    }
    return {s.begin(), s.end()};
}

inline StockMeta meta_or_empty(const ArtifactStore& store, const std::string& symbol) {
    if (auto it = store.meta.find(symbol); it != store.meta.end()) return it->second;
    return StockMeta{symbol, {}, {}};
}

/// Pooled GBT over the training window: one row per (symbol, training period
/// end) whose following period also lies inside the window.
inline FeatureMatrix gbt_training_matrix(const ArtifactStore& store, const RunConfig& cfg) {
    const auto sectors = sector_vocabulary(store, cfg.universe);
    const auto cal = cfg.calendar();
    const auto g = cfg.granularity;
    FeatureMatrix all;
    all.columns = feature_columns(cfg.features, sectors);
    for (const auto& sym : cfg.universe) {
        const auto& series = store.series(sym);
        std::vector<Date> schedule;
        for (Date start : period_starts_in(cfg.train_start, cfg.train_end, g, cal)) {
            const Date as_of = start + std::chrono::days{period_days(g) - 1};
            const Date next_start = as_of + std::chrono::days{1};
            if (next_start > cfg.train_end) continue;
            if (as_of < series.points.front().date || as_of > series.points.back().date) continue;
            schedule.push_back(as_of);
        }
        auto m = build_feature_matrix(series, meta_or_empty(store, sym), cfg.features, sectors, schedule, g, cal);
        for (auto& row : m.rows) {
            if (std::isfinite(row.target)) all.rows.push_back(std::move(row));
        }
    }
    return all;
}

/// Walk-forward evaluation of every enabled model over the evaluation window.
/// Each prediction for a target period sees only data dated before it.
inline BacktestResult run_backtest(const ArtifactStore& full_store, const RunConfig& cfg, LlmClient* llm) {
    cfg.validate();
    const auto g = cfg.granularity;
    const auto scheme = BinScheme::for_granularity(g);
    const int span = g == Granularity::Weekly ? 1 : 4;
    ArtifactStore store_copy = full_store;
    store_copy.calendar = cfg.calendar();
    const ArtifactStore& store = store_copy;

    const bool any_llm = std::any_of(cfg.models.begin(), cfg.models.end(), is_llm_model);
    if (any_llm && llm == nullptr) throw UsageError("backtest: LLM models selected but no LLM client configured");

    std::vector<std::string> missing;
    for (const auto& sym : cfg.universe) {
        if (!store.prices.count(sym)) missing.push_back("prices for " + sym);
        if (any_llm && !store.profiles.count(sym)) missing.push_back("profile for " + sym);
    }
    if (!missing.empty()) {
        std::string msg = "backtest: missing artifacts:";
        for (const auto& m : missing) msg += " " + m + ";";
        throw DataError(msg);
    }

    const auto targets = period_starts_in(cfg.eval_start, cfg.eval_end, g, store.calendar);
    std::map<std::string, std::map<Date, ReturnBin>> realized;
    for (const auto& sym : cfg.universe) realized[sym] = store.realized_bins(sym, g);

    // One leak-free view per target period, shared by all symbols and models.
    std::map<Date, std::shared_ptr<const ArtifactStore>> views;
    for (Date t : targets) views[t] = std::make_shared<const ArtifactStore>(store.truncated(t));

    struct Task {
        std::string symbol;
        Date period;
        std::string model;
        ReturnBin actual;
        std::optional<ForecastPrompt> prompt;
    };
    std::vector<Task> tasks;
    std::vector<std::string> prompt_errors;
    for (const auto& model : cfg.models) {
        for (const auto& sym : cfg.universe) {
            for (Date t : targets) {
                const auto it = realized[sym].find(t);
                if (it == realized[sym].end()) continue;  // no trading in the target period
                Task task{sym, t, model, it->second, std::nullopt};
                if (is_llm_model(model)) {
                    try {
                        task.prompt = build_prompt(ForecastTask{sym, t, g}, *views[t],
                                                   prompt_config_for(model, cfg.history_periods));
                    } catch (const DataError& e) {
                        prompt_errors.push_back(e.what());
                        continue;
                    }
                }
                tasks.push_back(std::move(task));
            }
        }
    }
    if (!prompt_errors.empty()) {
        std::sort(prompt_errors.begin(), prompt_errors.end());
        prompt_errors.erase(std::unique(prompt_errors.begin(), prompt_errors.end()), prompt_errors.end());
        std::string msg = "backtest: cannot build prompts:";
        for (const auto& e : prompt_errors) msg += "\n  " + e;
        throw DataError(msg);
    }

    std::optional<GbtModel> gbt;
    std::string gbt_error;
    // Features at the day before each target; only data up to that day is used.
    std::map<std::pair<std::string, Date>, std::vector<double>> gbt_inputs;
    if (std::find(cfg.models.begin(), cfg.models.end(), "gbt") != cfg.models.end()) {
        const auto sectors = sector_vocabulary(store, cfg.universe);
        try {
            gbt = gbt_train(gbt_training_matrix(store, cfg), cfg.gbt);
            for (const auto& sym : cfg.universe) {
                const auto& series = store.series(sym);
                std::vector<Date> schedule;
                for (Date t : targets) {
                    const Date as_of = t - std::chrono::days{1};
                    if (as_of >= series.points.front().date && as_of <= series.points.back().date) schedule.push_back(as_of);
                }
                auto m = build_feature_matrix(series, meta_or_empty(store, sym), cfg.features, sectors, schedule, g,
                                              store.calendar);
                for (auto& row : m.rows) gbt_inputs[{sym, row.as_of + std::chrono::days{1}}] = std::move(row.values);
            }
        } catch (const Error& e) {
            gbt = std::nullopt;
            gbt_error = std::string("gbt failed: ") + e.what();
        }
    }

    // Non-expanding GARCH: one fit per symbol on training-window returns.
    std::map<std::string, ArmaGarchParams> garch_once;
    std::map<std::string, std::string> garch_once_error;
    if (!cfg.garch_expanding && std::find(cfg.models.begin(), cfg.models.end(), "arma_garch") != cfg.models.end()) {
        for (const auto& sym : cfg.universe) {
            std::vector<double> r;
            for (const auto& pr : store.returns(sym, g)) {
                if (pr.period_end <= cfg.train_end) r.push_back(pr.pct_change);
            }
            try {
                garch_once[sym] = arma_garch_fit(r).params;
            } catch (const Error& e) {
                garch_once_error[sym] = e.what();
            }
        }
    }

    std::vector<std::optional<PredictionRecord>> results(tasks.size());
    std::vector<std::string> reasons(tasks.size());
    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
        const auto& task = tasks[i];
        const auto& view = *views.at(task.period);
        PredictionRecord rec{task.symbol, task.period, task.model, {}, task.actual, {}, {}, {}, {}};
        try {
            if (task.model == "most_frequent") {
                std::vector<ReturnBin> history;
                for (const auto& [start, bin] : view.realized_bins(task.symbol, g)) history.push_back(bin);
                rec.predicted = most_frequent_bin(history, scheme);
            } else if (task.model == "arma_garch") {
                std::vector<double> r;
                for (const auto& pr : view.returns(task.symbol, g)) r.push_back(pr.pct_change);
                ArmaGarchParams params;
                if (cfg.garch_expanding) {
                    params = arma_garch_fit(r).params;
                } else {
                    if (auto e = garch_once_error.find(task.symbol); e != garch_once_error.end()) throw NumericalError(e->second);
                    params = garch_once.at(task.symbol);
                }
                rec.predicted = bin_return(arma_garch_forecast(params, arma_garch_filter(r, params)).mean, scheme);
            } else if (task.model == "gbt") {
                if (!gbt) throw DataError(gbt_error);
                const auto in = gbt_inputs.find({task.symbol, task.period});
                if (in == gbt_inputs.end()) throw DataError("no price data before " + format_date(task.period));
                rec.predicted = bin_return(gbt_predict(*gbt, in->second), scheme);
            } else {
                const std::string reply =
                    llm->complete(CompletionRequest{task.prompt->text, cfg.max_output_tokens, 0.0, cfg.llm_model});
                auto parsed = parse_forecast(reply, scheme);
                rec.predicted = parsed.bin;
                rec.predicted_summary = parsed.summary;
                rec.predicted_keywords = parsed.keywords;
                if (const auto* truth = store.find_digest(task.symbol, task.period, span); truth && !truth->is_na()) {
                    rec.actual_summary = truth->summary;
                    rec.actual_keywords = truth->keywords;
                }
            }
            results[i] = std::move(rec);
        } catch (const std::exception& e) {
            reasons[i] = e.what();
        }
    });

    BacktestResult out;
    out.attempted = tasks.size();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (results[i]) out.records.push_back(std::move(*results[i]));
        else out.skipped.push_back({tasks[i].symbol, tasks[i].period, tasks[i].model, reasons[i]});
    }
    std::stable_sort(out.records.begin(), out.records.end(), [](const PredictionRecord& a, const PredictionRecord& b) {
        if (a.model != b.model) return model_rank(a.model) != model_rank(b.model) ? model_rank(a.model) < model_rank(b.model) : a.model < b.model;
        if (a.symbol != b.symbol) return a.symbol < b.symbol;
        return a.period_start < b.period_start;
    });
    if (!out.records.empty()) out.report = evaluate_run(out.records, scheme, g);
    return out;
}

inline nlohmann::json to_json(const PredictionRecord& r) {
    nlohmann::json j{{"symbol", r.symbol},
                     {"period_start", format_date(r.period_start)},
                     {"model", r.model},
                     {"predicted", r.predicted.render()},
                     {"actual", r.actual.render()}};
    if (r.predicted_summary) j["predicted_summary"] = *r.predicted_summary;
    if (r.predicted_keywords) j["predicted_keywords"] = *r.predicted_keywords;
    if (r.actual_summary) j["actual_summary"] = *r.actual_summary;
    if (r.actual_keywords) j["actual_keywords"] = *r.actual_keywords;
    return j;
}

inline nlohmann::json to_json(const BacktestResult& result, Granularity g) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : result.records) records.push_back(to_json(r));
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& s : result.skipped) {
        skipped.push_back({{"symbol", s.symbol}, {"period_start", format_date(s.period_start)}, {"model", s.model},
                           {"reason", s.reason}});
    }
    return {{"format", "llmcast.backtest"},
            {"version", 1},
            {"granularity", to_string(g)},
            {"attempted", result.attempted},
            {"report", to_json(result.report)},
            {"records", records},
            {"skipped", skipped}};
}

}  // namespace llmcast
