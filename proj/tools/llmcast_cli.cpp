// llmcast command line: ingest data, build LLM artifacts, run backtests, export fine-tuning data.

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "llmcast/llmcast.hpp"

using namespace llmcast;

namespace {

struct Options {
    std::string data_dir = "data";
    std::string config_path;
    std::vector<std::string> set;  // ad-hoc key=value overrides
};

AppConfig resolve_config(const Options& o) {
    AppConfig c;
    if (!o.config_path.empty()) c = load_config(o.config_path);
    for (const auto& kv : o.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        apply_setting(c, trim_copy(kv.substr(0, eq)), trim_copy(kv.substr(eq + 1)));
    }
    return c;
}

fs::path under(const Options& o, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(o.data_dir) / path;
}

/// Owns whichever LLM client stack the config asks for.
struct LlmStack {
    std::unique_ptr<HttpLlmClient> http;
    std::unique_ptr<LlmClient> front;

    LlmClient* get() { return front ? front.get() : http.get(); }
};

LlmStack make_llm(const AppConfig& c, const Options& o) {
    LlmStack s;
    switch (c.llm_mode) {
        case LlmMode::None:
            break;
        case LlmMode::Replay:
            s.front = std::make_unique<ReplayClient>(ReplayStore(under(o, c.replay_dir)));
            break;
        case LlmMode::Record:
            s.http = std::make_unique<HttpLlmClient>(c.http);
            s.front = std::make_unique<RecordingClient>(ReplayStore(under(o, c.replay_dir)), *s.http);
            break;
        case LlmMode::Live:
            s.http = std::make_unique<HttpLlmClient>(c.http);
            break;
    }
    return s;
}

LlmClient& require_llm(LlmStack& s, const char* command) {
    if (s.get() == nullptr) throw UsageError(std::string(command) + " needs an LLM: set llm.mode to replay, record or live");
    return *s.get();
}

std::string write_jsonl_rows(const std::vector<nlohmann::json>& rows) { return to_jsonl(rows); }

/// SHA-256 of each input file, on stderr, so a result can be traced to its inputs.
void log_provenance(const std::string& what, const std::vector<fs::path>& files) {
    for (const auto& f : files) {
        if (fs::is_regular_file(f)) std::cerr << what << " input " << f.string() << " sha256=" << sha256_hex(read_file(f)) << "\n";
    }
}

std::vector<fs::path> store_files(const Options& o) {
    const fs::path d(o.data_dir);
    return {d / "prices.csv", d / "digests.jsonl", d / "profiles.jsonl", d / "peers.jsonl"};
}

void log_written(const fs::path& f) { std::cerr << "wrote " << f.string() << " sha256=" << sha256_hex(read_file(f)) << "\n"; }

int cmd_ingest(const Options& o, const std::vector<std::string>& inputs) {
    if (inputs.empty()) throw UsageError("ingest-prices: no input files");
    const fs::path target = fs::path(o.data_dir) / "prices.csv";
    std::map<std::string, PriceSeries> merged;
    if (fs::exists(target)) {
        std::ifstream in(target);
        for (auto& s : load_prices(in)) merged.emplace(s.symbol, std::move(s));
    }
    std::size_t added = 0;
    for (const auto& file : inputs) {
        std::ifstream in(file);
        if (!in) throw DataError("cannot open " + file);
        for (auto& s : load_prices(in)) {
            auto& dst = merged[s.symbol];
            dst.symbol = s.symbol;
            std::map<Date, PricePoint> by_date;
            for (const auto& p : dst.points) by_date.emplace(p.date, p);
            for (const auto& p : s.points) {
                const auto [it, inserted] = by_date.emplace(p.date, p);
                if (!inserted && !(it->second == p)) {
                    throw DataError(file + ": conflicting row for " + s.symbol + " on " + format_date(p.date));
                }
                added += inserted ? 1 : 0;
            }
            dst.points.clear();
            for (const auto& [d, p] : by_date) dst.points.push_back(p);
        }
    }
    std::vector<PriceSeries> out;
    for (auto& [sym, s] : merged) out.push_back(std::move(s));
    std::ostringstream csv;
    write_prices(csv, out);
    fs::create_directories(o.data_dir);
    write_file_atomic(target, csv.str());
    log_provenance("ingest-prices", std::vector<fs::path>(inputs.begin(), inputs.end()));
    log_written(target);
    std::cout << "ingested " << added << " new rows; " << out.size() << " symbols in " << target.string() << "\n";
    return 0;
}

int cmd_digest(const Options& o, const std::string& articles_path, bool monthly) {
    auto cfg = resolve_config(o);
    auto llm = make_llm(cfg, o);
    auto& client = require_llm(llm, "digest-news");
    std::vector<NewsArticle> articles;
    for (const auto& j : read_jsonl_file(articles_path)) articles.push_back(article_from_json(j));
    std::set<std::string> universe(cfg.run.universe.begin(), cfg.run.universe.end());
    NewsPipeline pipeline(client, ArtifactCache(under(o, cfg.cache_dir)), universe,
                          NewsPipelineConfig{cfg.run.llm_model, 20000, 3, cfg.run.max_output_tokens});
    const auto run = digest_news(articles, pipeline, cfg.run.calendar(), monthly);

    // Merge with existing digests; new ones replace old ones with the same key.
    std::map<std::tuple<std::string, Date, int, bool>, NewsDigest> all;
    const fs::path target = fs::path(o.data_dir) / "digests.jsonl";
    if (fs::exists(target)) {
        for (const auto& j : read_jsonl_file(target)) {
            auto d = digest_from_json(j);
            all[{d.scope, d.week_start, d.span_weeks, d.is_meta}] = d;
        }
    }
    for (const auto& d : run.meta_digests) all[{d.scope, d.week_start, d.span_weeks, true}] = d;
    std::vector<nlohmann::json> rows;
    for (const auto& [k, d] : all) rows.push_back(to_json(d));
    fs::create_directories(o.data_dir);
    write_file_atomic(target, write_jsonl_rows(rows));

    std::vector<nlohmann::json> article_rows;
    for (const auto& d : run.article_digests) article_rows.push_back(to_json(d));
    write_file_atomic(fs::path(o.data_dir) / "article_digests.jsonl", write_jsonl_rows(article_rows));
    log_provenance("digest-news", {fs::path(articles_path)});
    log_written(target);
    std::cout << "digested " << articles.size() << " articles (" << run.na_articles << " without useful content), "
              << run.meta_digests.size() << " meta digests; llm calls " << pipeline.llm_calls() << ", cache hits "
              << pipeline.cache_hits() << "\n";
    return 0;
}

int cmd_profiles(const Options& o) {
    auto cfg = resolve_config(o);
    if (cfg.run.universe.empty()) throw UsageError("build-profiles: empty universe");
    auto llm = make_llm(cfg, o);
    auto& client = require_llm(llm, "build-profiles");
    std::set<std::string> universe(cfg.run.universe.begin(), cfg.run.universe.end());
    NewsPipeline pipeline(client, ArtifactCache(under(o, cfg.cache_dir)), universe,
                          NewsPipelineConfig{cfg.run.llm_model, 20000, 3, cfg.run.max_output_tokens});
    const auto run = build_profiles(cfg.run.universe, pipeline, cfg.peer_count);
    std::vector<nlohmann::json> profiles, peers;
    for (const auto& p : run.profiles) profiles.push_back(to_json(p));
    for (const auto& [sym, list] : run.peers) peers.push_back({{"symbol", sym}, {"peers", list}});
    fs::create_directories(o.data_dir);
    write_file_atomic(fs::path(o.data_dir) / "profiles.jsonl", write_jsonl_rows(profiles));
    write_file_atomic(fs::path(o.data_dir) / "peers.jsonl", write_jsonl_rows(peers));
    log_written(fs::path(o.data_dir) / "profiles.jsonl");
    log_written(fs::path(o.data_dir) / "peers.jsonl");
    std::cout << "profiles for " << run.profiles.size() << " symbols; llm calls " << pipeline.llm_calls()
              << ", cache hits " << pipeline.cache_hits() << "\n";
    return 0;
}

int cmd_backtest(const Options& o, const std::string& out_dir) {
    auto cfg = resolve_config(o);
    if (cfg.run.models.empty()) throw UsageError("backtest: no models selected (set models = ...)");
    auto llm = make_llm(cfg, o);
    const auto weeks = days_between(cfg.run.eval_start, cfg.run.eval_end + std::chrono::days{1}) / 7;
    if (weeks != 52) std::cerr << "note: evaluation window spans " << weeks << " weeks, not the standard 52\n";
    log_provenance("backtest", store_files(o));
    const auto store = ArtifactStore::load(o.data_dir, cfg.run.calendar());
    const auto result = run_backtest(store, cfg.run, llm.get());
    const fs::path out = out_dir.empty() ? fs::path(o.data_dir) / "results" : fs::path(out_dir);
    fs::create_directories(out);
    const auto text = result.records.empty() ? std::string("no predictions\n") : render_text_report(result.report);
    write_file_atomic(out / "report.txt", text);
    write_file_atomic(out / "report.json", to_json(result.report).dump(2) + "\n");
    write_file_atomic(out / "backtest.json", to_json(result, cfg.run.granularity).dump(2) + "\n");
    write_file_atomic(out / "records.csv", render_records_csv(result.records));
    for (const char* f : {"report.json", "backtest.json"}) log_written(out / f);
    std::cout << text;
    std::cout << result.records.size() << " predictions, " << result.skipped.size() << " skipped of "
              << result.attempted << "\n";
    for (const auto& s : result.skipped) {
        std::cerr << "skipped " << s.model << " " << s.symbol << " " << format_date(s.period_start) << ": " << s.reason
                  << "\n";
    }
    if (result.skip_fraction() > cfg.run.max_skip_fraction) {
        std::cerr << "error: " << result.skipped.size() << " of " << result.attempted
                  << " tasks skipped, above the allowed fraction " << cfg.run.max_skip_fraction << "\n";
        return 1;
    }
    return 0;
}

int cmd_finetune(const Options& o, const std::string& out_path, bool few_shot, bool cot) {
    auto cfg = resolve_config(o);
    auto llm = make_llm(cfg, o);
    auto& client = require_llm(llm, "finetune-export");
    log_provenance("finetune-export", store_files(o));
    const auto store = ArtifactStore::load(o.data_dir, cfg.run.calendar());
    PromptConfig pc;
    pc.history_periods = cfg.run.history_periods;
    pc.few_shot = few_shot;
    pc.cot = cot;
    CompressionOptions co;
    co.model = cfg.run.llm_model;
    const auto run = build_finetune_examples(store, cfg.run, pc, client, co);
    const fs::path target = out_path.empty() ? fs::path(o.data_dir) / "finetune.jsonl" : fs::path(out_path);
    std::ostringstream buf;
    const auto n = export_finetune_dataset(run.examples, buf);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_file_atomic(target, buf.str());
    log_written(target);
    std::cout << "exported " << n << " examples to " << target.string() << "; skipped " << run.skipped.size() << "\n";
    for (const auto& s : run.skipped) {
        std::cerr << "skipped " << s.symbol << " " << format_date(s.period_start) << ": " << s.reason << "\n";
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format) {
    if (inputs.empty()) throw UsageError("report: no input files");
    std::vector<EvalReport> reports;
    for (const auto& f : inputs) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(f));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(f + ": " + e.what());
        }
        // Accept either a report or a full backtest result.
        reports.push_back(eval_report_from_json(j.contains("report") ? j.at("report") : j));
    }
    log_provenance("report", std::vector<fs::path>(inputs.begin(), inputs.end()));
    const auto merged = merge_reports(reports);
    if (format == "json") std::cout << to_json(merged).dump(2) << "\n";
    else std::cout << render_text_report(merged);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"llmcast: news-driven stock return forecasting backtests"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes: 0 success; 1 data error (bad or missing inputs, replay miss, unparseable replies, or more than\n"
        "max_skip_fraction (default 0.05) of backtest tasks skipped); 2 usage error (bad flags or config); 3 transport\n"
        "error (LLM endpoint unreachable or still failing after retries).\n"
        "The LLM API key is read only from the environment variable named by llm.api_key_env (default OPENAI_API_KEY).");
    Options o;
    app.add_option("--data-dir", o.data_dir, "Directory holding prices, metadata and artifacts")->capture_default_str();
    app.add_option("--config", o.config_path, "key = value config file");
    app.add_option("--set", o.set, "Override a config key (key=value); repeatable");

    std::vector<std::string> price_inputs;
    auto* ingest = app.add_subcommand("ingest-prices", "Validate price CSVs and merge them into the data dir");
    ingest->add_option("inputs", price_inputs, "CSV files with header date,symbol,open,high,low,close,volume")->required();

    std::string articles;
    bool weekly_only = false;
    auto* digest = app.add_subcommand("digest-news", "Summarize articles into weekly and 4-week digests");
    digest->add_option("--articles", articles, "JSONL of {symbol, week_start, url, text}")->required();
    digest->add_flag("--weekly-only", weekly_only, "Skip 4-week block digests");

    app.add_subcommand("build-profiles", "Generate company profiles and peer lists for the universe");

    std::string out_dir;
    std::string granularity;
    std::string models;
    auto* backtest = app.add_subcommand("backtest", "Walk-forward evaluation of the configured models");
    backtest->add_option("--out", out_dir, "Output directory (default <data-dir>/results)");
    backtest->add_option("--granularity", granularity, "weekly or monthly (overrides config)");
    backtest->add_option("--models", models, "Comma-separated model ids (overrides config)");

    std::string ft_out;
    bool ft_few = false, ft_cot = false;
    auto* finetune = app.add_subcommand("finetune-export", "Write instruction/response JSONL over the training window");
    finetune->add_option("--out", ft_out, "Output file (default <data-dir>/finetune.jsonl)");
    finetune->add_flag("--few-shot", ft_few, "Include similar-stock examples in instructions");
    finetune->add_flag("--cot", ft_cot, "Append the step-by-step request");

    std::vector<std::string> report_inputs;
    std::string report_format = "text";
    auto* report = app.add_subcommand("report", "Render and merge saved evaluation reports");
    report->add_option("inputs", report_inputs, "report.json or backtest.json files")->required();
    report->add_option("--format", report_format, "text or json")->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return cmd_ingest(o, price_inputs);
        if (*digest) return cmd_digest(o, articles, !weekly_only);
        if (app.got_subcommand("build-profiles")) return cmd_profiles(o);
        if (*backtest) {
            if (!granularity.empty()) o.set.push_back("granularity=" + granularity);
            if (backtest->count("--models")) o.set.push_back("models=" + models);
            return cmd_backtest(o, out_dir);
        }
        if (*finetune) return cmd_finetune(o, ft_out, ft_few, ft_cot);
        if (*report) return cmd_report(report_inputs, report_format);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
