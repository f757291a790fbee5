#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmcast/date.hpp"
#include "llmcast/io.hpp"
#include "llmcast/labels.hpp"
#include "llmcast/llm_client.hpp"

namespace llmcast {

inline constexpr std::string_view kMacroScope = "MACRO";
inline constexpr std::string_view kNotAvailable = "N/A";

struct NewsArticle {
    std::string scope;  // ticker or "MACRO"
    Date week_start{};
    std::string url;
    std::string raw_text;
};

inline NewsArticle article_from_json(const nlohmann::json& j) {
    NewsArticle a;
    try {
        a.scope = j.at("symbol").get<std::string>();
        a.week_start = parse_date(j.at("week_start").get<std::string>());
        a.url = j.value("url", std::string{});
        a.raw_text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid article: ") + e.what());
    }
    if (a.raw_text.empty()) throw DataError("article " + a.url + ": empty text");
    if (!is_monday(a.week_start)) throw DataError("article " + a.url + ": week_start is not a Monday");
    return a;
}

inline nlohmann::json to_json(const NewsArticle& a) {
    return {{"symbol", a.scope}, {"week_start", format_date(a.week_start)}, {"url", a.url}, {"text", a.raw_text}};
}

/// Summary + keywords for one scope and period. A digest whose summary is
/// "N/A" with no keywords is the not-available sentinel.
struct NewsDigest {
    std::string scope;
    Date week_start{};  // first Monday of the covered period
    int span_weeks = 1;  // 1 for weekly digests, 4 for monthly
    std::string summary;
    std::vector<std::string> keywords;
    bool is_meta = false;
    std::string source_hash;  // request hash that produced it

    [[nodiscard]] bool is_na() const { return summary == kNotAvailable && keywords.empty(); }
    [[nodiscard]] bool is_macro() const { return scope == kMacroScope; }

    friend bool operator==(const NewsDigest&, const NewsDigest&) = default;
};

inline nlohmann::json to_json(const NewsDigest& d) {
    return {{"scope", d.scope},       {"week_start", format_date(d.week_start)}, {"span_weeks", d.span_weeks},
            {"summary", d.summary},   {"keywords", d.keywords},                  {"is_meta", d.is_meta},
            {"source_hash", d.source_hash}};
}

inline NewsDigest digest_from_json(const nlohmann::json& j) {
    try {
        return {j.at("scope").get<std::string>(),
                parse_date(j.at("week_start").get<std::string>()),
                j.value("span_weeks", 1),
                j.at("summary").get<std::string>(),
                j.at("keywords").get<std::vector<std::string>>(),
                j.value("is_meta", false),
                j.value("source_hash", std::string{})};
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid digest: ") + e.what());
    }
}

inline std::string render_keywords(const std::vector<std::string>& keywords) {
    std::string out;
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (i) out += ", ";
        out += keywords[i];
    }
    return out;
}

struct CompanyProfile {
    std::string symbol;
    std::string description;
    std::vector<std::string> positive_factors;
    std::vector<std::string> negative_factors;
    std::string source_hash;

    friend bool operator==(const CompanyProfile&, const CompanyProfile&) = default;
};

inline nlohmann::json to_json(const CompanyProfile& p) {
    return {{"symbol", p.symbol},
            {"description", p.description},
            {"positive_factors", p.positive_factors},
            {"negative_factors", p.negative_factors},
            {"source_hash", p.source_hash}};
}

inline CompanyProfile profile_from_json(const nlohmann::json& j) {
    try {
        CompanyProfile p{j.at("symbol").get<std::string>(), j.at("description").get<std::string>(),
                         j.at("positive_factors").get<std::vector<std::string>>(),
                         j.at("negative_factors").get<std::vector<std::string>>(), j.value("source_hash", std::string{})};
        if (p.positive_factors.empty() || p.negative_factors.empty()) {
            throw DataError("profile " + p.symbol + ": factor lists must be nonempty");
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid profile: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

namespace templates {

inline std::string article_summary(const std::string& scope, const std::string& news) {
    const std::string subject = scope == kMacroScope ? std::string("the macro economy and finance status")
                                                     : scope + " stock";
    return "Please summarize the following noisy but possible news data extracted from web page HTML, and extract "
           "keywords of the news. The news text can be very noisy due to it is HTML extraction. Give formatted answer "
           "such as Summary: ..., Keywords: ... The news is supposed to be for " +
           subject +
           ". You may put 'N/A' if the noisy text does not have relevant information to extract.\n\nNews: " + news;
}

inline std::string meta_summary(const std::string& scope, const std::vector<NewsDigest>& digests, int span_weeks) {
    const std::string subject = scope == kMacroScope ? std::string("the macro economy and finance status")
                                                     : scope + " stock";
    std::string out = "Please condense the following news summaries and keywords of the " +
                      std::string(span_weeks == 1 ? "week" : "month") +
                      " into one meta summary and keywords. The news is supposed to be for " + subject +
                      ". Keep the most important facts and be concise. Give formatted answer such as Summary: ..., "
                      "Keywords: ...\n";
    for (std::size_t i = 0; i < digests.size(); ++i) {
        out += "\nNews " + std::to_string(i + 1) + ":\nSummary: " + digests[i].summary +
               "\nKeywords: " + render_keywords(digests[i].keywords) + "\n";
    }
    return out;
}

inline std::string company_profile(const std::string& symbol) {
    return "Generate a short description for stock " + symbol +
           "'s company. Also list general positive and negative factors that might impact the stock price; be brief "
           "and use keywords. Consider diverse general factors, such as macro economic situation (e.g. inflation, CPI "
           "growth), business factors (e.g. sales, investment, products), technology factors (e.g. innovation), and "
           "others. Use format Description: ..., Positive Factors: ..., Negative factors: ...";
}

inline std::string similar_stocks(const std::string& symbol, int k) {
    return "List the top " + std::to_string(k) + " NASDAQ stocks most similar to " + symbol;
}

}  // namespace templates

// ---------------------------------------------------------------------------
// Reply parsers
// ---------------------------------------------------------------------------

struct SummaryKeywords {
    std::string summary;
    std::vector<std::string> keywords;
    bool not_available = false;
};

inline bool is_na_text(std::string_view s) {
    auto t = detail::lower(trim_copy(s, " \t\r\n.*_,;'\""));
    return t == "n/a" || t == "na";
}

inline constexpr std::size_t kMaxSummaryWords = 300;

inline std::string clip_words(const std::string& text, std::size_t max_words) {
    if (word_count(text) <= max_words) return text;
    std::size_t words = 0;
    bool in_word = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (!space && !in_word && ++words > max_words) return trim_copy(text.substr(0, i));
        in_word = !space;
    }
    return text;
}

/// Parses "Summary: ..., Keywords: ..." (or the N/A sentinel).
inline SummaryKeywords parse_summary_keywords(const std::string& reply) {
    const auto fields = extract_fields(reply, {"Summary", "Keywords"});
    if (!fields.missing.empty()) {
        throw ParseError(ParseError::Kind::MissingLabel, "reply lacks '" + fields.missing.front() + ":' label", reply);
    }
    const auto& summary = fields.values.at("Summary");
    const auto& keywords = fields.values.at("Keywords");
    if (is_na_text(summary)) return {std::string(kNotAvailable), {}, true};
    SummaryKeywords out{clip_words(summary, kMaxSummaryWords), split_list(keywords), false};
    if (out.summary.empty()) throw ParseError(ParseError::Kind::EmptyField, "empty Summary field", reply);
    if (out.keywords.empty() || is_na_text(keywords)) {
        throw ParseError(ParseError::Kind::EmptyField, "empty Keywords field", reply);
    }
    return out;
}

inline std::vector<std::string> split_lines_items(std::string_view field) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= field.size()) {
        auto end = field.find('\n', start);
        if (end == std::string_view::npos) end = field.size();
        auto item = trim_copy(field.substr(start, end - start), " \t\r-*•_");
        if (!item.empty()) items.push_back(std::move(item));
        start = end + 1;
    }
    return items;
}

inline CompanyProfile parse_profile(const std::string& symbol, const std::string& reply) {
    const auto fields = extract_fields(reply, {"Description", "Positive Factors", "Negative Factors"});
    if (!fields.missing.empty()) {
        throw ParseError(ParseError::Kind::MissingLabel, "profile reply lacks '" + fields.missing.front() + ":'", reply);
    }
    CompanyProfile p{symbol, fields.values.at("Description"), split_lines_items(fields.values.at("Positive Factors")),
                     split_lines_items(fields.values.at("Negative Factors")), {}};
    if (p.description.empty()) throw ParseError(ParseError::Kind::EmptyField, "empty Description", reply);
    if (p.positive_factors.empty()) throw ParseError(ParseError::Kind::EmptyField, "empty Positive Factors", reply);
    if (p.negative_factors.empty()) throw ParseError(ParseError::Kind::EmptyField, "empty Negative Factors", reply);
    return p;
}

/// Ticker tokens in reply order, restricted to `universe`, without `self` or duplicates.
inline std::vector<std::string> parse_tickers(const std::string& reply, const std::set<std::string>& universe,
                                              const std::string& self) {
    std::vector<std::string> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty() && token != self && universe.count(token) &&
            std::find(out.begin(), out.end(), token) == out.end()) {
            out.push_back(token);
        }
        token.clear();
    };
    for (char c : reply) {
        if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.') token += c;
        else flush();
    }
    flush();
    for (auto& t : out) {
        while (!t.empty() && t.back() == '.') t.pop_back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Content-addressed artifact cache
// ---------------------------------------------------------------------------

/// Entries keyed by SHA-256 of (template id, resolved prompt, model); stored as
/// one-line JSONL files under <dir>/<hash[0:2]>/<hash>.jsonl.
class ArtifactCache {
  public:
    explicit ArtifactCache(fs::path dir) : dir_(std::move(dir)) {}

    static std::string key(std::string_view template_id, std::string_view prompt, std::string_view model) {
        nlohmann::json k{{"model", model}, {"prompt", prompt}, {"template", template_id}};
        return sha256_hex(k.dump());
    }

    [[nodiscard]] fs::path path_for(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".jsonl"); }

    std::optional<nlohmann::json> get(const std::string& key) const {
        const auto path = path_for(key);
        std::error_code ec;
        if (!fs::exists(path, ec)) return std::nullopt;
        try {
            return nlohmann::json::parse(read_file(path)).at("artifact");
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corrupt cache entry " + path.string() + ": " + e.what());
        }
    }

    void put(const std::string& key, std::string_view template_id, const nlohmann::json& artifact) const {
        const nlohmann::json entry{{"key", key}, {"template", template_id}, {"artifact", artifact}};
        write_file_atomic(path_for(key), entry.dump() + "\n");
    }

  private:
    fs::path dir_;
};

struct NewsPipelineConfig {
    std::string model = "gpt-4";
    std::size_t max_article_chars = 20000;
    int max_attempts = 3;  // first try + 2 retries on unparseable replies
    int max_output_tokens = 1024;
};

/// LLM-backed producers of digests, profiles and peer lists. Every call is
/// cached; unchanged inputs are served without contacting the LLM.
class NewsPipeline {
  public:
    NewsPipeline(LlmClient& llm, ArtifactCache cache, std::set<std::string> universe, NewsPipelineConfig config = {})
        : llm_(llm), cache_(std::move(cache)), universe_(std::move(universe)), config_(std::move(config)) {}

    [[nodiscard]] int llm_calls() const { return llm_calls_; }
    [[nodiscard]] int cache_hits() const { return cache_hits_; }

    NewsDigest summarize_article(const NewsArticle& article) {
        std::string text = article.raw_text;
        if (text.size() > config_.max_article_chars) {
            text.resize(config_.max_article_chars);
            text += "\n[truncated]";
        }
        const std::string prompt = templates::article_summary(article.scope, text);
        auto [parsed, hash] = run<SummaryKeywords>("article_summary/v1", prompt, parse_summary_keywords,
                                                   digest_artifact, digest_from_artifact);
        return NewsDigest{article.scope, article.week_start, 1, parsed.summary, parsed.keywords, false, hash};
    }

    /// Condenses one scope/period's digests. N/A digests are dropped; at least one must remain.
    NewsDigest meta_summarize(const std::vector<NewsDigest>& digests, Date period_start, int span_weeks = 1) {
        std::vector<NewsDigest> usable;
        for (const auto& d : digests) {
            if (!d.is_na()) usable.push_back(d);
        }
        if (usable.empty()) throw PreconditionError("meta_summarize: no usable digests");
        const std::string& scope = usable.front().scope;
        for (const auto& d : usable) {
            if (d.scope != scope) throw PreconditionError("meta_summarize: digests span several scopes");
        }
        const std::string prompt = templates::meta_summary(scope, usable, span_weeks);
        auto [parsed, hash] = run<SummaryKeywords>("meta_summary/v1", prompt, parse_summary_keywords, digest_artifact,
                                                   digest_from_artifact);
        return NewsDigest{scope, period_start, span_weeks, parsed.summary, parsed.keywords, true, hash};
    }

    CompanyProfile generate_profile(const std::string& symbol) {
        if (!universe_.count(symbol)) throw PreconditionError("generate_profile: " + symbol + " not in universe");
        auto parse = [&](const std::string& reply) { return parse_profile(symbol, reply); };
        auto [profile, hash] = run<CompanyProfile>(
            "company_profile/v1", templates::company_profile(symbol), parse,
            [](const CompanyProfile& p) { return to_json(p); }, profile_from_json);
        profile.source_hash = hash;
        return profile;
    }

    std::vector<std::string> similar_stocks(const std::string& symbol, int k = 3) {
        if (k < 1) throw PreconditionError("similar_stocks: k must be >= 1");
        auto parse = [&](const std::string& reply) {
            auto tickers = parse_tickers(reply, universe_, symbol);
            if (tickers.empty()) throw ParseError(ParseError::Kind::Unparseable, "no known tickers in reply", reply);
            return tickers;
        };
        auto [tickers, hash] = run<std::vector<std::string>>(
            "similar_stocks/v1", templates::similar_stocks(symbol, k), parse,
            [](const std::vector<std::string>& t) { return nlohmann::json(t); },
            [](const nlohmann::json& j) { return j.get<std::vector<std::string>>(); });
        return tickers;
    }

  private:
    static nlohmann::json digest_artifact(const SummaryKeywords& s) {
        return {{"summary", s.summary}, {"keywords", s.keywords}, {"na", s.not_available}};
    }
    static SummaryKeywords digest_from_artifact(const nlohmann::json& j) {
        return {j.at("summary").get<std::string>(), j.at("keywords").get<std::vector<std::string>>(),
                j.at("na").get<bool>()};
    }

    template <typename T, typename Parse, typename ToJson, typename FromJson>
    std::pair<T, std::string> run(std::string_view template_id, const std::string& prompt, Parse parse, ToJson to_artifact,
                                  FromJson from_artifact) {
        const CompletionRequest request{prompt, config_.max_output_tokens, 0.0, config_.model};
        const std::string hash = request_hash(request);
        const std::string key = ArtifactCache::key(template_id, prompt, config_.model);
        if (auto hit = cache_.get(key)) {
            ++cache_hits_;
            return {from_artifact(*hit), hash};
        }
        std::optional<ParseError> last;
        for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
            ++llm_calls_;
            const std::string reply = llm_.complete(request);
            try {
                T value = parse(reply);
                cache_.put(key, template_id, to_artifact(value));
                return {std::move(value), hash};
            } catch (const ParseError& e) {
                last = e;
            }
        }
        throw *last;
    }

    LlmClient& llm_;
    ArtifactCache cache_;
    std::set<std::string> universe_;
    NewsPipelineConfig config_;
    std::atomic<int> llm_calls_{0};
    std::atomic<int> cache_hits_{0};
};

}  // namespace llmcast
