#pragma once

#include <charconv>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "llmcast/backtest.hpp"
#include "llmcast/io.hpp"
#include "llmcast/labels.hpp"
#include "llmcast/llm_http.hpp"

namespace llmcast {

enum class LlmMode { None, Replay, Record, Live };

inline LlmMode parse_llm_mode(std::string_view s) {
    if (s == "none") return LlmMode::None;
    if (s == "replay") return LlmMode::Replay;
    if (s == "record") return LlmMode::Record;
    if (s == "live") return LlmMode::Live;
    throw UsageError("unknown llm.mode '" + std::string(s) + "' (expected none, replay, record or live)");
}

struct AppConfig {
    RunConfig run;
    LlmMode llm_mode = LlmMode::None;
    std::string replay_dir = "replay";  // relative paths resolve against the data dir
    std::string cache_dir = "cache";
    HttpClientConfig http;
    int peer_count = 3;
};

/// Splits "a, b,c" into trimmed non-empty items.
inline std::vector<std::string> split_comma_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        auto t = trim_copy(cur);
        if (!t.empty()) out.push_back(std::move(t));
        cur.clear();
    };
    for (char c : s) {
        if (c == ',') flush();
        else cur += c;
    }
    flush();
    return out;
}

namespace detail {

template <typename T>
T parse_config_number(const std::string& key, const std::string& value) {
    T v{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw UsageError("config: " + key + ": not a number: '" + value + "'");
    return v;
}

inline double parse_config_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw UsageError("config: " + key + ": not a number: '" + value + "'");
    return v;
}

inline bool parse_config_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw UsageError("config: " + key + ": expected true or false, got '" + value + "'");
}

}  // namespace detail

/// Applies one `key = value` setting. Unknown keys are rejected so typos surface.
inline void apply_setting(AppConfig& c, const std::string& key, const std::string& value) {
    using detail::parse_config_bool;
    using detail::parse_config_double;
    using detail::parse_config_number;
    auto date = [&](const std::string& v) {
        try {
            return parse_date(v);
        } catch (const DataError& e) {
            throw UsageError("config: " + key + ": " + e.what());
        }
    };
    if (key == "universe") c.run.universe = split_comma_list(value);
    else if (key == "models") c.run.models = split_comma_list(value);
    else if (key == "granularity") c.run.granularity = parse_granularity(value);
    else if (key == "train_start") c.run.train_start = date(value);
    else if (key == "train_end") c.run.train_end = date(value);
    else if (key == "eval_start") c.run.eval_start = date(value);
    else if (key == "eval_end") c.run.eval_end = date(value);
    else if (key == "garch_expanding") c.run.garch_expanding = parse_config_bool(key, value);
    else if (key == "history_periods") c.run.history_periods = parse_config_number<int>(key, value);
    else if (key == "jobs") c.run.jobs = parse_config_number<int>(key, value);
    else if (key == "max_skip_fraction") c.run.max_skip_fraction = parse_config_double(key, value);
    else if (key == "peer_count") c.peer_count = parse_config_number<int>(key, value);
    else if (key == "cache_dir") c.cache_dir = value;
    else if (key == "gbt.trees") c.run.gbt.trees = parse_config_number<int>(key, value);
    else if (key == "gbt.depth") c.run.gbt.depth = parse_config_number<int>(key, value);
    else if (key == "gbt.learning_rate") c.run.gbt.learning_rate = parse_config_double(key, value);
    else if (key == "gbt.min_leaf") c.run.gbt.min_leaf = parse_config_number<int>(key, value);
    else if (key == "gbt.subsample") c.run.gbt.subsample = parse_config_double(key, value);
    else if (key == "gbt.seed") c.run.gbt.seed = parse_config_number<std::uint64_t>(key, value);
    else if (key == "llm.mode") c.llm_mode = parse_llm_mode(value);
    else if (key == "llm.replay_dir") c.replay_dir = value;
    else if (key == "llm.model") c.run.llm_model = c.http.model = value;
    else if (key == "llm.endpoint") c.http.endpoint = value;
    else if (key == "llm.rpm") c.http.rpm = parse_config_double(key, value);
    else if (key == "llm.timeout_seconds") c.http.timeout_seconds = parse_config_number<int>(key, value);
    else if (key == "llm.max_tries") c.http.max_tries = parse_config_number<int>(key, value);
    else if (key == "llm.api_key_env") c.http.api_key_env = value;
    else if (key == "llm.max_output_tokens") c.run.max_output_tokens = parse_config_number<int>(key, value);
    else if (key == "llm.api_key" || key == "api_key") {
        throw UsageError("config: API keys are read from the environment only; set llm.api_key_env instead");
    } else throw UsageError("config: unknown key '" + key + "'");
}

/// `key = value` lines; '#' starts a comment; blank lines are ignored.
inline AppConfig parse_config(std::string_view text, AppConfig base = {}) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto t = trim_copy(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        apply_setting(base, trim_copy(t.substr(0, eq)), trim_copy(t.substr(eq + 1)));
    }
    return base;
}

inline AppConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
    return parse_config(read_file(path));
}

}  // namespace llmcast
