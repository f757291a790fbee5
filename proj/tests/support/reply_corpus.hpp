#pragma once

// The reply fixture corpus under fixtures/replies, described by manifest.json.

#include <optional>
#include <string>
#include <vector>

#include "llmcast/forecast_parser.hpp"
#include "llmcast/io.hpp"

namespace llmcast::synth {

struct ReplyCase {
    std::string file;
    BinScheme scheme;
    std::string text;
    // valid replies
    std::string bin;
    std::size_t keywords = 0;
    bool reasoning = false;
    std::string summary_prefix;
    // malformed replies
    std::optional<std::string> error;
};

inline std::vector<ReplyCase> load_reply_corpus(const fs::path& dir) {
    std::vector<ReplyCase> out;
    for (const auto& j : nlohmann::json::parse(read_file(dir / "manifest.json"))) {
        ReplyCase c;
        c.file = j.at("file").get<std::string>();
        c.scheme = j.at("scheme") == "monthly" ? BinScheme::monthly() : BinScheme::weekly();
        c.text = read_file(dir / c.file);
        if (j.contains("error")) {
            c.error = j.at("error").get<std::string>();
        } else {
            c.bin = j.at("bin").get<std::string>();
            c.keywords = j.at("keywords").get<std::size_t>();
            c.reasoning = j.at("reasoning").get<bool>();
            c.summary_prefix = j.value("summary_prefix", "");
        }
        out.push_back(std::move(c));
    }
    return out;
}

/// Empty string when the case behaves as the manifest says, else a description.
inline std::string check_reply_case(const ReplyCase& c) {
    try {
        const auto r = parse_forecast(c.text, c.scheme);
        if (c.error) return c.file + ": parsed as " + r.bin.render() + " but expected " + *c.error;
        if (r.bin.render() != c.bin) return c.file + ": bin " + r.bin.render() + " != " + c.bin;
        if (r.keywords.size() != c.keywords) {
            return c.file + ": " + std::to_string(r.keywords.size()) + " keywords, expected " + std::to_string(c.keywords);
        }
        if (r.reasoning.has_value() != c.reasoning) return c.file + ": reasoning presence mismatch";
        if (r.summary.rfind(c.summary_prefix, 0) != 0) return c.file + ": summary starts '" + r.summary.substr(0, 40) + "'";
        return {};
    } catch (const ParseError& e) {
        if (c.error && *c.error == to_string(e.kind())) return {};
        return c.file + ": ParseError " + to_string(e.kind()) + " (" + e.what() + ")";
    }
}

}  // namespace llmcast::synth
