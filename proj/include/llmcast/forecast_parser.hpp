#pragma once

#include <optional>
#include <string>
#include <vector>

#include "llmcast/labels.hpp"
#include "llmcast/market_data.hpp"

namespace llmcast {

struct ForecastResult {
    std::string summary;
    std::vector<std::string> keywords;
    ReturnBin bin;
    std::optional<std::string> reasoning;  // text before the final labelled block
    std::string raw;
};

/// First token of the form [DU]<digits>[+] that stands alone (not embedded in a word).
inline std::optional<std::string> find_bin_token(std::string_view field) {
    for (std::size_t i = 0; i < field.size(); ++i) {
        const char c = field[i];
        if (c != 'U' && c != 'D') continue;
        if (i > 0 && detail::is_alnum(field[i - 1])) continue;
        std::size_t j = i + 1;
        while (j < field.size() && field[j] >= '0' && field[j] <= '9') ++j;
        if (j == i + 1) continue;
        if (j < field.size() && field[j] == '+') ++j;
        if (j < field.size() && detail::is_alnum(field[j])) continue;
        return std::string(field.substr(i, j - i));
    }
    return std::nullopt;
}

/// Parses a "Summary: ... Keywords: ... Stock Return: <bin>" reply. Labels are
/// taken at their last occurrence, so chain-of-thought preambles that restate
/// them are fine; the preamble is kept as `reasoning`.
inline ForecastResult parse_forecast(const std::string& reply, const BinScheme& scheme) {
    if (trim_copy(reply).empty()) throw ParseError(ParseError::Kind::Unparseable, "empty reply", reply);
    const auto fields = extract_fields(reply, {"Summary", "Keywords", "Stock Return"});
    if (!fields.missing.empty()) {
        throw ParseError(ParseError::Kind::MissingLabel, "reply lacks '" + fields.missing.front() + ":' label", reply);
    }
    ForecastResult out;
    out.raw = reply;
    out.summary = fields.values.at("Summary");
    out.keywords = split_list(fields.values.at("Keywords"));
    if (out.summary.empty()) throw ParseError(ParseError::Kind::EmptyField, "empty Summary field", reply);
    if (out.keywords.empty()) throw ParseError(ParseError::Kind::EmptyField, "empty Keywords field", reply);

    const auto& ret = fields.values.at("Stock Return");
    const auto token = find_bin_token(ret);
    if (!token) throw ParseError(ParseError::Kind::NoValidBin, "no bin token in Stock Return field", ret);
    const auto bin = try_parse_bin(*token);
    if (!bin || !bin->valid_for(scheme)) {
        throw ParseError(ParseError::Kind::BinOutOfScheme,
                         "bin " + *token + " outside scheme with max " + std::to_string(scheme.max_index), ret);
    }
    out.bin = *bin;
    if (!fields.preamble.empty()) out.reasoning = fields.preamble;
    return out;
}

}  // namespace llmcast
