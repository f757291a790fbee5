#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace llmcast {

namespace detail {

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline bool is_markup(char c) { return c == '*' || c == '_' || c == '#'; }

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace detail

inline std::string trim_copy(std::string_view s, std::string_view chars = " \t\r\n") {
    const auto b = s.find_first_not_of(chars);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(chars);
    return std::string(s.substr(b, e - b + 1));
}

/// Where a "Label:" marker sits in a reply.
struct LabelHit {
    std::size_t label_start = 0;  // first char of the marker, including leading markdown
    std::size_t value_start = 0;  // first char after the colon and any trailing markdown
};

/// Last occurrence of `label` used as a field marker: case-insensitive, preceded
/// by a non-alphanumeric boundary, tolerating markdown such as "**Summary**:",
/// "*Summary:*" or "## Summary:".
inline std::optional<LabelHit> find_last_label(std::string_view text, std::string_view label) {
    const std::string hay = detail::lower(text);
    const std::string needle = detail::lower(label);
    std::optional<LabelHit> hit;
    std::size_t pos = hay.find(needle);
    while (pos != std::string::npos) {
        const bool boundary = pos == 0 || !detail::is_alnum(hay[pos - 1]);
        std::size_t i = pos + needle.size();
        while (i < hay.size() && (detail::is_markup(hay[i]) || hay[i] == ' ' || hay[i] == '\t')) ++i;
        if (boundary && i < hay.size() && hay[i] == ':') {
            ++i;
            while (i < hay.size() && detail::is_markup(hay[i])) ++i;
            std::size_t start = pos;
            while (start > 0 && detail::is_markup(hay[start - 1])) --start;
            hit = LabelHit{start, i};
        }
        pos = hay.find(needle, pos + 1);
    }
    return hit;
}

struct LabelledFields {
    std::map<std::string, std::string> values;  // label -> trimmed field text
    std::vector<std::string> missing;           // labels with no marker
    std::string preamble;                       // text before the first located marker
};

/// Splits a reply into fields using the last marker of each label. A field
/// runs until the next located marker (in text order) or the end.
inline LabelledFields extract_fields(std::string_view text, const std::vector<std::string>& labels) {
    LabelledFields out;
    std::vector<std::pair<std::string, LabelHit>> hits;
    for (const auto& label : labels) {
        if (auto h = find_last_label(text, label)) hits.emplace_back(label, *h);
        else out.missing.push_back(label);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.second.label_start < b.second.label_start; });
    for (std::size_t k = 0; k < hits.size(); ++k) {
        const auto& [label, h] = hits[k];
        std::size_t end = k + 1 < hits.size() ? hits[k + 1].second.label_start : text.size();
        if (end < h.value_start) end = h.value_start;
        out.values[label] = trim_copy(text.substr(h.value_start, end - h.value_start), " \t\r\n*_,;");
    }
    if (!hits.empty()) out.preamble = trim_copy(text.substr(0, hits.front().second.label_start));
    return out;
}

/// Comma-separated list; items trimmed of whitespace, markdown and trailing periods.
inline std::vector<std::string> split_list(std::string_view field) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= field.size()) {
        auto end = field.find_first_of(",\n", start);
        if (end == std::string_view::npos) end = field.size();
        auto item = trim_copy(field.substr(start, end - start), " \t\r\n*_-•");
        while (!item.empty() && item.back() == '.') item.pop_back();
        item = trim_copy(item);
        if (!item.empty()) items.push_back(std::move(item));
        start = end + 1;
    }
    return items;
}

inline std::size_t word_count(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

}  // namespace llmcast
