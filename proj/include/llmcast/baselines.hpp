#pragma once

#include <cstdlib>
#include <map>
#include <vector>

#include "llmcast/arma_garch.hpp"
#include "llmcast/gbt.hpp"
#include "llmcast/market_data.hpp"

namespace llmcast {

/// Modal bin of the history. Ties go to the smaller |ordinal|, then Up over Down.
inline ReturnBin most_frequent_bin(const std::vector<ReturnBin>& history, const BinScheme& scheme) {
    if (history.empty()) throw PreconditionError("most_frequent_bin: empty history");
    std::map<int, int> counts;
    for (const auto& b : history) ++counts[bin_ordinal(b, scheme)];
    int best = 0;
    int best_count = -1;
    for (const auto& [ordinal, count] : counts) {
        const bool better = count > best_count ||
                            (count == best_count && (std::abs(ordinal) < std::abs(best) ||
                                                     (std::abs(ordinal) == std::abs(best) && ordinal > best)));
        if (better) {
            best = ordinal;
            best_count = count;
        }
    }
    return ordinal_to_bin(best, scheme);
}

}  // namespace llmcast
