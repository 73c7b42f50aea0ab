#pragma once

// levenshtein.hpp — unit-cost edit distance, measured in Unicode code
// points so accented titles compare the same way the length audit counts
// them.

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <vector>

#include "surfminer/text.hpp"

namespace surfminer {

inline std::int64_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<char32_t> ua = utf8_decode(a);
    std::vector<char32_t> ub = utf8_decode(b);
    if (ua.empty()) return static_cast<std::int64_t>(ub.size());
    if (ub.empty()) return static_cast<std::int64_t>(ua.size());
    if (ub.size() > ua.size()) ua.swap(ub);  // keep the rolling rows short

    std::vector<std::int64_t> prev(ub.size() + 1);
    std::vector<std::int64_t> curr(ub.size() + 1);
    for (std::size_t j = 0; j <= ub.size(); ++j) prev[j] = static_cast<std::int64_t>(j);
    for (std::size_t i = 1; i <= ua.size(); ++i) {
        curr[0] = static_cast<std::int64_t>(i);
        for (std::size_t j = 1; j <= ub.size(); ++j) {
            std::int64_t subst = prev[j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, subst});
        }
        prev.swap(curr);
    }
    return prev[ub.size()];
}

}  // namespace surfminer
