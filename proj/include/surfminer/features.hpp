#pragma once

// features.hpp — turns refined surfs into fixed-width numeric vectors:
// period-of-day bucketing, similarity-preserving URL renumbering, first-K
// page features, normalization, and the tab-delimited export consumed by
// the clustering stage and by external mining tools.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "surfminer/cleaner.hpp"
#include "surfminer/errors.hpp"
#include "surfminer/levenshtein.hpp"
#include "surfminer/refiner.hpp"
#include "surfminer/sessionizer.hpp"
#include "surfminer/timestamp.hpp"
#include "surfminer/tsv.hpp"

namespace surfminer {

// ---------------------------------------------------------------------------
// Period buckets

enum class PeriodBucket : int { Morning = 0, Afternoon = 1, Night = 2 };

inline char period_letter(PeriodBucket p) {
    switch (p) {
        case PeriodBucket::Morning: return 'M';
        case PeriodBucket::Afternoon: return 'A';
        default: return 'N';
    }
}

// The three ranges partition the clock: M=[morning,afternoon),
// A=[afternoon,night), N wraps around midnight.
struct PeriodBoundaries {
    int morning_start = 6;
    int afternoon_start = 12;
    int night_start = 18;

    bool operator==(const PeriodBoundaries&) const = default;
};

inline PeriodBucket period_of(int hour, const PeriodBoundaries& b = {}) {
    if (hour >= b.morning_start && hour < b.afternoon_start) return PeriodBucket::Morning;
    if (hour >= b.afternoon_start && hour < b.night_start) return PeriodBucket::Afternoon;
    return PeriodBucket::Night;
}

inline PeriodBucket period_of(const Timestamp& ts, const PeriodBoundaries& b = {}) {
    return period_of(ts.hour, b);
}

// ---------------------------------------------------------------------------
// URL renumbering

// Renumbers URLs so string-similar ones get numerically close codes. Greedy
// chain: start at the lexicographically smallest base URL, then repeatedly
// hop to the unvisited URL nearest by edit distance (ties to the smaller
// string); codes follow visit order. Returns old url_id -> new code.
inline std::vector<int> recode_urls(const std::vector<UrlRecord>& urls) {
    std::vector<int> mapping(urls.size(), -1);
    if (urls.empty()) return mapping;

    std::size_t start = 0;
    for (std::size_t i = 1; i < urls.size(); ++i)
        if (urls[i].base_url < urls[start].base_url) start = i;

    std::vector<bool> visited(urls.size(), false);
    std::size_t current = start;
    for (int code = 0;; ++code) {
        visited[current] = true;
        if (urls[current].url_id < 0 ||
            static_cast<std::size_t>(urls[current].url_id) >= urls.size())
            throw WidthMismatch("url table ids are not consecutive");
        mapping[static_cast<std::size_t>(urls[current].url_id)] = code;

        std::size_t next = urls.size();
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 0; i < urls.size(); ++i) {
            if (visited[i]) continue;
            std::int64_t d = levenshtein(urls[current].base_url, urls[i].base_url);
            if (d < best || (d == best && next < urls.size() &&
                             urls[i].base_url < urls[next].base_url)) {
                best = d;
                next = i;
            }
        }
        if (next == urls.size()) break;
        current = next;
    }
    return mapping;
}

// ---------------------------------------------------------------------------
// Session vectors

struct SessionVector {
    std::int64_t surf_id = 0;
    PeriodBucket period = PeriodBucket::Morning;
    std::vector<int> categories;        // first K page categories, padded with 0
    std::vector<int> url_codes;         // recoded ids, -1 where padded
    std::vector<std::int64_t> durations;  // page durations, 0 where padded

    bool operator==(const SessionVector&) const = default;
};

enum class NormalizationMode : int { None = 0, MinMax = 1, ZScore = 2 };

struct NormalizationSpec {
    NormalizationMode mode = NormalizationMode::None;
    bool include_durations = false;
    std::optional<double> max_value_cap;

    bool operator==(const NormalizationSpec&) const = default;
};

struct FeatureOptions {
    int k = 2;  // pages per vector
    bool include_url_codes = false;
    bool one_hot = false;  // expand period/category codes into indicators
    int category_count = static_cast<int>(default_categories().size());
    PeriodBoundaries periods;
    NormalizationSpec norm;

    bool operator==(const FeatureOptions&) const = default;
};

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::int64_t> surf_ids;
    std::vector<std::vector<double>> rows;

    bool operator==(const FeatureMatrix&) const = default;
};

// The surf's pages in chronological order across all its windows.
inline std::vector<const PageVisit*> pages_in_order(const Surf& s) {
    std::vector<const PageVisit*> pages;
    for (const WindowVisit& w : s.windows)
        for (const PageVisit& p : w.pages) pages.push_back(&p);
    std::stable_sort(pages.begin(), pages.end(),
                     [](const PageVisit* a, const PageVisit* b) {
                         return a->start_ms < b->start_ms;
                     });
    return pages;
}

inline SessionVector build_session_vector(const Surf& s, const std::vector<int>& url_mapping,
                                          const FeatureOptions& opts) {
    SessionVector v;
    v.surf_id = s.surf_id;
    v.period = period_of(timestamp_from_epoch_ms(s.start_ms), opts.periods);

    auto pages = pages_in_order(s);
    for (int i = 0; i < opts.k; ++i) {
        if (static_cast<std::size_t>(i) < pages.size()) {
            const PageVisit& p = *pages[i];
            v.categories.push_back(p.category);
            int code = -1;
            if (p.url_id >= 0 && static_cast<std::size_t>(p.url_id) < url_mapping.size())
                code = url_mapping[p.url_id];
            v.url_codes.push_back(code);
            v.durations.push_back(p.duration_ms);
        } else {
            v.categories.push_back(0);  // pad with Unclassified
            v.url_codes.push_back(-1);
            v.durations.push_back(0);
        }
    }
    return v;
}

// The structured (pre-flattening) vectors; also used as per-surf metadata
// by the clustering stage's summaries.
inline std::vector<SessionVector> build_session_vectors(const std::vector<Surf>& surfs,
                                                        const std::vector<UrlRecord>& urls,
                                                        const FeatureOptions& opts = {}) {
    if (surfs.empty()) throw EmptyInput("no surfs to vectorize");
    if (opts.k < 1) throw ConfigError("feature vectors need k >= 1 pages");

    std::vector<int> mapping;
    if (opts.include_url_codes) mapping = recode_urls(urls);

    std::vector<SessionVector> out;
    out.reserve(surfs.size());
    for (const Surf& s : surfs) out.push_back(build_session_vector(s, mapping, opts));
    return out;
}

// One row per surf: period, the first K page categories, then optionally
// recoded URL ids and durations. Categorical values go out as integer
// codes, or as 0/1 indicator columns when one_hot is set.
inline FeatureMatrix build_vectors(const std::vector<Surf>& surfs,
                                   const std::vector<UrlRecord>& urls,
                                   const FeatureOptions& opts = {}) {
    std::vector<SessionVector> vectors = build_session_vectors(surfs, urls, opts);

    FeatureMatrix m;
    if (opts.one_hot) {
        for (char p : {'M', 'A', 'N'}) m.columns.push_back(std::string("period_") + p);
        for (int i = 1; i <= opts.k; ++i)
            for (int c = 0; c < opts.category_count; ++c)
                m.columns.push_back("cat" + std::to_string(i) + "_" + std::to_string(c));
    } else {
        m.columns.push_back("period");
        for (int i = 1; i <= opts.k; ++i) m.columns.push_back("cat" + std::to_string(i));
    }
    if (opts.include_url_codes)
        for (int i = 1; i <= opts.k; ++i) m.columns.push_back("url" + std::to_string(i));
    if (opts.norm.include_durations)
        for (int i = 1; i <= opts.k; ++i) m.columns.push_back("dur" + std::to_string(i));

    for (const SessionVector& v : vectors) {
        std::vector<double> row;
        row.reserve(m.columns.size());
        if (opts.one_hot) {
            for (int p = 0; p < 3; ++p)
                row.push_back(static_cast<int>(v.period) == p ? 1.0 : 0.0);
            for (int cat : v.categories) {
                for (int c = 0; c < opts.category_count; ++c)
                    row.push_back(cat == c ? 1.0 : 0.0);
            }
        } else {
            row.push_back(static_cast<double>(static_cast<int>(v.period)));
            for (int cat : v.categories) row.push_back(static_cast<double>(cat));
        }
        if (opts.include_url_codes)
            for (int code : v.url_codes) row.push_back(static_cast<double>(code));
        if (opts.norm.include_durations)
            for (std::int64_t d : v.durations) row.push_back(static_cast<double>(d));
        m.surf_ids.push_back(v.surf_id);
        m.rows.push_back(std::move(row));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Normalization

// Per-column transform. The cap saturates large values first; degenerate
// columns (no spread) map to 0 under both MinMax and ZScore.
inline FeatureMatrix normalize(FeatureMatrix m, const NormalizationSpec& spec) {
    if (m.rows.empty()) return m;
    const std::size_t width = m.columns.size();

    if (spec.max_value_cap) {
        double cap = *spec.max_value_cap;
        for (auto& row : m.rows)
            for (double& v : row) v = std::min(v, cap);
    }
    if (spec.mode == NormalizationMode::None) return m;

    for (std::size_t c = 0; c < width; ++c) {
        if (spec.mode == NormalizationMode::MinMax) {
            double lo = m.rows[0][c], hi = m.rows[0][c];
            for (const auto& row : m.rows) {
                lo = std::min(lo, row[c]);
                hi = std::max(hi, row[c]);
            }
            for (auto& row : m.rows) row[c] = hi > lo ? (row[c] - lo) / (hi - lo) : 0.0;
        } else {
            double mean = 0.0;
            for (const auto& row : m.rows) mean += row[c];
            mean /= static_cast<double>(m.rows.size());
            double var = 0.0;
            for (const auto& row : m.rows) var += (row[c] - mean) * (row[c] - mean);
            double sd = m.rows.size() > 1
                            ? std::sqrt(var / static_cast<double>(m.rows.size() - 1))
                            : 0.0;
            for (auto& row : m.rows) row[c] = sd > 0.0 ? (row[c] - mean) / sd : 0.0;
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Export

// Plain tab-delimited text with a header row — no comment markers, so
// generic mining tools load it directly.
inline void export_features(const FeatureMatrix& m, const std::string& path) {
    if (m.rows.empty()) throw EmptyInput("feature matrix has no rows");
    std::string text = "surf_id";
    for (const std::string& c : m.columns) text += "\t" + c;
    text += '\n';
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        text += std::to_string(m.surf_ids[r]);
        for (double v : m.rows[r]) text += "\t" + fmt_double(v);
        text += '\n';
    }
    write_file_bytes(path, text);
}

inline FeatureMatrix load_features(const std::string& path) {
    std::string text = read_file_bytes(path);
    FeatureMatrix m;
    bool have_header = false;
    for (std::string_view line : split_lines(text)) {
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (!have_header) {
            if (fields.empty() || fields[0] != "surf_id")
                throw IoFailure("feature file lacks a surf_id header: " + path);
            m.columns.assign(fields.begin() + 1, fields.end());
            have_header = true;
            continue;
        }
        if (fields.size() != m.columns.size() + 1)
            throw IoFailure("feature row width mismatch in " + path);
        m.surf_ids.push_back(detail::to_i64(fields[0], "feature file"));
        std::vector<double> row;
        row.reserve(m.columns.size());
        for (std::size_t i = 1; i < fields.size(); ++i) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(fields[i], &used));
                if (used != fields[i].size()) throw std::invalid_argument(fields[i]);
            } catch (const std::exception&) {
                throw IoFailure("bad numeric cell in " + path + ": " + fields[i]);
            }
        }
        m.rows.push_back(std::move(row));
    }
    if (!have_header) throw IoFailure("feature file is empty: " + path);
    return m;
}

}  // namespace surfminer
