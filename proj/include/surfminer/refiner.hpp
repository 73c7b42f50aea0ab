#pragma once

// refiner.hpp — post-sessionization cleanup: duration validity filtering,
// error-page removal by title, and rule-based page categorization with a
// console labeling flow for first-time URLs.

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "surfminer/cleaner.hpp"
#include "surfminer/errors.hpp"
#include "surfminer/levenshtein.hpp"
#include "surfminer/sessionizer.hpp"
#include "surfminer/text.hpp"
#include "surfminer/tsv.hpp"

namespace surfminer {

struct ValidityInterval {
    std::int64_t min_ms = 20000;    // shorter visits are noise (ads, transients)
    std::int64_t max_ms = 1800000;  // longer ones are abandoned windows

    bool operator==(const ValidityInterval&) const = default;
};

struct Category {
    int code = 0;
    std::string name;

    bool operator==(const Category&) const = default;
};

// The fixed vocabulary. Unclassified doubles as the padding value, so it
// must keep code 0.
inline const std::vector<Category>& default_categories() {
    static const std::vector<Category> cats = {
        {0, "Unclassified"}, {1, "Search/IR"},    {2, "Mail"}, {3, "Games"},  {4, "Forums"},
        {5, "Downloads"},    {6, "Development"}, {7, "News"}, {8, "Research"},
    };
    return cats;
}

inline const Category* find_category(const std::vector<Category>& cats, const std::string& name) {
    for (const Category& c : cats)
        if (c.name == name) return &c;
    return nullptr;
}

inline const Category* find_category(const std::vector<Category>& cats, int code) {
    for (const Category& c : cats)
        if (c.code == code) return &c;
    return nullptr;
}

struct CategoryRule {
    enum class Kind : int { ExactUrl = 0, TitleSimilar = 1 };

    Kind kind = Kind::ExactUrl;
    std::string pattern;        // base URL, or reference title
    int max_edit_distance = 3;  // TitleSimilar only
    int category = 0;

    bool operator==(const CategoryRule&) const = default;
};

// ---------------------------------------------------------------------------
// Validity filtering

struct AberrantCounts {
    std::int64_t pages = 0;
    std::int64_t windows = 0;
    std::int64_t surfs = 0;

    bool operator==(const AberrantCounts&) const = default;
};

namespace detail {

// Drops windows left without pages, then surfs left without windows,
// counting what fell.
inline void prune_empty(std::vector<Surf>& surfs, std::int64_t* window_count,
                        std::int64_t* surf_count) {
    for (Surf& s : surfs) {
        auto kept = std::remove_if(s.windows.begin(), s.windows.end(),
                                   [](const WindowVisit& w) { return w.pages.empty(); });
        if (window_count) *window_count += s.windows.end() - kept;
        s.windows.erase(kept, s.windows.end());
    }
    auto kept = std::remove_if(surfs.begin(), surfs.end(),
                               [](const Surf& s) { return s.windows.empty(); });
    if (surf_count) *surf_count += surfs.end() - kept;
    surfs.erase(kept, surfs.end());
}

}  // namespace detail

// Removes page visits whose duration falls outside the validity interval
// (negative ones included), then cascades: windows emptied by the removal
// go too, and surfs emptied by that. Idempotent.
inline AberrantCounts filter_aberrant(std::vector<Surf>& surfs, const ValidityInterval& iv) {
    AberrantCounts removed;
    for (Surf& s : surfs) {
        for (WindowVisit& w : s.windows) {
            auto kept = std::remove_if(w.pages.begin(), w.pages.end(), [&](const PageVisit& p) {
                return p.duration_ms < 0 || p.duration_ms < iv.min_ms || p.duration_ms > iv.max_ms;
            });
            removed.pages += w.pages.end() - kept;
            w.pages.erase(kept, w.pages.end());
        }
    }
    detail::prune_empty(surfs, &removed.windows, &removed.surfs);
    return removed;
}

inline const std::vector<std::string>& default_error_titles() {
    static const std::vector<std::string> patterns = {"404", "not found", "error", "erreur"};
    return patterns;
}

// Removes pages whose title contains any configured pattern
// (case-insensitive). Containers emptied by the removal are pruned the same
// way filter_aberrant prunes them.
inline std::int64_t filter_error_pages(std::vector<Surf>& surfs,
                                       const std::vector<std::string>& title_patterns) {
    std::int64_t removed = 0;
    if (title_patterns.empty()) return removed;
    for (Surf& s : surfs) {
        for (WindowVisit& w : s.windows) {
            auto kept = std::remove_if(w.pages.begin(), w.pages.end(), [&](const PageVisit& p) {
                for (const std::string& pat : title_patterns)
                    if (contains_ci(p.title, pat)) return true;
                return false;
            });
            removed += w.pages.end() - kept;
            w.pages.erase(kept, w.pages.end());
        }
    }
    detail::prune_empty(surfs, nullptr, nullptr);
    return removed;
}

// ---------------------------------------------------------------------------
// Categorization

// A URL nobody labeled yet, aggregated for the labeling dialog.
struct UnknownUrl {
    std::string base_url;
    std::string sample_title;
    std::int64_t visits = 0;

    bool operator==(const UnknownUrl&) const = default;
};

// Assigns each page the category of the first matching rule. URL rules
// (exact base-URL match) take priority over title rules (edit distance at
// most the rule's threshold); within a kind, file order decides. Unmatched
// pages stay unclassified and their URLs are collected for labeling.
inline std::vector<UnknownUrl> categorize(std::vector<Surf>& surfs,
                                          const std::vector<CategoryRule>& rules,
                                          const std::vector<UrlRecord>& urls) {
    std::map<std::string, int> url_rules;  // base_url -> category
    std::vector<const CategoryRule*> title_rules;
    for (const CategoryRule& r : rules) {
        if (r.kind == CategoryRule::Kind::ExactUrl) {
            url_rules.emplace(r.pattern, r.category);  // first rule wins
        } else {
            title_rules.push_back(&r);
        }
    }

    std::map<std::string, UnknownUrl> unknown;
    std::vector<std::string> unknown_order;
    for (Surf& s : surfs) {
        for (WindowVisit& w : s.windows) {
            for (PageVisit& p : w.pages) {
                const std::string& base =
                    p.url_id >= 0 && static_cast<std::size_t>(p.url_id) < urls.size()
                        ? urls[p.url_id].base_url
                        : std::string();
                auto ur = url_rules.find(base);
                if (ur != url_rules.end()) {
                    p.category = ur->second;
                    continue;
                }
                const CategoryRule* hit = nullptr;
                for (const CategoryRule* r : title_rules) {
                    if (levenshtein(p.title, r->pattern) <= r->max_edit_distance) {
                        hit = r;
                        break;
                    }
                }
                if (hit) {
                    p.category = hit->category;
                    continue;
                }
                p.category = 0;
                auto [it, fresh] = unknown.try_emplace(base);
                if (fresh) {
                    it->second.base_url = base;
                    it->second.sample_title = p.title;
                    unknown_order.push_back(base);
                }
                ++it->second.visits;
            }
        }
    }

    std::vector<UnknownUrl> out;
    out.reserve(unknown_order.size());
    for (const std::string& base : unknown_order) out.push_back(unknown[base]);
    return out;
}

// ---------------------------------------------------------------------------
// Interactive labeling

// Prompts once per unknown URL on the given streams. An empty answer or
// "s" skips; a category name or code labels the URL and yields a persisted
// exact-URL rule.
inline std::vector<CategoryRule> interactive_label(const std::vector<UnknownUrl>& unknowns,
                                                   const std::vector<Category>& categories,
                                                   std::istream& in, std::ostream& out) {
    std::vector<CategoryRule> added;
    if (unknowns.empty()) return added;

    out << "Categories:";
    for (const Category& c : categories) out << "  " << c.code << "=" << c.name;
    out << "\n";
    for (const UnknownUrl& u : unknowns) {
        out << u.base_url << "\n";
        if (!u.sample_title.empty()) out << "  title: " << u.sample_title << "\n";
        out << "  visits: " << u.visits << "\n";
        out << "category (empty or s to skip)? " << std::flush;
        std::string answer;
        if (!std::getline(in, answer)) break;
        while (!answer.empty() && (answer.back() == '\r' || answer.back() == ' '))
            answer.pop_back();
        if (answer.empty() || answer == "s" || answer == "S") continue;
        const Category* cat = find_category(categories, answer);
        if (!cat && answer.size() <= 9 &&
            answer.find_first_not_of("0123456789") == std::string::npos) {
            cat = find_category(categories, std::stoi(answer));
        }
        if (!cat) {
            out << "  unknown category, skipped\n";
            continue;
        }
        CategoryRule r;
        r.kind = CategoryRule::Kind::ExactUrl;
        r.pattern = u.base_url;
        r.category = cat->code;
        added.push_back(std::move(r));
    }
    return added;
}

// Console entry point: refuses to prompt without a terminal on both ends.
inline std::vector<CategoryRule> interactive_label(const std::vector<UnknownUrl>& unknowns,
                                                   const std::vector<Category>& categories) {
    if (!isatty(fileno(stdin)) || !isatty(fileno(stdout))) throw NonInteractiveEnvironment();
    return interactive_label(unknowns, categories, std::cin, std::cout);
}

// ---------------------------------------------------------------------------
// Rules file

// One rule per line: kind (URL|TITLE), pattern, threshold (TITLE only,
// "-" for URL rows), category name. Hand-editable.
inline void save_rules(const std::vector<CategoryRule>& rules, const std::string& path,
                       const std::vector<Category>& categories = default_categories()) {
    std::string text = "# kind\tpattern\tthreshold\tcategory\n";
    for (const CategoryRule& r : rules) {
        const Category* cat = find_category(categories, r.category);
        if (!cat) throw ConfigError("rule references unknown category code " +
                                    std::to_string(r.category));
        bool title = r.kind == CategoryRule::Kind::TitleSimilar;
        text += join_row({title ? "TITLE" : "URL", r.pattern,
                          title ? std::to_string(r.max_edit_distance) : std::string("-"),
                          cat->name});
        text += '\n';
    }
    write_file_bytes(path, text);
}

inline std::vector<CategoryRule> load_rules(const std::string& path,
                                            const std::vector<Category>& categories =
                                                default_categories()) {
    std::vector<CategoryRule> rules;
    for (const auto& row : read_tsv_file(path)) {
        if (row.size() != 4) throw ConfigError("rules file rows need 4 fields");
        CategoryRule r;
        if (row[0] == "URL") {
            r.kind = CategoryRule::Kind::ExactUrl;
        } else if (row[0] == "TITLE") {
            r.kind = CategoryRule::Kind::TitleSimilar;
        } else {
            throw ConfigError("unknown rule kind: " + row[0]);
        }
        r.pattern = row[1];
        if (r.kind == CategoryRule::Kind::TitleSimilar) {
            r.max_edit_distance = static_cast<int>(detail::to_i64(row[2], "rules file"));
            if (r.max_edit_distance < 0) throw ConfigError("negative title threshold");
        }
        const Category* cat = find_category(categories, row[3]);
        if (!cat) throw ConfigError("unknown category name: " + row[3]);
        r.category = cat->code;
        rules.push_back(std::move(r));
    }
    return rules;
}

// ---------------------------------------------------------------------------
// Stage driver

struct RefineConfig {
    ValidityInterval interval;
    std::vector<std::string> error_titles = default_error_titles();

    bool operator==(const RefineConfig&) const = default;
};

struct RefineReport {
    AberrantCounts aberrant;
    std::int64_t error_pages_removed = 0;
    std::int64_t pages_kept = 0;
    std::int64_t unclassified_pages = 0;

    bool operator==(const RefineReport&) const = default;
};

struct RefineResult {
    RefineReport report;
    std::vector<UnknownUrl> unknowns;
};

// Re-derives durations defensively, filters aberrant items, drops error
// pages, and categorizes what survived. Removal attribution follows that
// fixed order: a page that is both too short and error-titled counts as
// aberrant.
inline RefineResult refine_sessions(SessionTables& tables, const std::vector<UrlRecord>& urls,
                                    const std::vector<CategoryRule>& rules,
                                    const RefineConfig& cfg = {}) {
    RefineResult result;
    for (Surf& s : tables.surfs)
        for (WindowVisit& w : s.windows)
            for (PageVisit& p : w.pages) p.duration_ms = p.end_ms - p.start_ms;

    result.report.aberrant = filter_aberrant(tables.surfs, cfg.interval);
    result.report.error_pages_removed = filter_error_pages(tables.surfs, cfg.error_titles);
    result.unknowns = categorize(tables.surfs, rules, urls);

    for (const Surf& s : tables.surfs)
        for (const WindowVisit& w : s.windows)
            for (const PageVisit& p : w.pages) {
                ++result.report.pages_kept;
                if (p.category == 0) ++result.report.unclassified_pages;
            }
    return result;
}

}  // namespace surfminer
