#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "surfminer/log_model.hpp"
#include "surfminer/text.hpp"
#include "surfminer/tsv.hpp"

// Cleaning: drop useless items (invalid MAC, untargeted schemes, non-Latin
// text, frame-generated events, orphans), split dynamic-URL parameters off,
// and replace URL strings by numeric codes. Stages run in a fixed order and
// each dropped entry is attributed to exactly one stage, so the report
// counts always cross-foot.

namespace surfminer {

struct UrlRecord {
    int url_id = 0;
    std::string base_url;  // scheme://host/path, no query
    std::string scheme;    // lowercased
    std::string host;      // lowercased

    bool operator==(const UrlRecord&) const = default;
};

struct ParamRecord {
    int param_id = 0;
    int url_id = 0;
    std::string raw_params;  // text after the first '?', verbatim

    bool operator==(const ParamRecord&) const = default;
};

struct CleaningConfig {
    std::set<std::string> allowed_schemes = {"http", "ftp"};
    bool nonlatin_filter_on = true;
    bool zero_mac_invalid = true;

    bool operator==(const CleaningConfig&) const = default;
};

struct CleaningReport {
    std::int64_t loaded = 0;
    std::int64_t invalid_mac_removed = 0;
    std::int64_t untargeted_removed = 0;
    std::int64_t nonlatin_removed = 0;
    std::int64_t frame_events_removed = 0;
    std::int64_t orphans_removed = 0;
    std::int64_t retained = 0;
    double physical_cleaning_ratio = 0.0;  // removed / loaded * 100

    std::int64_t total_removed() const {
        return invalid_mac_removed + untargeted_removed + nonlatin_removed +
               frame_events_removed + orphans_removed;
    }

    bool operator==(const CleaningReport&) const = default;
};

// A cleaned entry: same event, URL replaced by its code. The advisory
// length fields are gone (already audited at parse time).
struct CleanEntry {
    UserKey user;
    Timestamp ts;
    std::int64_t ms = 0;
    std::int64_t window_id = 0;
    EventKind event = EventKind::NavigateBegin;
    int url_id = -1;    // -1 for window-close entries
    int param_id = -1;  // -1 when the URL had no parameters
    std::string title;  // document-complete only
    int frame_count = -1;
    int source_file = 0;
    std::int64_t source_line = 0;

    bool operator==(const CleanEntry&) const = default;
};

// ---------------------------------------------------------------------------
// URL helpers

struct StripResult {
    std::string base;
    std::string params;
    bool has_params = false;
};

// Split at the first '?'; everything after it is the parameter string.
inline StripResult strip_params(std::string_view url) {
    StripResult r;
    auto q = url.find('?');
    if (q == std::string_view::npos) {
        r.base = std::string(url);
    } else {
        r.base = std::string(url.substr(0, q));
        r.params = std::string(url.substr(q + 1));
        r.has_params = true;
    }
    return r;
}

inline std::string url_scheme(std::string_view url) {
    std::size_t i = 0;
    if (i >= url.size() || !std::isalpha(static_cast<unsigned char>(url[i]))) return {};
    while (i < url.size()) {
        char c = url[i];
        if (c == ':') return to_lower_ascii(url.substr(0, i));
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.')
            return {};
        ++i;
    }
    return {};
}

inline std::string url_host(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) return {};
    auto rest = url.substr(scheme_end + 3);
    auto slash = rest.find_first_of("/?#");
    return to_lower_ascii(rest.substr(0, slash));
}

// ---------------------------------------------------------------------------
// Stage 1: invalid MAC addresses

inline bool validate_mac(std::string_view mac, const CleaningConfig& cfg = {}) {
    if (mac.size() != 17) return false;
    bool all_zero = true;
    for (std::size_t i = 0; i < 17; ++i) {
        if (i % 3 == 2) {
            if (mac[i] != '-') return false;
        } else {
            char c = mac[i];
            bool hex = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F');
            if (!hex) return false;
            if (c != '0') all_zero = false;
        }
    }
    if (cfg.zero_mac_invalid && all_zero) return false;
    return true;
}

inline std::pair<std::vector<RawLogEntry>, std::vector<RawLogEntry>> filter_invalid_mac(
    std::vector<RawLogEntry> entries, const CleaningConfig& cfg = {}) {
    std::pair<std::vector<RawLogEntry>, std::vector<RawLogEntry>> out;
    for (auto& e : entries) {
        (validate_mac(e.user.mac, cfg) ? out.first : out.second).push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 2: numeric URL coding (not a filter; prerequisite for the rest)

struct EncodedLog {
    std::vector<CleanEntry> entries;
    std::vector<UrlRecord> urls;
    std::vector<ParamRecord> params;
};

// Replace every URL by the id of its base form; ids are assigned in
// first-seen order from 0. Every entry with a parameter string appends one
// param row.
inline EncodedLog encode_urls(const std::vector<RawLogEntry>& entries) {
    EncodedLog out;
    std::map<std::string, int> ids;
    for (const auto& e : entries) {
        CleanEntry c;
        c.user = e.user;
        c.ts = e.ts;
        c.ms = e.ms;
        c.window_id = e.window_id;
        c.event = e.event;
        c.title = e.title;
        c.frame_count = e.frame_count;
        c.source_file = e.source_file;
        c.source_line = e.source_line;
        if (e.event != EventKind::WindowClose) {
            auto stripped = strip_params(e.url);
            auto [it, inserted] = ids.emplace(stripped.base, static_cast<int>(out.urls.size()));
            if (inserted) {
                out.urls.push_back({it->second, stripped.base, url_scheme(stripped.base),
                                    url_host(stripped.base)});
            }
            c.url_id = it->second;
            if (stripped.has_params) {
                c.param_id = static_cast<int>(out.params.size());
                out.params.push_back({c.param_id, c.url_id, stripped.params});
            }
        }
        out.entries.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 3: untargeted URLs (schemes outside the traced set)

inline std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> filter_untargeted(
    std::vector<CleanEntry> entries, const std::vector<UrlRecord>& urls,
    const CleaningConfig& cfg = {}) {
    std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> out;
    for (auto& e : entries) {
        bool keep = e.event == EventKind::WindowClose ||
                    cfg.allowed_schemes.count(urls[static_cast<std::size_t>(e.url_id)].scheme) > 0;
        (keep ? out.first : out.second).push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 4: non-Latin items

inline std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> filter_nonlatin(
    std::vector<CleanEntry> entries, const std::vector<UrlRecord>& urls,
    const std::vector<ParamRecord>& params, const CleaningConfig& cfg = {}) {
    std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> out;
    if (!cfg.nonlatin_filter_on) {
        out.first = std::move(entries);
        return out;
    }
    for (auto& e : entries) {
        bool drop = false;
        if (!e.title.empty() && contains_non_latin(e.title)) drop = true;
        if (!drop && e.url_id >= 0) {
            std::string full = urls[static_cast<std::size_t>(e.url_id)].base_url;
            if (e.param_id >= 0) {
                full += '?';
                full += params[static_cast<std::size_t>(e.param_id)].raw_params;
            }
            if (contains_non_latin(percent_decode(full))) drop = true;
        }
        (drop ? out.second : out.first).push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage 5: frame-generated events

namespace detail {

// One window's entries (as indices into the full sequence). Marks frame
// events in `remove`. An episode is anchored at a NavigateBegin and closed
// by the first DocumentComplete for the anchor URL; when that terminal
// reports frames, the entries in between are subsidiary loads and go away.
// A navigation that never completes is left alone. After an anchor-matched
// terminal with frames, trailing lazily-loaded frame pairs are recognised
// by carrying the terminal's title verbatim.
inline void mark_frame_events(const std::vector<CleanEntry>& entries,
                              const std::vector<std::size_t>& idx, std::vector<char>& remove) {
    const std::size_t n = idx.size();
    std::size_t k = 0;
    while (k < n) {
        if (entries[idx[k]].event != EventKind::NavigateBegin) {
            ++k;
            continue;
        }
        const int anchor_url = entries[idx[k]].url_id;
        std::vector<std::size_t> members;  // positions in idx between anchor and terminal
        std::ptrdiff_t terminal = -1;
        std::ptrdiff_t last_dc = -1;
        bool anchor_matched = false;
        std::size_t j = k + 1;
        bool hit_close = false;
        while (j < n) {
            const auto& e = entries[idx[j]];
            if (e.event == EventKind::WindowClose) {
                hit_close = true;
                break;
            }
            if (e.event == EventKind::NavigateBegin) {
                if (last_dc >= 0) break;  // next navigation starts; close episode
                members.push_back(j);
                ++j;
                continue;
            }
            // DocumentComplete
            if (e.url_id == anchor_url) {
                terminal = static_cast<std::ptrdiff_t>(j);
                anchor_matched = true;
                break;
            }
            members.push_back(j);
            last_dc = static_cast<std::ptrdiff_t>(j);
            ++j;
        }
        if (terminal < 0 && last_dc >= 0) {
            terminal = last_dc;  // forced close: last completed load stands in
            members.pop_back();  // the terminal itself is kept
        }

        std::size_t resume = (terminal >= 0) ? static_cast<std::size_t>(terminal) + 1 : j;
        if (hit_close && terminal < 0) resume = j + 1;

        if (terminal >= 0) {
            const auto& term = entries[idx[static_cast<std::size_t>(terminal)]];
            if (term.frame_count > 0) {
                for (std::size_t m : members) remove[idx[m]] = 1;
                // absorb trailing frame loads that still carry the top title
                if (anchor_matched && !term.title.empty()) {
                    std::size_t p = static_cast<std::size_t>(terminal) + 1;
                    while (p < n) {
                        const auto& e = entries[idx[p]];
                        if (e.event == EventKind::DocumentComplete && e.url_id != anchor_url &&
                            e.title == term.title) {
                            remove[idx[p]] = 1;
                            ++p;
                        } else if (e.event == EventKind::NavigateBegin && p + 1 < n) {
                            const auto& f = entries[idx[p + 1]];
                            if (f.event == EventKind::DocumentComplete &&
                                f.url_id == e.url_id && f.title == term.title) {
                                remove[idx[p]] = 1;
                                remove[idx[p + 1]] = 1;
                                p += 2;
                            } else {
                                break;
                            }
                        } else {
                            break;
                        }
                    }
                    resume = p;
                }
            }
        }
        k = resume > k ? resume : k + 1;
    }
}

}  // namespace detail

inline std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> remove_frame_events(
    std::vector<CleanEntry> entries) {
    std::map<std::pair<UserKey, std::int64_t>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < entries.size(); ++i)
        groups[{entries[i].user, entries[i].window_id}].push_back(i);

    std::vector<char> remove(entries.size(), 0);
    for (const auto& [key, idx] : groups) detail::mark_frame_events(entries, idx, remove);

    std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        (remove[i] ? out.second : out.first).push_back(std::move(entries[i]));
    return out;
}

// ---------------------------------------------------------------------------
// Stage 6: orphan sweep

// Statically mirrors the reconstruction rule that a window must start with
// a NavigateBegin: anything logged for a window before its first (or next,
// after a close) NavigateBegin cannot be attached to a window visit.
inline std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> sweep_orphans(
    std::vector<CleanEntry> entries) {
    std::map<std::pair<UserKey, std::int64_t>, bool> open;
    std::pair<std::vector<CleanEntry>, std::vector<CleanEntry>> out;
    for (auto& e : entries) {
        auto key = std::make_pair(e.user, e.window_id);
        bool& is_open = open[key];
        bool keep;
        if (e.event == EventKind::NavigateBegin) {
            is_open = true;
            keep = true;
        } else if (e.event == EventKind::WindowClose) {
            keep = is_open;
            is_open = false;
        } else {
            keep = is_open;
        }
        (keep ? out.first : out.second).push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// The whole phase

struct CleaningResult {
    EncodedLog log;  // surviving entries + full url/param tables
    CleaningReport report;
    std::map<int, CleaningReport> per_file;  // keyed by source_file
};

inline CleaningResult run_cleaning(const LogStore& store, const CleaningConfig& cfg = {}) {
    CleaningResult result;
    auto& report = result.report;
    report.loaded = static_cast<std::int64_t>(store.entries.size());

    auto bump = [&result](std::int64_t CleaningReport::* field, int file, std::int64_t n = 1) {
        result.per_file[file].*field += n;
        result.report.*field += n;
    };
    for (const auto& f : store.files) result.per_file[f.file_id];  // ensure a row per file
    for (const auto& e : store.entries) ++result.per_file[e.source_file].loaded;

    auto [valid_mac, bad_mac] = filter_invalid_mac(store.entries, cfg);
    for (const auto& e : bad_mac) bump(&CleaningReport::invalid_mac_removed, e.source_file);

    result.log = encode_urls(valid_mac);

    auto [targeted, untargeted] =
        filter_untargeted(std::move(result.log.entries), result.log.urls, cfg);
    for (const auto& e : untargeted) bump(&CleaningReport::untargeted_removed, e.source_file);

    auto [latin, nonlatin] =
        filter_nonlatin(std::move(targeted), result.log.urls, result.log.params, cfg);
    for (const auto& e : nonlatin) bump(&CleaningReport::nonlatin_removed, e.source_file);

    auto [frameless, frame_events] = remove_frame_events(std::move(latin));
    for (const auto& e : frame_events) bump(&CleaningReport::frame_events_removed, e.source_file);

    auto [kept, orphans] = sweep_orphans(std::move(frameless));
    for (const auto& e : orphans) bump(&CleaningReport::orphans_removed, e.source_file);

    result.log.entries = std::move(kept);
    report.retained = static_cast<std::int64_t>(result.log.entries.size());
    report.physical_cleaning_ratio =
        report.loaded > 0 ? 100.0 * static_cast<double>(report.total_removed()) /
                                static_cast<double>(report.loaded)
                          : 0.0;
    for (auto& [file, fr] : result.per_file) {
        fr.retained = fr.loaded - fr.total_removed();
        fr.physical_cleaning_ratio =
            fr.loaded > 0
                ? 100.0 * static_cast<double>(fr.total_removed()) / static_cast<double>(fr.loaded)
                : 0.0;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Persistence

inline void persist_cleaned(const CleaningResult& result, const std::string& dir) {
    std::string entries =
        "# file\tline\tmac\tlogin\tdate\ttime\twindow\tevent\turl_id\tparam_id\ttitle\tframes\n";
    for (const auto& e : result.log.entries) {
        entries += join_row({std::to_string(e.source_file), std::to_string(e.source_line),
                             e.user.mac, e.user.login_cipher, format_date(e.ts),
                             format_time(e.ts), std::to_string(e.window_id),
                             event_code(e.event), std::to_string(e.url_id),
                             std::to_string(e.param_id), e.title,
                             std::to_string(e.frame_count)});
        entries += '\n';
    }
    write_file_bytes(dir + "/cleaned_entries.tsv", entries);

    std::string urls = "# url_id\tbase_url\tscheme\thost\n";
    for (const auto& u : result.log.urls) {
        urls += join_row({std::to_string(u.url_id), u.base_url, u.scheme, u.host});
        urls += '\n';
    }
    write_file_bytes(dir + "/urls.tsv", urls);

    std::string params = "# param_id\turl_id\traw_params\n";
    for (const auto& p : result.log.params) {
        params += join_row({std::to_string(p.param_id), std::to_string(p.url_id), p.raw_params});
        params += '\n';
    }
    write_file_bytes(dir + "/params.tsv", params);

    auto report_row = [](const std::string& scope, const CleaningReport& r) {
        return join_row({scope, std::to_string(r.loaded), std::to_string(r.invalid_mac_removed),
                         std::to_string(r.untargeted_removed),
                         std::to_string(r.nonlatin_removed),
                         std::to_string(r.frame_events_removed),
                         std::to_string(r.orphans_removed), std::to_string(r.retained),
                         fmt_double(r.physical_cleaning_ratio)}) +
               "\n";
    };
    std::string report =
        "# scope\tloaded\tinvalid_mac\tuntargeted\tnonlatin\tframe_events\torphans\tretained\tratio\n";
    for (const auto& [file, fr] : result.per_file) report += report_row(std::to_string(file), fr);
    report += report_row("total", result.report);
    write_file_bytes(dir + "/cleaning_report.tsv", report);
}

inline CleaningResult load_cleaned(const std::string& dir) {
    CleaningResult result;
    for (const auto& row : read_tsv_file(dir + "/cleaned_entries.tsv")) {
        if (row.size() != 12) throw IoFailure("bad cleaned_entries.tsv row width");
        CleanEntry e;
        e.source_file = static_cast<int>(detail::to_i64(row[0], "cleaned_entries.tsv"));
        e.source_line = detail::to_i64(row[1], "cleaned_entries.tsv");
        e.user.mac = row[2];
        e.user.login_cipher = row[3];
        if (std::string err = detail::parse_date_time(row[4], row[5], DateOrder::DMY, e.ts);
            !err.empty())
            throw IoFailure("cleaned_entries.tsv: " + err);
        e.ms = e.ts.epoch_ms();
        e.window_id = detail::to_i64(row[6], "cleaned_entries.tsv");
        std::int64_t code = detail::to_i64(row[7], "cleaned_entries.tsv");
        if (code < 1 || code > 3) throw IoFailure("bad event code in cleaned_entries.tsv");
        e.event = static_cast<EventKind>(code);
        e.url_id = static_cast<int>(detail::to_i64(row[8], "cleaned_entries.tsv"));
        e.param_id = static_cast<int>(detail::to_i64(row[9], "cleaned_entries.tsv"));
        e.title = row[10];
        e.frame_count = static_cast<int>(detail::to_i64(row[11], "cleaned_entries.tsv"));
        result.log.entries.push_back(std::move(e));
    }
    for (const auto& row : read_tsv_file(dir + "/urls.tsv")) {
        if (row.size() != 4) throw IoFailure("bad urls.tsv row width");
        result.log.urls.push_back(
            {static_cast<int>(detail::to_i64(row[0], "urls.tsv")), row[1], row[2], row[3]});
    }
    for (const auto& row : read_tsv_file(dir + "/params.tsv")) {
        if (row.size() != 3) throw IoFailure("bad params.tsv row width");
        result.log.params.push_back({static_cast<int>(detail::to_i64(row[0], "params.tsv")),
                                     static_cast<int>(detail::to_i64(row[1], "params.tsv")),
                                     row[2]});
    }
    for (const auto& row : read_tsv_file(dir + "/cleaning_report.tsv")) {
        if (row.size() != 9) throw IoFailure("bad cleaning_report.tsv row width");
        CleaningReport r;
        r.loaded = detail::to_i64(row[1], "cleaning_report.tsv");
        r.invalid_mac_removed = detail::to_i64(row[2], "cleaning_report.tsv");
        r.untargeted_removed = detail::to_i64(row[3], "cleaning_report.tsv");
        r.nonlatin_removed = detail::to_i64(row[4], "cleaning_report.tsv");
        r.frame_events_removed = detail::to_i64(row[5], "cleaning_report.tsv");
        r.orphans_removed = detail::to_i64(row[6], "cleaning_report.tsv");
        r.retained = detail::to_i64(row[7], "cleaning_report.tsv");
        r.physical_cleaning_ratio = std::stod(row[8]);
        if (row[0] == "total") {
            result.report = r;
        } else {
            result.per_file[static_cast<int>(detail::to_i64(row[0], "cleaning_report.tsv"))] = r;
        }
    }
    return result;
}

}  // namespace surfminer
