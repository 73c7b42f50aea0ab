#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "surfminer/errors.hpp"
#include "surfminer/text.hpp"
#include "surfminer/timestamp.hpp"
#include "surfminer/tsv.hpp"

// The log data model. One physical line of a collector log is one browser
// event: MAC, login, date, time, window id, event code, then per-kind
// payload fields, all tab-separated. Lines parse into RawLogEntry records;
// files merge into a LogStore ordered per user.

namespace surfminer {

struct UserKey {
    std::string mac;           // recorded verbatim, validity checked later
    std::string login_cipher;  // opaque; never decrypted

    auto operator<=>(const UserKey&) const = default;
};

enum class EventKind : int {
    NavigateBegin = 1,
    DocumentComplete = 2,
    WindowClose = 3,
};

inline std::string event_code(EventKind k) {
    switch (k) {
        case EventKind::NavigateBegin: return "01";
        case EventKind::DocumentComplete: return "02";
        case EventKind::WindowClose: return "03";
    }
    return "??";
}

struct RawLogEntry {
    UserKey user;
    Timestamp ts;
    std::int64_t ms = 0;  // cached ts.epoch_ms()
    std::int64_t window_id = 0;
    EventKind event = EventKind::NavigateBegin;
    // Optional payload; presence is fixed by the event kind (url for 01/02,
    // title and frame_count for 02 only). -1 marks an absent numeric field.
    int url_len = -1;
    std::string url;
    int title_len = -1;
    std::string title;
    int frame_count = -1;
    int source_file = 0;
    std::int64_t source_line = 0;  // 1-based

    bool operator==(const RawLogEntry&) const = default;
};

struct Warning {
    int source_file = 0;
    std::int64_t source_line = 0;
    std::string message;

    bool operator==(const Warning&) const = default;
};

struct FileInfo {
    int file_id = 0;
    std::string name;
    std::int64_t line_count = 0;
    std::int64_t entry_count = 0;
    std::int64_t rejected_count = 0;

    bool operator==(const FileInfo&) const = default;
};

struct LogStore {
    std::vector<RawLogEntry> entries;  // sorted by (user, ms, file, line)
    std::vector<UserKey> users;        // distinct, sorted
    std::vector<Warning> warnings;
    std::vector<FileInfo> files;
};

enum class DateOrder { DMY, MDY };

struct ParserOptions {
    DateOrder date_order = DateOrder::DMY;

    bool operator==(const ParserOptions&) const = default;
};

enum class ParseErrorKind {
    MalformedFieldCount,
    BadEventCode,
    BadTimestamp,
    BadInteger,
};

struct ParseError {
    ParseErrorKind kind;
    int source_file = 0;
    std::int64_t source_line = 0;
    std::string message;
};

struct ParsedLine {
    RawLogEntry entry;
    std::vector<Warning> warnings;  // advisory only (length mismatches)
};

using ParseOutcome = std::variant<ParsedLine, ParseError>;

namespace detail {

inline bool parse_int_field(std::string_view s, std::int64_t& out) {
    if (s.empty() || s.size() > 18) return false;
    std::int64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

// Fills ts from "DD/MM/YYYY" + "HH:MM:SS:mmm" text; returns an error
// message, or empty on success.
inline std::string parse_date_time(std::string_view date, std::string_view time,
                                   DateOrder order, Timestamp& ts) {
    auto dparts = split_on(date, '/');
    std::int64_t d0, d1, d2;
    if (dparts.size() != 3 || !parse_int_field(dparts[0], d0) ||
        !parse_int_field(dparts[1], d1) || !parse_int_field(dparts[2], d2))
        return "bad date '" + std::string(date) + "'";
    if (order == DateOrder::DMY) {
        ts.day = static_cast<int>(d0);
        ts.month = static_cast<int>(d1);
    } else {
        ts.month = static_cast<int>(d0);
        ts.day = static_cast<int>(d1);
    }
    ts.year = static_cast<int>(d2);
    if (!valid_date(ts.year, ts.month, ts.day))
        return "invalid date '" + std::string(date) + "'";

    auto tparts = split_on(time, ':');
    std::int64_t th, tm, tsec, tms;
    if (tparts.size() != 4 || !parse_int_field(tparts[0], th) ||
        !parse_int_field(tparts[1], tm) || !parse_int_field(tparts[2], tsec) ||
        !parse_int_field(tparts[3], tms))
        return "bad time '" + std::string(time) + "'";
    ts.hour = static_cast<int>(th);
    ts.minute = static_cast<int>(tm);
    ts.second = static_cast<int>(tsec);
    ts.millisecond = static_cast<int>(tms);
    if (!valid_time(ts.hour, ts.minute, ts.second, ts.millisecond))
        return "invalid time '" + std::string(time) + "'";
    return {};
}

}  // namespace detail

inline ParseOutcome parse_line(std::string_view line, int file_id, std::int64_t line_no,
                               const ParserOptions& opt = {}) {
    auto fail = [&](ParseErrorKind kind, std::string msg) {
        return ParseOutcome{ParseError{kind, file_id, line_no, std::move(msg)}};
    };

    std::vector<std::string> fields = split_tabs(line);
    // Tolerate one trailing separator (hand-edited logs sometimes carry it).
    if (fields.size() > 6 && fields.back().empty()) fields.pop_back();
    if (fields.size() < 6)
        return fail(ParseErrorKind::MalformedFieldCount,
                    "expected at least 6 fields, got " + std::to_string(fields.size()));

    RawLogEntry e;
    e.user.mac = fields[0];
    e.user.login_cipher = fields[1];
    e.source_file = file_id;
    e.source_line = line_no;

    if (std::string err = detail::parse_date_time(fields[2], fields[3], opt.date_order, e.ts);
        !err.empty())
        return fail(ParseErrorKind::BadTimestamp, std::move(err));
    e.ms = e.ts.epoch_ms();

    if (!detail::parse_int_field(fields[4], e.window_id))
        return fail(ParseErrorKind::BadInteger, "bad window id '" + fields[4] + "'");

    std::int64_t code;
    if (!detail::parse_int_field(fields[5], code) || code < 1 || code > 3)
        return fail(ParseErrorKind::BadEventCode, "bad event code '" + fields[5] + "'");
    e.event = static_cast<EventKind>(code);

    std::vector<Warning> warnings;
    auto check_len = [&](const char* what, int recorded, const std::string& text) {
        std::size_t actual = utf8_char_count(text);
        if (recorded >= 0 && static_cast<std::size_t>(recorded) != actual) {
            warnings.push_back(
                {file_id, line_no,
                 std::string(what) + " length field " + std::to_string(recorded) +
                     " does not match character count " + std::to_string(actual)});
        }
    };

    std::int64_t n;
    switch (e.event) {
        case EventKind::NavigateBegin:
            if (fields.size() != 8)
                return fail(ParseErrorKind::MalformedFieldCount,
                            "navigate-begin line needs 8 fields, got " +
                                std::to_string(fields.size()));
            if (!detail::parse_int_field(fields[6], n))
                return fail(ParseErrorKind::BadInteger, "bad url length '" + fields[6] + "'");
            e.url_len = static_cast<int>(n);
            e.url = fields[7];
            check_len("url", e.url_len, e.url);
            break;

        case EventKind::DocumentComplete: {
            if (fields.size() < 11)
                return fail(ParseErrorKind::MalformedFieldCount,
                            "document-complete line needs 11 fields, got " +
                                std::to_string(fields.size()));
            if (!detail::parse_int_field(fields[6], n))
                return fail(ParseErrorKind::BadInteger, "bad url length '" + fields[6] + "'");
            e.url_len = static_cast<int>(n);
            e.url = fields[7];
            if (!detail::parse_int_field(fields[8], n))
                return fail(ParseErrorKind::BadInteger, "bad title length '" + fields[8] + "'");
            e.title_len = static_cast<int>(n);
            // A stray tab inside the title splits it; everything between the
            // title-length and the trailing frame count belongs to the title.
            std::string title = fields[9];
            for (std::size_t i = 10; i + 1 < fields.size(); ++i) {
                title += '\t';
                title += fields[i];
            }
            e.title = std::move(title);
            if (!detail::parse_int_field(fields.back(), n))
                return fail(ParseErrorKind::BadInteger,
                            "bad frame count '" + fields.back() + "'");
            e.frame_count = static_cast<int>(n);
            check_len("url", e.url_len, e.url);
            check_len("title", e.title_len, e.title);
            break;
        }

        case EventKind::WindowClose:
            if (fields.size() != 6)
                return fail(ParseErrorKind::MalformedFieldCount,
                            "window-close line needs 6 fields, got " +
                                std::to_string(fields.size()));
            break;
    }

    return ParseOutcome{ParsedLine{std::move(e), std::move(warnings)}};
}

struct ParsedFile {
    int file_id = 0;
    std::string name;
    std::vector<RawLogEntry> entries;
    std::vector<Warning> warnings;
    std::int64_t line_count = 0;
    std::int64_t rejected_count = 0;
};

// Parse one whole log text. Bad lines become warnings, never abort the
// file: every input line ends up as exactly one entry or one rejection.
inline ParsedFile parse_log(std::string_view text, int file_id, std::string name = {},
                            const ParserOptions& opt = {}) {
    ParsedFile out;
    out.file_id = file_id;
    out.name = std::move(name);

    std::string decoded;
    if (!is_valid_utf8(text)) {
        decoded = latin1_to_utf8(text);  // whole-file fallback
        text = decoded;
    }

    std::int64_t line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        auto outcome = parse_line(line, file_id, line_no, opt);
        if (auto* ok = std::get_if<ParsedLine>(&outcome)) {
            out.entries.push_back(std::move(ok->entry));
            for (auto& w : ok->warnings) out.warnings.push_back(std::move(w));
        } else {
            const auto& err = std::get<ParseError>(outcome);
            out.warnings.push_back({file_id, line_no, "rejected: " + err.message});
            ++out.rejected_count;
        }
    }
    out.line_count = line_no;
    return out;
}

inline ParsedFile parse_log_file(const std::string& path, int file_id,
                                 const ParserOptions& opt = {}) {
    return parse_log(read_file_bytes(path), file_id, path, opt);
}

inline bool entry_order(const RawLogEntry& a, const RawLogEntry& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.ms != b.ms) return a.ms < b.ms;
    if (a.source_file != b.source_file) return a.source_file < b.source_file;
    return a.source_line < b.source_line;
}

inline LogStore merge_logs(std::vector<ParsedFile> files) {
    LogStore store;
    std::set<int> seen_ids;
    for (auto& f : files) {
        if (!seen_ids.insert(f.file_id).second)
            throw DuplicateFileId("duplicate file id " + std::to_string(f.file_id));
        store.files.push_back(
            {f.file_id, f.name, f.line_count,
             static_cast<std::int64_t>(f.entries.size()), f.rejected_count});
        store.entries.insert(store.entries.end(), std::make_move_iterator(f.entries.begin()),
                             std::make_move_iterator(f.entries.end()));
        store.warnings.insert(store.warnings.end(),
                              std::make_move_iterator(f.warnings.begin()),
                              std::make_move_iterator(f.warnings.end()));
    }
    std::stable_sort(store.entries.begin(), store.entries.end(), entry_order);
    std::stable_sort(store.warnings.begin(), store.warnings.end(),
                     [](const Warning& a, const Warning& b) {
                         if (a.source_file != b.source_file) return a.source_file < b.source_file;
                         return a.source_line < b.source_line;
                     });

    std::set<UserKey> users;
    for (const auto& e : store.entries) users.insert(e.user);
    store.users.assign(users.begin(), users.end());
    return store;
}

inline LogStore load_and_merge(const std::vector<std::string>& paths,
                               const ParserOptions& opt = {}) {
    std::vector<ParsedFile> files;
    files.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i)
        files.push_back(parse_log_file(paths[i], static_cast<int>(i), opt));
    return merge_logs(std::move(files));
}

// Half-open [begin, end) index ranges of the per-user partitions of a
// store's (sorted) entry sequence.
inline std::vector<std::pair<std::size_t, std::size_t>> user_ranges(
    const std::vector<RawLogEntry>& entries) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i + 1;
        while (j < entries.size() && entries[j].user == entries[i].user) ++j;
        ranges.emplace_back(i, j);
        i = j;
    }
    return ranges;
}

}  // namespace surfminer
