#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "surfminer/errors.hpp"
#include "surfminer/log_model.hpp"
#include "surfminer/tsv.hpp"

// LogStore persistence: a directory of tab-delimited tables plus a
// manifest carrying the format version and a checksum per table, so a
// half-written or hand-edited store is detected at load time.

namespace surfminer {

inline constexpr const char* kStoreFormat = "surfminer-store";
inline constexpr int kStoreVersion = 1;

namespace detail {

inline void write_table(const std::string& dir, const std::string& name,
                        const std::string& body,
                        std::vector<std::pair<std::string, std::uint64_t>>& sums) {
    write_file_bytes(dir + "/" + name, body);
    sums.emplace_back(name, fnv1a64(body));
}

inline std::string read_checked(const std::string& dir, const std::string& name,
                                std::uint64_t expected) {
    std::string body = read_file_bytes(dir + "/" + name);
    if (fnv1a64(body) != expected)
        throw ChecksumMismatch("checksum mismatch for " + name);
    return body;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace detail

inline std::string persist_store(const LogStore& store, const std::string& dir) {
    std::vector<std::pair<std::string, std::uint64_t>> sums;

    std::string entries = "# file\tline\tmac\tlogin\tdate\ttime\twindow\tevent\turl_len\turl\ttitle_len\ttitle\tframe_count\n";
    for (const auto& e : store.entries) {
        entries += join_row({std::to_string(e.source_file), std::to_string(e.source_line),
                             e.user.mac, e.user.login_cipher, format_date(e.ts),
                             format_time(e.ts), std::to_string(e.window_id),
                             event_code(e.event), std::to_string(e.url_len), e.url,
                             std::to_string(e.title_len), e.title,
                             std::to_string(e.frame_count)});
        entries += '\n';
    }
    detail::write_table(dir, "entries.tsv", entries, sums);

    std::string users = "# mac\tlogin\n";
    for (const auto& u : store.users) {
        users += join_row({u.mac, u.login_cipher});
        users += '\n';
    }
    detail::write_table(dir, "users.tsv", users, sums);

    std::string warnings = "# file\tline\tmessage\n";
    for (const auto& w : store.warnings) {
        warnings += join_row({std::to_string(w.source_file), std::to_string(w.source_line),
                              w.message});
        warnings += '\n';
    }
    detail::write_table(dir, "warnings.tsv", warnings, sums);

    std::string files = "# id\tname\tlines\tentries\trejected\n";
    for (const auto& f : store.files) {
        files += join_row({std::to_string(f.file_id), f.name, std::to_string(f.line_count),
                           std::to_string(f.entry_count), std::to_string(f.rejected_count)});
        files += '\n';
    }
    detail::write_table(dir, "files.tsv", files, sums);

    std::string manifest = std::string(kStoreFormat) + "\t" + std::to_string(kStoreVersion) + "\n";
    for (const auto& [name, sum] : sums) manifest += name + "\t" + detail::hex64(sum) + "\n";
    std::string manifest_path = dir + "/manifest.tsv";
    write_file_bytes(manifest_path, manifest);
    return manifest_path;
}

inline LogStore load_store(const std::string& dir) {
    std::string manifest = read_file_bytes(dir + "/manifest.tsv");
    auto lines = split_lines(manifest);
    if (lines.empty()) throw ManifestVersionMismatch("empty manifest in " + dir);
    auto head = split_tabs(lines[0]);
    if (head.size() != 2 || head[0] != kStoreFormat ||
        detail::to_i64(head[1], "manifest") != kStoreVersion)
        throw ManifestVersionMismatch("unsupported store format: " + std::string(lines[0]));

    std::uint64_t sums[4] = {};
    const char* names[4] = {"entries.tsv", "users.tsv", "warnings.tsv", "files.tsv"};
    bool found[4] = {};
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto parts = split_tabs(lines[i]);
        if (parts.size() != 2) throw IoFailure("malformed manifest line: " + std::string(lines[i]));
        for (int k = 0; k < 4; ++k) {
            if (parts[0] == names[k]) {
                sums[k] = std::stoull(parts[1], nullptr, 16);
                found[k] = true;
            }
        }
    }
    for (int k = 0; k < 4; ++k)
        if (!found[k]) throw IoFailure(std::string("manifest missing entry for ") + names[k]);

    LogStore store;

    for (const auto& row :
         parse_tsv_text(detail::read_checked(dir, "entries.tsv", sums[0]))) {
        if (row.size() != 13) throw IoFailure("bad entries.tsv row width");
        RawLogEntry e;
        e.source_file = static_cast<int>(detail::to_i64(row[0], "entries.tsv"));
        e.source_line = detail::to_i64(row[1], "entries.tsv");
        e.user.mac = row[2];
        e.user.login_cipher = row[3];
        if (std::string err = detail::parse_date_time(row[4], row[5], DateOrder::DMY, e.ts);
            !err.empty())
            throw IoFailure("entries.tsv: " + err);
        e.ms = e.ts.epoch_ms();
        e.window_id = detail::to_i64(row[6], "entries.tsv");
        std::int64_t code = detail::to_i64(row[7], "entries.tsv");
        if (code < 1 || code > 3) throw IoFailure("bad event code in entries.tsv");
        e.event = static_cast<EventKind>(code);
        e.url_len = static_cast<int>(detail::to_i64(row[8], "entries.tsv"));
        e.url = row[9];
        e.title_len = static_cast<int>(detail::to_i64(row[10], "entries.tsv"));
        e.title = row[11];
        e.frame_count = static_cast<int>(detail::to_i64(row[12], "entries.tsv"));
        store.entries.push_back(std::move(e));
    }

    for (const auto& row : parse_tsv_text(detail::read_checked(dir, "users.tsv", sums[1]))) {
        if (row.size() != 2) throw IoFailure("bad users.tsv row width");
        store.users.push_back({row[0], row[1]});
    }

    for (const auto& row :
         parse_tsv_text(detail::read_checked(dir, "warnings.tsv", sums[2]))) {
        if (row.size() != 3) throw IoFailure("bad warnings.tsv row width");
        store.warnings.push_back({static_cast<int>(detail::to_i64(row[0], "warnings.tsv")),
                                  detail::to_i64(row[1], "warnings.tsv"), row[2]});
    }

    for (const auto& row : parse_tsv_text(detail::read_checked(dir, "files.tsv", sums[3]))) {
        if (row.size() != 5) throw IoFailure("bad files.tsv row width");
        store.files.push_back({static_cast<int>(detail::to_i64(row[0], "files.tsv")), row[1],
                               detail::to_i64(row[2], "files.tsv"),
                               detail::to_i64(row[3], "files.tsv"),
                               detail::to_i64(row[4], "files.tsv")});
    }

    return store;
}

}  // namespace surfminer
