#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "surfminer/errors.hpp"

// Small helpers for the tab-delimited table files every stage persists.
// Escaping keeps round-trips total even when a field carries a tab or
// newline (titles from the whitespace-fallback parse path cannot, but the
// persistence layer does not rely on that).

namespace surfminer {

inline std::string tsv_escape(std::string_view field) {
    std::string out;
    out.reserve(field.size());
    for (char c : field) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string tsv_unescape(std::string_view field) {
    std::string out;
    out.reserve(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (field[i] == '\\' && i + 1 < field.size()) {
            switch (field[++i]) {
                case '\\': out += '\\'; break;
                case 't': out += '\t'; break;
                case 'n': out += '\n'; break;
                case 'r': out += '\r'; break;
                default: out += field[i];
            }
        } else {
            out += field[i];
        }
    }
    return out;
}

// Raw split on the separator, no unescaping. Keeps empty fields.
inline std::vector<std::string> split_list(std::string_view line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            fields.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

inline std::vector<std::string> split_tabs(std::string_view line) {
    return split_list(line, '\t');
}

inline std::string join_row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += '\t';
        line += tsv_escape(fields[i]);
    }
    return line;
}

inline std::vector<std::string> parse_row(std::string_view line) {
    std::vector<std::string> out;
    for (auto& f : split_tabs(line)) out.push_back(tsv_unescape(f));
    return out;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoFailure("cannot read " + path.string());
    return buf.str();
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoFailure("cannot write " + path.string());
}

// Splits text into lines; accepts \n and \r\n, drops the terminators.
inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') {
            std::size_t end = i;
            if (end > start && text[end - 1] == '\r') --end;
            lines.emplace_back(text.substr(start, end - start));
            start = i + 1;
        }
    }
    if (start < text.size()) {
        std::size_t end = text.size();
        if (end > start && text[end - 1] == '\r') --end;
        lines.emplace_back(text.substr(start, end - start));
    }
    return lines;
}

// Parses escaped TSV text into rows of unescaped fields.
// Lines starting with '#' are comments and are skipped.
inline std::vector<std::vector<std::string>> parse_tsv_text(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& line : split_lines(text)) {
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(parse_row(line));
    }
    return rows;
}

inline std::vector<std::vector<std::string>> read_tsv_file(const std::filesystem::path& path) {
    return parse_tsv_text(read_file_bytes(path));
}

namespace detail {

// Strict integer parse for persisted tables; context names the file so
// loader errors point somewhere useful.
inline std::int64_t to_i64(const std::string& s, const char* context) {
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoFailure(std::string("bad integer '") + s + "' in " + context);
    }
}

}  // namespace detail

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic double formatting for persisted tables: shortest string
// that parses back to the same value.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

}  // namespace surfminer
