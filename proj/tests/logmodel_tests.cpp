#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "sample_log.hpp"
#include "surfminer/log_model.hpp"
#include "surfminer/store_io.hpp"

using namespace surfminer;

namespace {

RawLogEntry expect_entry(const ParseOutcome& outcome) {
    REQUIRE(std::holds_alternative<ParsedLine>(outcome));
    return std::get<ParsedLine>(outcome).entry;
}

ParseError expect_error(const ParseOutcome& outcome) {
    REQUIRE(std::holds_alternative<ParseError>(outcome));
    return std::get<ParseError>(outcome);
}

std::filesystem::path fresh_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("surfminer_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("parse_line reads a navigate-begin record") {
    auto e = expect_entry(parse_line(
        sample::event_line("22:23:08:712", {"262478", "01", "021", "http://www.google.com"}),
        3, 17));
    CHECK(e.user.mac == sample::kMac);
    CHECK(e.user.login_cipher == sample::kLogin);
    CHECK(e.ts.year == 2008);
    CHECK(e.ts.month == 5);
    CHECK(e.ts.day == 5);
    CHECK(e.ts.hour == 22);
    CHECK(e.ts.millisecond == 712);
    CHECK(e.ms == e.ts.epoch_ms());
    CHECK(e.window_id == 262478);
    CHECK(e.event == EventKind::NavigateBegin);
    CHECK(e.url_len == 21);
    CHECK(e.url == "http://www.google.com");
    CHECK(e.title_len == -1);
    CHECK(e.frame_count == -1);
    CHECK(e.source_file == 3);
    CHECK(e.source_line == 17);
}

TEST_CASE("parse_line reads a document-complete record with title") {
    auto outcome = parse_line(
        sample::event_line("22:23:13:609",
                           {"262478", "02", "021", "http://www.google.com", "006", "Google", "00"}),
        0, 2);
    auto e = expect_entry(outcome);
    CHECK(e.event == EventKind::DocumentComplete);
    CHECK(e.title_len == 6);
    CHECK(e.title == "Google");
    CHECK(e.frame_count == 0);
    CHECK(std::get<ParsedLine>(outcome).warnings.empty());
}

TEST_CASE("parse_line reads a window-close record") {
    auto e = expect_entry(parse_line(sample::event_line("22:28:14:201", {"393618", "03"}), 0, 12));
    CHECK(e.event == EventKind::WindowClose);
    CHECK(e.window_id == 393618);
    CHECK(e.url_len == -1);
    CHECK(e.url.empty());
    CHECK(e.title_len == -1);
    CHECK(e.frame_count == -1);
}

TEST_CASE("accented title lengths are counted in characters, not bytes") {
    auto outcome = parse_line(
        sample::event_line("22:24:18:813",
                           {"262478", "02", "052", sample::kSurveyUrl, "080", sample::kKbTitle,
                            "01"}),
        0, 7);
    auto e = expect_entry(outcome);
    CHECK(e.title == sample::kKbTitle);
    CHECK(e.title_len == 80);
    CHECK(utf8_char_count(e.title) == 80);
    CHECK(e.title.size() > 80);  // é and ô are two bytes each
    CHECK(std::get<ParsedLine>(outcome).warnings.empty());
}

TEST_CASE("length-field mismatches warn without rejecting") {
    auto outcome = parse_line(
        sample::event_line("22:23:47:137", {"262478", "01", "104", sample::kSearchUrl}), 0, 3);
    REQUIRE(std::holds_alternative<ParsedLine>(outcome));
    const auto& parsed = std::get<ParsedLine>(outcome);
    CHECK(parsed.entry.url_len == 104);
    CHECK(utf8_char_count(parsed.entry.url) == 100);
    REQUIRE(parsed.warnings.size() == 1);
    CHECK(parsed.warnings[0].source_line == 3);
    CHECK(parsed.warnings[0].message.find("104") != std::string::npos);
}

TEST_CASE("parse_line failure modes") {
    SECTION("too few fields") {
        auto err = expect_error(parse_line("a\tb\tc", 1, 5));
        CHECK(err.kind == ParseErrorKind::MalformedFieldCount);
        CHECK(err.source_file == 1);
        CHECK(err.source_line == 5);
    }
    SECTION("unknown event code") {
        auto err = expect_error(
            parse_line(sample::event_line("22:23:08:712", {"262478", "07", "003", "x:y"}), 0, 1));
        CHECK(err.kind == ParseErrorKind::BadEventCode);
    }
    SECTION("event code zero") {
        auto err = expect_error(
            parse_line(sample::event_line("22:23:08:712", {"262478", "00", "003", "x:y"}), 0, 1));
        CHECK(err.kind == ParseErrorKind::BadEventCode);
    }
    SECTION("impossible date") {
        auto err = expect_error(parse_line(
            sample::tabbed({sample::kMac, sample::kLogin, "32/01/2008", "10:00:00:000", "1",
                            "01", "003", "x:y"}),
            0, 1));
        CHECK(err.kind == ParseErrorKind::BadTimestamp);
    }
    SECTION("impossible time") {
        auto err = expect_error(parse_line(
            sample::tabbed({sample::kMac, sample::kLogin, "05/05/2008", "25:00:00:000", "1",
                            "01", "003", "x:y"}),
            0, 1));
        CHECK(err.kind == ParseErrorKind::BadTimestamp);
    }
    SECTION("non-numeric window id") {
        auto err = expect_error(parse_line(
            sample::tabbed({sample::kMac, sample::kLogin, "05/05/2008", "10:00:00:000", "winA",
                            "01", "003", "x:y"}),
            0, 1));
        CHECK(err.kind == ParseErrorKind::BadInteger);
    }
    SECTION("non-numeric url length") {
        auto err = expect_error(
            parse_line(sample::event_line("22:23:08:712", {"262478", "01", "xx", "x:y"}), 0, 1));
        CHECK(err.kind == ParseErrorKind::BadInteger);
    }
    SECTION("navigate-begin with missing url") {
        auto err = expect_error(
            parse_line(sample::event_line("22:23:08:712", {"262478", "01", "021"}), 0, 1));
        CHECK(err.kind == ParseErrorKind::MalformedFieldCount);
    }
    SECTION("document-complete with missing frame count") {
        auto err = expect_error(parse_line(
            sample::event_line("22:23:13:609",
                               {"262478", "02", "021", "http://www.google.com", "006", "Google"}),
            0, 1));
        CHECK(err.kind == ParseErrorKind::MalformedFieldCount);
    }
}

TEST_CASE("month-first date order is available as an option") {
    ParserOptions opt;
    opt.date_order = DateOrder::MDY;
    auto e = expect_entry(parse_line(
        sample::tabbed({sample::kMac, sample::kLogin, "05/13/2008", "10:00:00:000", "1", "01",
                        "003", "x:y"}),
        0, 1, opt));
    CHECK(e.ts.month == 5);
    CHECK(e.ts.day == 13);
}

TEST_CASE("parse_log on the sample excerpt") {
    auto parsed = parse_log(sample::sample_log(), 0, "sample.log");
    CHECK(parsed.line_count == 12);
    REQUIRE(parsed.entries.size() == 12);
    CHECK(parsed.rejected_count == 0);

    // two url-length mismatches on navigate-begins, plus url and title
    // mismatches on the completed search page
    CHECK(parsed.warnings.size() == 4);

    CHECK(parsed.entries[0].event == EventKind::NavigateBegin);
    CHECK(parsed.entries[11].event == EventKind::WindowClose);
    CHECK(parsed.entries[11].window_id == 393618);
    for (const auto& e : parsed.entries) CHECK(e.user.mac == sample::kMac);
}

TEST_CASE("parse_log totality: every line becomes an entry or a rejection") {
    std::string text = sample::sample_log();
    text += "complete garbage line\n";
    text += "\n";  // interior blank line
    text += sample::event_line("23:00:00:000", {"5", "03"});
    text += '\n';

    auto parsed = parse_log(text, 7);
    CHECK(parsed.line_count == 15);
    CHECK(parsed.entries.size() == 13);
    CHECK(parsed.rejected_count == 2);
    CHECK(static_cast<std::int64_t>(parsed.entries.size()) + parsed.rejected_count ==
          parsed.line_count);
}

TEST_CASE("parse_log is empty-safe") {
    auto parsed = parse_log("", 0);
    CHECK(parsed.entries.empty());
    CHECK(parsed.warnings.empty());
    CHECK(parsed.line_count == 0);
}

TEST_CASE("a latin-1 encoded file falls back cleanly") {
    // build a document-complete line, then re-encode it as Latin-1
    // (é = 0xE9, ô = 0xF4; the sample title is fully Latin-1 representable)
    std::string line =
        sample::tabbed({sample::kMac, "café", "05/05/2008", "22:24:18:813", "262478", "02",
                        "052", sample::kSurveyUrl, "080", sample::kKbTitle, "01"});
    std::string latin1;
    auto cps = utf8_decode(line);
    for (char32_t cp : cps) {
        REQUIRE(cp < 256);
        latin1 += static_cast<char>(cp);
    }
    REQUIRE_FALSE(is_valid_utf8(latin1));

    auto parsed = parse_log(latin1 + "\n", 0);
    REQUIRE(parsed.entries.size() == 1);
    CHECK(parsed.entries[0].title == sample::kKbTitle);
    CHECK(parsed.entries[0].title_len == 80);
    CHECK(parsed.warnings.empty());
}

TEST_CASE("merge_logs sorts each user partition by time") {
    // two files, same user, interleaved timestamps
    std::string f0 = sample::event_line("10:00:02:000", {"1", "01", "003", "x:a"}) + "\n" +
                     sample::event_line("10:00:04:000", {"1", "01", "003", "x:b"}) + "\n";
    std::string f1 = sample::event_line("10:00:01:000", {"2", "01", "003", "x:c"}) + "\n" +
                     sample::event_line("10:00:03:000", {"2", "01", "003", "x:d"}) + "\n";

    auto store = merge_logs({parse_log(f0, 0, "f0"), parse_log(f1, 1, "f1")});
    REQUIRE(store.entries.size() == 4);
    CHECK(std::is_sorted(store.entries.begin(), store.entries.end(), entry_order));
    CHECK(store.entries[0].url == "x:c");
    CHECK(store.entries[1].url == "x:a");
    CHECK(store.entries[2].url == "x:d");
    CHECK(store.entries[3].url == "x:b");
    REQUIRE(store.users.size() == 1);
    CHECK(store.users[0].mac == sample::kMac);

    SECTION("restriction to one file preserves that file's order") {
        std::vector<std::string> f0_urls;
        for (const auto& e : store.entries)
            if (e.source_file == 0) f0_urls.push_back(e.url);
        CHECK(f0_urls == std::vector<std::string>{"x:a", "x:b"});
    }
}

TEST_CASE("merge_logs groups users into contiguous partitions") {
    std::string text;
    auto mk = [](const std::string& mac, const std::string& time) {
        return sample::tabbed({mac, "login", "05/05/2008", time, "1", "01", "003", "x:y"}) + "\n";
    };
    text += mk("BB-00-00-00-00-01", "10:00:00:000");
    text += mk("AA-00-00-00-00-01", "11:00:00:000");
    text += mk("BB-00-00-00-00-01", "12:00:00:000");
    text += mk("AA-00-00-00-00-01", "13:00:00:000");

    auto store = merge_logs({parse_log(text, 0)});
    REQUIRE(store.entries.size() == 4);
    auto ranges = user_ranges(store.entries);
    REQUIRE(ranges.size() == 2);
    CHECK(store.entries[0].user.mac == "AA-00-00-00-00-01");
    CHECK(store.entries[2].user.mac == "BB-00-00-00-00-01");
    REQUIRE(store.users.size() == 2);
    CHECK(store.users[0].mac == "AA-00-00-00-00-01");
}

TEST_CASE("merge_logs rejects duplicate file ids") {
    auto a = parse_log("", 1, "a");
    auto b = parse_log("", 1, "b");
    CHECK_THROWS_AS(merge_logs({a, b}), DuplicateFileId);
}

TEST_CASE("merging six differently sized files conserves the total entry count") {
    const std::vector<std::int64_t> sizes = {38863, 1542, 1813, 27707, 5539, 8757};
    std::vector<ParsedFile> files;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        std::string mac = "00-0A-CD-01-C6-6" + std::to_string(i);
        std::string text;
        text.reserve(static_cast<std::size_t>(sizes[i]) * 64);
        for (std::int64_t k = 0; k < sizes[i]; ++k) {
            int h = static_cast<int>(k / 3600000);
            int m = static_cast<int>((k / 60000) % 60);
            int s = static_cast<int>((k / 1000) % 60);
            char buf[16];
            std::snprintf(buf, sizeof buf, "%02d:%02d:%02d:%03d", h, m, s,
                          static_cast<int>(k % 1000));
            text += sample::tabbed({mac, "u", "05/05/2008", buf, "1", "03"});
            text += '\n';
        }
        files.push_back(parse_log(text, static_cast<int>(i)));
        CHECK(files.back().line_count == sizes[i]);
    }
    auto store = merge_logs(std::move(files));
    CHECK(store.entries.size() == 84221);
    CHECK(store.files.size() == 6);
}

TEST_CASE("store round-trip is the identity") {
    auto dir = fresh_dir("store_roundtrip");

    SECTION("empty store") {
        LogStore empty;
        persist_store(empty, dir.string());
        auto loaded = load_store(dir.string());
        CHECK(loaded.entries.empty());
        CHECK(loaded.users.empty());
        CHECK(loaded.warnings.empty());
        CHECK(loaded.files.empty());
    }

    SECTION("sample excerpt") {
        auto store = merge_logs({parse_log(sample::sample_log(), 0, "sample.log")});
        persist_store(store, dir.string());
        auto loaded = load_store(dir.string());
        CHECK(loaded.entries == store.entries);
        CHECK(loaded.users == store.users);
        CHECK(loaded.warnings == store.warnings);
        CHECK(loaded.files == store.files);
    }

    SECTION("fields with embedded separators survive") {
        LogStore store;
        RawLogEntry e;
        e.user = {"AA-BB-CC-DD-EE-FF", "log\tin\\weird"};
        e.ts = {2008, 5, 5, 1, 2, 3, 4};
        e.ms = e.ts.epoch_ms();
        e.window_id = 9;
        e.event = EventKind::DocumentComplete;
        e.url_len = 3;
        e.url = "x:y";
        e.title_len = 9;
        e.title = "tab\there\n";
        e.frame_count = 0;
        e.source_file = 0;
        e.source_line = 1;
        store.entries.push_back(e);
        store.users.push_back(e.user);
        store.files.push_back({0, "weird.log", 1, 1, 0});
        persist_store(store, dir.string());
        auto loaded = load_store(dir.string());
        REQUIRE(loaded.entries.size() == 1);
        CHECK(loaded.entries == store.entries);
    }

    std::filesystem::remove_all(dir);
}

TEST_CASE("store loading verifies checksums and version") {
    auto dir = fresh_dir("store_verify");
    auto store = merge_logs({parse_log(sample::sample_log(), 0, "sample.log")});
    persist_store(store, dir.string());

    SECTION("tampered table fails the checksum") {
        auto path = dir / "entries.tsv";
        std::string body = read_file_bytes(path);
        body += "tampered\n";
        write_file_bytes(path, body);
        CHECK_THROWS_AS(load_store(dir.string()), ChecksumMismatch);
    }

    SECTION("future format version is refused") {
        auto path = dir / "manifest.tsv";
        std::string body = read_file_bytes(path);
        body.replace(body.find("\t1\n"), 3, "\t999\n");
        write_file_bytes(path, body);
        CHECK_THROWS_AS(load_store(dir.string()), ManifestVersionMismatch);
    }

    SECTION("missing table file is an io failure") {
        std::filesystem::remove(dir / "users.tsv");
        CHECK_THROWS_AS(load_store(dir.string()), IoFailure);
    }

    std::filesystem::remove_all(dir);
}
