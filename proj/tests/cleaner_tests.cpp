#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "builders.hpp"
#include "sample_log.hpp"
#include "surfminer/cleaner.hpp"

using namespace surfminer;
using builders::Log;

TEST_CASE("validate_mac accepts the canonical shape only") {
    CHECK(validate_mac("00-0A-CD-01-C6-69"));
    CHECK(validate_mac("FF-FF-FF-FF-FF-FF"));
    CHECK_FALSE(validate_mac(""));
    CHECK_FALSE(validate_mac("00-0a-cd-01-c6-69"));   // lowercase is not normalized
    CHECK_FALSE(validate_mac("00:0A:CD:01:C6:69"));   // wrong separator
    CHECK_FALSE(validate_mac("00-0A-CD-01-C6"));      // too short
    CHECK_FALSE(validate_mac("00-0A-CD-01-C6-69-00")); // too long
    CHECK_FALSE(validate_mac("G0-0A-CD-01-C6-69"));   // not hex
    CHECK_FALSE(validate_mac("00-0A-CD-01-C6-6"));

    SECTION("the all-zero address is configurable") {
        CHECK_FALSE(validate_mac("00-00-00-00-00-00"));
        CleaningConfig cfg;
        cfg.zero_mac_invalid = false;
        CHECK(validate_mac("00-00-00-00-00-00", cfg));
    }
}

TEST_CASE("filter_invalid_mac splits on user mac validity") {
    Log log;
    log.nb("http://a.com/", 0);
    log.user("junk##").nb("http://b.com/", 1000);
    log.user("00-00-00-00-00-00").nb("http://c.com/", 2000);
    log.user(sample::kMac).nb("http://d.com/", 3000);

    auto [kept, removed] = filter_invalid_mac(log.entries());
    CHECK(kept.size() == 2);
    CHECK(removed.size() == 2);
    CHECK(removed[0].user.mac == "junk##");

    SECTION("an all-valid set loses nothing") {
        auto parsed = parse_log(sample::sample_log(), 0);
        auto [k2, r2] = filter_invalid_mac(parsed.entries);
        CHECK(k2.size() == 12);
        CHECK(r2.empty());
    }
}

TEST_CASE("strip_params splits at the first question mark") {
    auto r = strip_params("http://www.google.com/search?hl=fr&q=x");
    CHECK(r.base == "http://www.google.com/search");
    CHECK(r.params == "hl=fr&q=x");
    CHECK(r.has_params);
    CHECK(r.base + "?" + r.params == "http://www.google.com/search?hl=fr&q=x");

    auto plain = strip_params("http://www.google.com");
    CHECK(plain.base == "http://www.google.com");
    CHECK_FALSE(plain.has_params);

    auto nested = strip_params("http://a/b?p=1?q=2");
    CHECK(nested.base == "http://a/b");
    CHECK(nested.params == "p=1?q=2");
}

TEST_CASE("url scheme and host extraction") {
    CHECK(url_scheme("http://www.google.com") == "http");
    CHECK(url_scheme("HTTP://UP.example") == "http");
    CHECK(url_scheme("ftp://files.example.org/pub") == "ftp");
    CHECK(url_scheme("about:blank") == "about");
    CHECK(url_scheme("file:///C:/x.html") == "file");
    CHECK(url_scheme("no scheme here") == "");
    CHECK(url_scheme("1http://x") == "");

    CHECK(url_host("http://www.google.com/search") == "www.google.com");
    CHECK(url_host("http://Example.COM") == "example.com");
    CHECK(url_host("about:blank") == "");
    CHECK(url_host("http://host?q=1") == "host");
}

TEST_CASE("encode_urls assigns first-seen consecutive codes on base urls") {
    Log log;
    log.nb("http://a.com/x?p=1", 0);
    log.dc("http://a.com/x?p=2", "A", 0, 500);
    log.nb("http://b.com/", 1000);
    log.close(2000);

    auto enc = log.encoded();
    REQUIRE(enc.entries.size() == 4);
    CHECK(enc.entries[0].url_id == 0);
    CHECK(enc.entries[1].url_id == 0);  // same base, different params
    CHECK(enc.entries[2].url_id == 1);
    CHECK(enc.entries[3].url_id == -1);  // window close has no url

    REQUIRE(enc.urls.size() == 2);
    CHECK(enc.urls[0].base_url == "http://a.com/x");
    CHECK(enc.urls[0].scheme == "http");
    CHECK(enc.urls[0].host == "a.com");
    CHECK(enc.urls[1].base_url == "http://b.com/");

    REQUIRE(enc.params.size() == 2);
    CHECK(enc.params[0].url_id == 0);
    CHECK(enc.params[0].raw_params == "p=1");
    CHECK(enc.params[1].raw_params == "p=2");
    CHECK(enc.entries[0].param_id == 0);
    CHECK(enc.entries[1].param_id == 1);
    CHECK(enc.entries[2].param_id == -1);
}

TEST_CASE("encode_urls on the sample excerpt finds five distinct bases") {
    auto parsed = parse_log(sample::sample_log(), 0);
    auto enc = encode_urls(parsed.entries);
    REQUIRE(enc.urls.size() == 5);
    CHECK(enc.urls[0].base_url == "http://www.google.com");
    CHECK(enc.urls[1].base_url == "http://www.google.com/search");
    CHECK(enc.urls[2].base_url == sample::kKbUrl);
    CHECK(enc.urls[3].base_url == sample::kSurveyUrl);
    CHECK(enc.urls[4].base_url == "about:blank");
    // the three search events share one code and each carries its params row
    CHECK(enc.entries[2].url_id == 1);
    CHECK(enc.entries[3].url_id == 1);
    CHECK(enc.entries[10].url_id == 1);
    CHECK(enc.params.size() == 3);
}

TEST_CASE("encode_urls of nothing is nothing") {
    auto enc = encode_urls({});
    CHECK(enc.entries.empty());
    CHECK(enc.urls.empty());
    CHECK(enc.params.empty());
}

TEST_CASE("filter_untargeted keeps traced schemes and close events") {
    Log log;
    log.nb("http://a.com/", 0);
    log.nb("about:blank", 1000);
    log.nb("file:///C:/x.html", 2000);
    log.nb("ftp://files.org/pub", 3000);
    log.nb("HTTP://b.com/", 4000);
    log.close(5000);

    auto enc = log.encoded();
    auto [kept, removed] = filter_untargeted(std::move(enc.entries), enc.urls);
    REQUIRE(kept.size() == 4);
    CHECK(kept[0].url_id == 0);                          // http
    CHECK(kept[1].url_id == 3);                          // ftp
    CHECK(kept[2].url_id == 4);                          // HTTP, case-folded
    CHECK(kept[3].event == EventKind::WindowClose);      // closes always pass
    REQUIRE(removed.size() == 2);

    SECTION("the scheme set is configurable") {
        CleaningConfig cfg;
        cfg.allowed_schemes = {"about"};
        auto enc2 = log.encoded();
        auto [k2, r2] = filter_untargeted(std::move(enc2.entries), enc2.urls, cfg);
        REQUIRE(k2.size() == 2);  // about:blank + close
        CHECK(k2[0].url_id == 1);
    }
}

TEST_CASE("filter_nonlatin drops entries with non-latin titles or urls") {
    Log log;
    log.dc("http://a.com/", "Google", 0, 0);
    log.dc("http://b.com/", "Déterminait comment", 0, 1000);
    log.dc("http://c.com/", "مرحبا بكم", 0, 2000);
    log.nb("http://d.com/%D9%85%D8%B1%D8%AD", 3000);      // Arabic, percent-encoded
    log.nb("http://e.com/path?q=%D0%BF%D1%80%D0%B8", 4000);  // Cyrillic in params
    log.nb("http://f.com/plain", 5000);

    auto enc = log.encoded();
    auto [kept, removed] = filter_nonlatin(std::move(enc.entries), enc.urls, enc.params);
    CHECK(kept.size() == 3);
    REQUIRE(removed.size() == 3);
    CHECK(removed[0].title == "مرحبا بكم");

    SECTION("the filter can be switched off") {
        CleaningConfig cfg;
        cfg.nonlatin_filter_on = false;
        auto enc2 = log.encoded();
        auto [k2, r2] = filter_nonlatin(std::move(enc2.entries), enc2.urls, enc2.params, cfg);
        CHECK(k2.size() == 6);
        CHECK(r2.empty());
    }
}

TEST_CASE("remove_frame_events collapses a frameset episode to its anchor pair") {
    Log log;
    log.nb("http://top.com/page", 0);
    log.nb("http://top.com/f1", 100);
    log.nb("http://top.com/f2", 150);
    log.nb("http://top.com/f3", 200);
    log.dc("http://top.com/f1", "Top Title", 0, 300);
    log.dc("http://top.com/f2", "Top Title", 0, 350);
    log.dc("http://top.com/f3", "Top Title", 0, 400);
    log.dc("http://top.com/page", "Top Title", 3, 450);

    auto enc = log.encoded();
    auto [kept, removed] = remove_frame_events(std::move(enc.entries));
    REQUIRE(kept.size() == 2);
    CHECK(removed.size() == 6);
    CHECK(kept[0].event == EventKind::NavigateBegin);
    CHECK(kept[0].url_id == 0);
    CHECK(kept[1].event == EventKind::DocumentComplete);
    CHECK(kept[1].url_id == 0);
    CHECK(kept[1].frame_count == 3);
}

TEST_CASE("remove_frame_events leaves frameless pages untouched") {
    Log log;
    log.nb("http://a.com/", 0);
    log.dc("http://a.com/", "A", 0, 500);
    log.nb("http://b.com/", 1000);
    log.dc("http://b.com/", "B", 0, 1500);
    log.close(2000);

    auto enc = log.encoded();
    auto [kept, removed] = remove_frame_events(std::move(enc.entries));
    CHECK(kept.size() == 5);
    CHECK(removed.empty());
}

TEST_CASE("remove_frame_events on the sample excerpt") {
    // applied straight to the encoded excerpt (before any scheme filter),
    // the lazy frame loads after the frameset's completion are swept up too
    auto parsed = parse_log(sample::sample_log(), 0);
    auto enc = encode_urls(parsed.entries);
    auto [kept, removed] = remove_frame_events(std::move(enc.entries));

    REQUIRE(removed.size() == 4);
    // the subsidiary pair inside the episode
    CHECK(removed[0].url_id == 3);  // surveysubmit navigate-begin
    CHECK(removed[1].url_id == 3);  // surveysubmit complete
    // the trailing lazily-loaded frame still carrying the top title
    CHECK(removed[2].url_id == 4);  // about:blank navigate-begin
    CHECK(removed[3].url_id == 4);  // about:blank complete

    // anchor pair survives
    int kb_events = 0;
    for (const auto& e : kept)
        if (e.url_id == 2) ++kb_events;
    CHECK(kb_events == 2);
    CHECK(kept.size() == 8);
}

TEST_CASE("remove_frame_events leaves unterminated navigations intact") {
    Log log;
    log.nb("http://a.com/", 0);
    log.nb("http://a.com/f1", 100);  // no completion ever

    auto enc = log.encoded();
    auto [kept, removed] = remove_frame_events(std::move(enc.entries));
    CHECK(kept.size() == 2);
    CHECK(removed.empty());
}

TEST_CASE("remove_frame_events never deletes window closes") {
    Log log;
    log.nb("http://top.com/", 0);
    log.nb("http://top.com/f1", 100);
    log.close(200);  // crash-style cut mid-episode
    log.nb("http://top.com/", 300);
    log.dc("http://top.com/", "T", 2, 400);

    auto enc = log.encoded();
    auto [kept, removed] = remove_frame_events(std::move(enc.entries));
    for (const auto& e : removed) CHECK(e.event != EventKind::WindowClose);
    int closes = 0;
    for (const auto& e : kept)
        if (e.event == EventKind::WindowClose) ++closes;
    CHECK(closes == 1);
}

TEST_CASE("frame episodes are tracked per window") {
    Log log;
    log.window(1).nb("http://top.com/", 0);
    log.window(2).nb("http://other.com/", 50);
    log.window(1).nb("http://top.com/f1", 100);
    log.window(2).dc("http://other.com/", "Other", 0, 150);
    log.window(1).dc("http://top.com/f1", "T", 0, 200);
    log.window(1).dc("http://top.com/", "T", 1, 300);

    auto enc = log.encoded();
    auto [kept, removed] = remove_frame_events(std::move(enc.entries));
    REQUIRE(removed.size() == 2);
    for (const auto& e : removed) CHECK(e.window_id == 1);
    CHECK(kept.size() == 4);
}

TEST_CASE("sweep_orphans drops entries that precede a window's first navigation") {
    Log log;
    log.window(7).dc("http://a.com/", "A", 0, 0);  // complete before any begin
    log.window(7).nb("http://a.com/", 1000);
    log.window(7).dc("http://a.com/", "A", 0, 2000);
    log.window(9).close(3000);  // close for a never-opened window

    auto enc = log.encoded();
    auto [kept, removed] = sweep_orphans(std::move(enc.entries));
    REQUIRE(removed.size() == 2);
    CHECK(removed[0].event == EventKind::DocumentComplete);
    CHECK(removed[1].event == EventKind::WindowClose);
    CHECK(kept.size() == 2);
}

TEST_CASE("a window closed and revisited must reopen with a navigation") {
    Log log;
    log.nb("http://a.com/", 0);
    log.close(1000);
    log.dc("http://a.com/", "late", 0, 2000);  // event after close: orphan
    log.nb("http://b.com/", 3000);             // legitimate reopen
    log.dc("http://b.com/", "B", 0, 4000);

    auto enc = log.encoded();
    auto [kept, removed] = sweep_orphans(std::move(enc.entries));
    REQUIRE(removed.size() == 1);
    CHECK(removed[0].title == "late");
    CHECK(kept.size() == 4);
}

TEST_CASE("run_cleaning on an empty store yields an all-zero report") {
    LogStore store;
    auto result = run_cleaning(store);
    CHECK(result.report == CleaningReport{});
    CHECK(result.log.entries.empty());
    CHECK(result.report.physical_cleaning_ratio == 0.0);
}

TEST_CASE("run_cleaning on the sample excerpt attributes every removal") {
    auto store = merge_logs({parse_log(sample::sample_log(), 0, "sample.log")});
    auto result = run_cleaning(store);

    CHECK(result.report.loaded == 12);
    CHECK(result.report.invalid_mac_removed == 0);
    CHECK(result.report.untargeted_removed == 2);   // the about:blank pair
    CHECK(result.report.nonlatin_removed == 0);
    CHECK(result.report.frame_events_removed == 2); // the surveysubmit pair
    CHECK(result.report.orphans_removed == 1);      // dangling close of the second window
    CHECK(result.report.retained == 7);
    CHECK(result.report.loaded ==
          result.report.retained + result.report.total_removed());
    CHECK(result.report.physical_cleaning_ratio == Catch::Approx(100.0 * 5 / 12));

    // url/param tables still describe the full (mac-valid) log
    CHECK(result.log.urls.size() == 5);

    // per-file accounting mirrors the single source file
    REQUIRE(result.per_file.size() == 1);
    CHECK(result.per_file.at(0) == result.report);
}

TEST_CASE("each removed entry counts under exactly one stage") {
    Log log;
    log.user("bad-mac").nb("file:///C:/x.html", 0);  // invalid mac AND untargeted
    log.user(sample::kMac).nb("http://a.com/", 1000);
    log.dc("http://a.com/", "A", 0, 2000);

    auto result = run_cleaning(log.store());
    CHECK(result.report.invalid_mac_removed == 1);
    CHECK(result.report.untargeted_removed == 0);  // never double-counted
    CHECK(result.report.retained == 2);
    CHECK(result.report.loaded == result.report.retained + result.report.total_removed());
}

TEST_CASE("cleaning is conservative and idempotent") {
    // a messy log exercising every stage at once
    Log log;
    log.nb("http://a.com/", 0);
    log.dc("http://a.com/", "A", 0, 500);
    log.user("??").nb("http://x.com/", 600);
    log.user(sample::kMac).nb("about:config", 700);
    log.dc("http://z.com/", "пример", 0, 800);     // orphan window w/ non-latin title
    log.window(2).nb("http://top.com/", 1000);
    log.window(2).nb("http://top.com/f", 1100);
    log.window(2).dc("http://top.com/f", "T", 0, 1200);
    log.window(2).dc("http://top.com/", "T", 1, 1300);
    log.window(1).close(2000);
    log.window(3).dc("http://late.com/", "L", 0, 2100);  // orphan

    auto result = run_cleaning(log.store());
    const auto& r = result.report;
    CHECK(r.loaded == 11);
    CHECK(r.invalid_mac_removed == 1);
    CHECK(r.untargeted_removed == 1);
    CHECK(r.nonlatin_removed == 1);
    CHECK(r.frame_events_removed == 2);
    CHECK(r.orphans_removed == 1);
    CHECK(r.retained == 5);
    CHECK(r.loaded == r.retained + r.total_removed());

    SECTION("re-running on the reconstituted output removes nothing") {
        // rebuild raw-looking entries from the cleaned output
        ParsedFile f;
        f.file_id = 0;
        for (const auto& e : result.log.entries) {
            RawLogEntry raw;
            raw.user = e.user;
            raw.ts = e.ts;
            raw.ms = e.ms;
            raw.window_id = e.window_id;
            raw.event = e.event;
            if (e.url_id >= 0) {
                raw.url = result.log.urls[static_cast<std::size_t>(e.url_id)].base_url;
                if (e.param_id >= 0)
                    raw.url += "?" + result.log.params[static_cast<std::size_t>(e.param_id)].raw_params;
                raw.url_len = static_cast<int>(utf8_char_count(raw.url));
            }
            raw.title = e.title;
            if (e.event == EventKind::DocumentComplete) {
                raw.title_len = static_cast<int>(utf8_char_count(e.title));
                raw.frame_count = e.frame_count;
            }
            raw.source_file = e.source_file;
            raw.source_line = e.source_line;
            f.entries.push_back(std::move(raw));
        }
        f.line_count = static_cast<std::int64_t>(f.entries.size());
        auto again = run_cleaning(merge_logs({std::move(f)}));
        CHECK(again.report.total_removed() == 0);
        CHECK(again.report.retained == r.retained);
    }
}

TEST_CASE("cleaning a store equals cleaning each user partition separately") {
    Log a;
    a.user("AA-00-00-00-00-01").nb("http://a.com/", 0);
    a.dc("http://a.com/", "A", 0, 500);
    a.nb("about:blank", 600);
    a.close(1000);

    Log b;
    b.user("BB-00-00-00-00-02").window(5).dc("http://b.com/", "B", 0, 100);  // orphan
    b.window(6).nb("http://b.com/", 200);
    b.close(900);

    Log both;
    both.user("AA-00-00-00-00-01").nb("http://a.com/", 0);
    both.dc("http://a.com/", "A", 0, 500);
    both.nb("about:blank", 600);
    both.close(1000);
    both.user("BB-00-00-00-00-02").window(5).dc("http://b.com/", "B", 0, 100);
    both.window(6).nb("http://b.com/", 200);
    both.close(900);

    auto ra = run_cleaning(a.store());
    auto rb = run_cleaning(b.store());
    auto rboth = run_cleaning(both.store());

    CHECK(rboth.report.retained == ra.report.retained + rb.report.retained);
    CHECK(rboth.report.untargeted_removed ==
          ra.report.untargeted_removed + rb.report.untargeted_removed);
    CHECK(rboth.report.orphans_removed ==
          ra.report.orphans_removed + rb.report.orphans_removed);
    CHECK(rboth.log.entries.size() == ra.log.entries.size() + rb.log.entries.size());
}

TEST_CASE("cleaned output round-trips through its tsv files") {
    auto store = merge_logs({parse_log(sample::sample_log(), 0, "sample.log")});
    auto result = run_cleaning(store);

    auto dir = std::filesystem::temp_directory_path() / "surfminer_test_cleaned";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    persist_cleaned(result, dir.string());
    auto loaded = load_cleaned(dir.string());
    CHECK(loaded.log.entries == result.log.entries);
    CHECK(loaded.log.urls == result.log.urls);
    CHECK(loaded.log.params == result.log.params);
    CHECK(loaded.report == result.report);
    CHECK(loaded.per_file == result.per_file);

    std::filesystem::remove_all(dir);
}
