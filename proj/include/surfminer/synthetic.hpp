#pragma once

// synthetic.hpp — deterministic synthetic-corpus generator. Emits raw log
// files in the collector wire format together with a ground-truth sidecar
// recording the true session structure and every injected anomaly, so each
// downstream stage can be checked against known answers.
//
// Injection principles:
//   * Anomalies are EXTRA lines woven between the legitimate ones; the
//     cleaning stages remove exactly the extras, leaving the intended
//     session structure intact.
//   * Each anomaly kind is built to be caught by one specific cleaning
//     stage (zero MAC, untargeted scheme, non-Latin title, frame events),
//     so sidecar counts map one-to-one onto CleaningReport fields.
//   * Clock skew and short ad-visits are distortions of real pages, not
//     extra lines: skew makes a page's true duration negative, shorts give
//     it a dwell well under any sensible validity minimum.
//   * Crashes drop the final WindowClose of a surf's last window, leaving
//     an unterminated window for the sessionizer to resolve.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "surfminer/errors.hpp"
#include "surfminer/refiner.hpp"
#include "surfminer/rng.hpp"
#include "surfminer/text.hpp"
#include "surfminer/timestamp.hpp"
#include "surfminer/tsv.hpp"

namespace surfminer {

// ---------------------------------------------------------------------------
// Configuration

struct GenConfig {
    int users = 3;
    int files = 1;  // users are dealt round-robin onto this many log files

    int surfs_min = 2;  // surfs per user; each surf lands on its own day
    int surfs_max = 3;
    int windows_min = 1;  // windows per surf, opened overlapping
    int windows_max = 2;
    int pages_min = 2;  // pages per window
    int pages_max = 4;

    std::int64_t dwell_min_ms = 25000;  // time on a normal page
    std::int64_t dwell_max_ms = 120000;
    std::int64_t load_min_ms = 400;  // NavigateBegin -> DocumentComplete
    std::int64_t load_max_ms = 1500;

    // Anomaly rates, each rolled independently where it applies.
    double invalid_mac_rate = 0.0;  // per page: corrupted-MAC ghost line
    double untargeted_rate = 0.0;   // per page: non-http/ftp scheme line
    double nonlatin_rate = 0.0;     // per page: non-Latin-titled line
    double frame_rate = 0.0;        // per page: frameset episode
    double crash_rate = 0.0;        // per surf: last window never closes
    double skew_rate = 0.0;         // per window: one backwards clock jump
    double short_rate = 0.0;        // per page: ad-style visit, dwell 2-15 s

    int frames_per_episode = 3;

    int start_year = 2008;
    int start_month = 5;
    int start_day = 5;

    bool operator==(const GenConfig&) const = default;
};

inline void validate(const GenConfig& cfg) {
    auto bad = [](const std::string& what) { throw ConfigError("generator config: " + what); };
    if (cfg.users < 1) bad("need at least one user");
    if (cfg.files < 1 || cfg.files > cfg.users) bad("file count must be in [1, users]");
    if (cfg.surfs_min < 1 || cfg.surfs_max < cfg.surfs_min) bad("bad surf count range");
    if (cfg.windows_min < 1 || cfg.windows_max < cfg.windows_min) bad("bad window count range");
    if (cfg.pages_min < 1 || cfg.pages_max < cfg.pages_min) bad("bad page count range");
    // Page categories cycle with period 3 and every pool holds 4 distinct
    // sites, so up to 12 pages per window are guaranteed distinct URLs.
    if (cfg.pages_max > 12) bad("at most 12 pages per window");
    if (cfg.dwell_min_ms < 2500 || cfg.dwell_max_ms < cfg.dwell_min_ms) bad("bad dwell range");
    if (cfg.load_min_ms < 1 || cfg.load_max_ms < cfg.load_min_ms) bad("bad load range");
    for (double r : {cfg.invalid_mac_rate, cfg.untargeted_rate, cfg.nonlatin_rate, cfg.frame_rate,
                     cfg.crash_rate, cfg.skew_rate, cfg.short_rate})
        if (r < 0.0 || r > 1.0) bad("rates must lie in [0, 1]");
    if (cfg.frames_per_episode < 1 || cfg.frames_per_episode > 8)
        bad("frames per episode must be in [1, 8]");
    if (cfg.start_year < 1970 || cfg.start_year > 2100 || cfg.start_month < 1 ||
        cfg.start_month > 12 || cfg.start_day < 1 || cfg.start_day > 28)
        bad("implausible start date");
}

// ---------------------------------------------------------------------------
// Ground truth

struct GtPage {
    std::string url;
    std::string title;
    int category = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::int64_t duration_ms = 0;  // negative when the page is skewed
    bool completed = true;
    bool short_visit = false;
    bool skewed = false;
    bool frameset = false;

    bool operator==(const GtPage&) const = default;
};

struct GtWindow {
    std::int64_t window_id = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;         // intended end; the close instant when closed
    std::int64_t last_event_ms = 0;  // last line written that survives cleaning
    bool closed = true;
    std::vector<GtPage> pages;

    bool operator==(const GtWindow&) const = default;
};

struct GtSurf {
    std::string mac;
    std::string login;
    int archetype = 0;  // archetype / 3 = period (M/A/N), archetype % 3 = site profile
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::vector<GtWindow> windows;  // in opening order

    bool operator==(const GtSurf&) const = default;
};

struct InjectedCounts {
    std::int64_t invalid_mac = 0;
    std::int64_t untargeted = 0;
    std::int64_t nonlatin = 0;
    std::int64_t frame_events = 0;  // lines a perfect frame filter removes
    std::int64_t frame_episodes = 0;
    std::int64_t crashes = 0;
    std::int64_t skewed_pages = 0;
    std::int64_t short_pages = 0;

    bool operator==(const InjectedCounts&) const = default;
};

struct GtFile {
    std::string name;
    std::int64_t lines = 0;

    bool operator==(const GtFile&) const = default;
};

struct GroundTruth {
    std::uint64_t seed = 0;
    std::int64_t entries = 0;  // total lines across all files
    InjectedCounts injected;
    std::vector<GtFile> files;
    std::vector<GtSurf> surfs;

    bool operator==(const GroundTruth&) const = default;

    std::int64_t total_windows() const {
        std::int64_t n = 0;
        for (const GtSurf& s : surfs) n += static_cast<std::int64_t>(s.windows.size());
        return n;
    }
    std::int64_t total_pages() const {
        std::int64_t n = 0;
        for (const GtSurf& s : surfs)
            for (const GtWindow& w : s.windows) n += static_cast<std::int64_t>(w.pages.size());
        return n;
    }
};

struct SyntheticFile {
    std::string name;
    std::string text;

    bool operator==(const SyntheticFile&) const = default;
};

struct SyntheticCorpus {
    std::vector<SyntheticFile> files;
    GroundTruth truth;
};

// ---------------------------------------------------------------------------
// Site pools and archetype profiles

struct SitePool {
    int category = 0;
    std::vector<std::string> urls;
};

inline const std::vector<SitePool>& site_pools() {
    static const std::vector<SitePool> pools = {
        {1,
         {"http://www.google.com", "http://search.yahoo.com", "http://www.live.com",
          "http://www.exalead.fr"}},
        {2,
         {"http://mail.google.com", "http://mail.yahoo.com", "http://webmail.laposte.net",
          "http://mail.live.com"}},
        {3,
         {"http://www.miniclip.com", "http://games.yahoo.com", "http://www.jeux.fr",
          "http://www.pogo.com"}},
        {4,
         {"http://forum.hardware.fr", "http://www.phpbb.com", "http://groups.google.com",
          "http://www.commentcamarche.net"}},
        {5,
         {"http://www.download.com", "http://sourceforge.net", "http://www.clubic.com",
          "http://www.telecharger.fr"}},
        {6,
         {"http://www.codeproject.com", "http://msdn.microsoft.com", "http://www.cplusplus.com",
          "http://doc.trolltech.com"}},
        {7,
         {"http://news.google.com", "http://www.lemonde.fr", "http://www.liberation.fr",
          "http://news.bbc.co.uk"}},
        {8,
         {"http://scholar.google.com", "http://www.sciencedirect.com",
          "http://citeseer.ist.psu.edu", "http://www.springerlink.com"}},
    };
    return pools;
}

// Three site profiles; a surf's pages cycle through its profile's
// category triple. Together with the three day periods they form the nine
// session archetypes.
inline const std::vector<std::vector<int>>& archetype_profiles() {
    static const std::vector<std::vector<int>> profiles = {{1, 1, 7}, {2, 4, 8}, {3, 5, 6}};
    return profiles;
}

// Categorization rules covering every pool site, for refining generated data.
inline std::vector<CategoryRule> generator_rules() {
    std::vector<CategoryRule> rules;
    for (const SitePool& pool : site_pools())
        for (const std::string& url : pool.urls)
            rules.push_back({CategoryRule::Kind::ExactUrl, url, 3, pool.category});
    return rules;
}

// ---------------------------------------------------------------------------
// Wire-format emission

namespace detail {

inline std::string len3(std::string_view text) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(utf8_char_count(text)));
    return buf;
}

inline std::string wire_prefix(const std::string& mac, const std::string& login, std::int64_t ms,
                               std::int64_t window_id) {
    Timestamp ts = timestamp_from_epoch_ms(ms);
    std::string line = mac;
    line += '\t';
    line += login;
    line += '\t';
    line += format_date(ts);
    line += '\t';
    line += format_time(ts);
    line += '\t';
    line += std::to_string(window_id);
    line += '\t';
    return line;
}

inline std::string nb_line(const std::string& mac, const std::string& login, std::int64_t ms,
                           std::int64_t window_id, const std::string& url) {
    return wire_prefix(mac, login, ms, window_id) + "01\t" + len3(url) + '\t' + url;
}

inline std::string dc_line(const std::string& mac, const std::string& login, std::int64_t ms,
                           std::int64_t window_id, const std::string& url,
                           const std::string& title, int frames) {
    char fbuf[8];
    std::snprintf(fbuf, sizeof fbuf, "%02d", frames);
    return wire_prefix(mac, login, ms, window_id) + "02\t" + len3(url) + '\t' + url + '\t' +
           len3(title) + '\t' + title + '\t' + fbuf;
}

inline std::string close_line(const std::string& mac, const std::string& login, std::int64_t ms,
                              std::int64_t window_id) {
    return wire_prefix(mac, login, ms, window_id) + "03";
}

inline const SitePool& pool_for(int category) {
    for (const SitePool& pool : site_pools())
        if (pool.category == category) return pool;
    return site_pools().front();  // profiles only name pooled categories
}

// Draw a site of the wanted category that the window has not visited yet,
// so one window never lists the same URL twice.
inline std::string draw_site(DeterministicRng& rng, int category,
                             const std::set<std::string>& used) {
    const SitePool& pool = pool_for(category);
    std::vector<const std::string*> avail;
    for (const std::string& url : pool.urls)
        if (!used.count(url)) avail.push_back(&url);
    if (avail.empty())  // unreachable: pages_max <= 12 and pools hold 4 sites
        return pool.urls[static_cast<std::size_t>(rng.next_below(pool.urls.size()))];
    return *avail[static_cast<std::size_t>(rng.next_below(avail.size()))];
}

inline std::string host_of(const std::string& url) {
    std::size_t from = url.find("//");
    from = from == std::string::npos ? 0 : from + 2;
    std::size_t to = url.find('/', from);
    return url.substr(from, to == std::string::npos ? std::string::npos : to - from);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Corpus construction

// Builds the whole corpus in memory: one line vector per user, assembled
// round-robin into files afterwards. A single RNG drives every choice in a
// fixed order, so equal (config, seed) rebuild identical bytes.
inline SyntheticCorpus build_corpus(const GenConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    DeterministicRng rng(seed);

    SyntheticCorpus out;
    out.truth.seed = seed;
    InjectedCounts& inj = out.truth.injected;

    const std::int64_t base_ms =
        Timestamp{cfg.start_year, cfg.start_month, cfg.start_day, 0, 0, 0, 0}.epoch_ms();
    static const int kStartHour[3] = {9, 14, 21};  // morning / afternoon / night

    std::vector<std::vector<std::string>> user_lines(static_cast<std::size_t>(cfg.users));
    std::int64_t window_counter = 301000;
    std::int64_t page_counter = 0;
    std::int64_t episode_counter = 0;
    std::int64_t extra_counter = 0;

    // Backwards jumps are capped so the close event stays the window's
    // latest instant and no event lands before the window opened.
    const std::int64_t skew_cap =
        std::min<std::int64_t>(15000, cfg.dwell_min_ms - cfg.load_max_ms - 1000);

    for (int ui = 0; ui < cfg.users; ++ui) {
        char macbuf[24];
        std::snprintf(macbuf, sizeof macbuf, "00-0A-CD-00-%02X-%02X", (ui + 1) / 256,
                      (ui + 1) % 256);
        const std::string mac = macbuf;
        char loginbuf[16];
        std::snprintf(loginbuf, sizeof loginbuf, "u%03d", ui + 1);
        const std::string login = loginbuf;
        std::vector<std::string>& lines = user_lines[static_cast<std::size_t>(ui)];

        const int nsurfs = static_cast<int>(rng.next_in(cfg.surfs_min, cfg.surfs_max));
        for (int sj = 0; sj < nsurfs; ++sj) {
            GtSurf surf;
            surf.mac = mac;
            surf.login = login;
            surf.archetype = (ui + sj) % 9;
            const std::vector<int>& cats =
                archetype_profiles()[static_cast<std::size_t>(surf.archetype % 3)];

            // One surf per day keeps inter-surf gaps hours wide.
            std::int64_t t0 = base_ms + static_cast<std::int64_t>(sj) * 86400000 +
                              kStartHour[surf.archetype / 3] * 3600000LL +
                              rng.next_in(0, 49) * 60000 + rng.next_in(0, 59) * 1000 +
                              rng.next_in(0, 999);
            surf.start_ms = t0;

            const int nwin = static_cast<int>(rng.next_in(cfg.windows_min, cfg.windows_max));
            const bool crash = rng.chance(cfg.crash_rate);
            std::int64_t win_start = t0;
            // Each window opens while the previous one is still on its
            // first page, so the surf never breaks apart.
            const std::int64_t offset_hi = std::min<std::int64_t>(19000, cfg.dwell_min_ms - 1000);

            for (int wk = 0; wk < nwin; ++wk) {
                if (wk > 0) win_start += rng.next_in(1000, offset_hi);
                GtWindow w;
                w.window_id = ++window_counter;
                w.start_ms = win_start;

                const int npages = static_cast<int>(rng.next_in(cfg.pages_min, cfg.pages_max));
                bool skewed = npages >= 3 && skew_cap >= 2000 && rng.chance(cfg.skew_rate);
                const int skew_page = skewed ? static_cast<int>(rng.next_in(1, npages - 2)) : -1;

                std::int64_t t = win_start;
                std::int64_t last_event = win_start;
                std::set<std::string> visited;

                for (int p = 0; p < npages; ++p) {
                    const int cat = cats[static_cast<std::size_t>(p % 3)];
                    const std::string url = detail::draw_site(rng, cat, visited);
                    visited.insert(url);

                    // Page 0 stays full-length so the overlap above holds;
                    // skewed windows keep uniform dwells for the cap math.
                    const bool short_v = p > 0 && !skewed && rng.chance(cfg.short_rate);
                    const std::int64_t dwell = short_v
                                                   ? rng.next_in(2000, 15000)
                                                   : rng.next_in(cfg.dwell_min_ms,
                                                                 cfg.dwell_max_ms);
                    const bool frames = !skewed && !short_v && rng.chance(cfg.frame_rate);
                    std::int64_t load = rng.next_in(cfg.load_min_ms, cfg.load_max_ms);
                    if (load >= dwell) load = dwell / 2;

                    ++page_counter;
                    const std::string title = detail::host_of(url) + " | page " +
                                              std::to_string(page_counter);

                    lines.push_back(detail::nb_line(mac, login, t, w.window_id, url));
                    std::int64_t dc_ms;
                    if (frames) {
                        const int n = cfg.frames_per_episode;
                        ++episode_counter;
                        const std::string stem =
                            "http://frames.example/e" + std::to_string(episode_counter) + "/f";
                        for (int f = 1; f <= n; ++f)
                            lines.push_back(detail::nb_line(mac, login, t + 100 * f, w.window_id,
                                                            stem + std::to_string(f)));
                        for (int f = 1; f <= n; ++f)
                            lines.push_back(detail::dc_line(mac, login, t + 100 * (n + f),
                                                            w.window_id,
                                                            stem + std::to_string(f), title, 0));
                        dc_ms = t + 100 * (2 * n + 1);
                        lines.push_back(
                            detail::dc_line(mac, login, dc_ms, w.window_id, url, title, n));
                        inj.frame_events += 2 * n;
                        ++inj.frame_episodes;
                    } else {
                        dc_ms = t + load;
                        lines.push_back(
                            detail::dc_line(mac, login, dc_ms, w.window_id, url, title, 0));
                    }
                    last_event = std::max(last_event, dc_ms);

                    // Anomaly extras ride along mid-page; the cleaning
                    // stages scrub all of them before reconstruction.
                    const std::int64_t mid = t + dwell / 2;
                    if (rng.chance(cfg.invalid_mac_rate)) {
                        ++extra_counter;
                        lines.push_back(detail::nb_line(
                            "00-00-00-00-00-00", login, mid, ++window_counter,
                            "http://ghost.example/g" + std::to_string(extra_counter)));
                        ++inj.invalid_mac;
                    }
                    if (rng.chance(cfg.untargeted_rate)) {
                        ++extra_counter;
                        lines.push_back(detail::nb_line(
                            mac, login, mid + 17, w.window_id,
                            "https://ads.example/a" + std::to_string(extra_counter)));
                        ++inj.untargeted;
                    }
                    if (rng.chance(cfg.nonlatin_rate)) {
                        ++extra_counter;
                        lines.push_back(detail::dc_line(
                            mac, login, mid + 31, w.window_id,
                            "http://intl.example/n" + std::to_string(extra_counter),
                            "Новости " + std::to_string(extra_counter), 0));
                        ++inj.nonlatin;
                    }

                    GtPage gp;
                    gp.url = url;
                    gp.title = title;
                    gp.category = cat;
                    gp.start_ms = t;
                    gp.completed = true;
                    gp.short_visit = short_v;
                    gp.frameset = frames;
                    if (p == skew_page) {
                        gp.skewed = true;
                        gp.end_ms = t - rng.next_in(2000, skew_cap);
                        ++inj.skewed_pages;
                    } else {
                        gp.end_ms = t + dwell;
                    }
                    gp.duration_ms = gp.end_ms - gp.start_ms;
                    t = gp.end_ms;
                    if (short_v) ++inj.short_pages;
                    w.pages.push_back(std::move(gp));
                }

                w.end_ms = t;
                w.closed = !(crash && wk == nwin - 1);
                if (w.closed) {
                    lines.push_back(detail::close_line(mac, login, t, w.window_id));
                    last_event = std::max(last_event, t);
                } else {
                    ++inj.crashes;
                }
                w.last_event_ms = last_event;
                surf.end_ms = std::max(surf.end_ms, w.end_ms);
                surf.windows.push_back(std::move(w));
            }
            out.truth.surfs.push_back(std::move(surf));
        }
    }

    for (int f = 0; f < cfg.files; ++f) {
        SyntheticFile file;
        file.name = "machine" + std::to_string(f + 1) + ".log";
        std::int64_t count = 0;
        for (int ui = f; ui < cfg.users; ui += cfg.files)
            for (const std::string& line : user_lines[static_cast<std::size_t>(ui)]) {
                file.text += line;
                file.text += '\n';
                ++count;
            }
        out.truth.files.push_back({file.name, count});
        out.truth.entries += count;
        out.files.push_back(std::move(file));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ground-truth serialization

inline void to_json(nlohmann::json& j, const GtPage& p) {
    j = nlohmann::json{{"url", p.url},
                       {"title", p.title},
                       {"category", p.category},
                       {"start_ms", p.start_ms},
                       {"end_ms", p.end_ms},
                       {"duration_ms", p.duration_ms},
                       {"completed", p.completed},
                       {"short_visit", p.short_visit},
                       {"skewed", p.skewed},
                       {"frameset", p.frameset}};
}

inline void from_json(const nlohmann::json& j, GtPage& p) {
    j.at("url").get_to(p.url);
    j.at("title").get_to(p.title);
    j.at("category").get_to(p.category);
    j.at("start_ms").get_to(p.start_ms);
    j.at("end_ms").get_to(p.end_ms);
    j.at("duration_ms").get_to(p.duration_ms);
    j.at("completed").get_to(p.completed);
    j.at("short_visit").get_to(p.short_visit);
    j.at("skewed").get_to(p.skewed);
    j.at("frameset").get_to(p.frameset);
}

inline void to_json(nlohmann::json& j, const GtWindow& w) {
    j = nlohmann::json{{"window_id", w.window_id}, {"start_ms", w.start_ms},
                       {"end_ms", w.end_ms},       {"last_event_ms", w.last_event_ms},
                       {"closed", w.closed},       {"pages", w.pages}};
}

inline void from_json(const nlohmann::json& j, GtWindow& w) {
    j.at("window_id").get_to(w.window_id);
    j.at("start_ms").get_to(w.start_ms);
    j.at("end_ms").get_to(w.end_ms);
    j.at("last_event_ms").get_to(w.last_event_ms);
    j.at("closed").get_to(w.closed);
    j.at("pages").get_to(w.pages);
}

inline void to_json(nlohmann::json& j, const GtSurf& s) {
    j = nlohmann::json{{"mac", s.mac},           {"login", s.login},
                       {"archetype", s.archetype}, {"start_ms", s.start_ms},
                       {"end_ms", s.end_ms},      {"windows", s.windows}};
}

inline void from_json(const nlohmann::json& j, GtSurf& s) {
    j.at("mac").get_to(s.mac);
    j.at("login").get_to(s.login);
    j.at("archetype").get_to(s.archetype);
    j.at("start_ms").get_to(s.start_ms);
    j.at("end_ms").get_to(s.end_ms);
    j.at("windows").get_to(s.windows);
}

inline void to_json(nlohmann::json& j, const InjectedCounts& c) {
    j = nlohmann::json{{"invalid_mac", c.invalid_mac},
                       {"untargeted", c.untargeted},
                       {"nonlatin", c.nonlatin},
                       {"frame_events", c.frame_events},
                       {"frame_episodes", c.frame_episodes},
                       {"crashes", c.crashes},
                       {"skewed_pages", c.skewed_pages},
                       {"short_pages", c.short_pages}};
}

inline void from_json(const nlohmann::json& j, InjectedCounts& c) {
    j.at("invalid_mac").get_to(c.invalid_mac);
    j.at("untargeted").get_to(c.untargeted);
    j.at("nonlatin").get_to(c.nonlatin);
    j.at("frame_events").get_to(c.frame_events);
    j.at("frame_episodes").get_to(c.frame_episodes);
    j.at("crashes").get_to(c.crashes);
    j.at("skewed_pages").get_to(c.skewed_pages);
    j.at("short_pages").get_to(c.short_pages);
}

inline void to_json(nlohmann::json& j, const GtFile& f) {
    j = nlohmann::json{{"name", f.name}, {"lines", f.lines}};
}

inline void from_json(const nlohmann::json& j, GtFile& f) {
    j.at("name").get_to(f.name);
    j.at("lines").get_to(f.lines);
}

inline void to_json(nlohmann::json& j, const GroundTruth& gt) {
    j = nlohmann::json{{"seed", gt.seed},
                       {"entries", gt.entries},
                       {"injected", gt.injected},
                       {"files", gt.files},
                       {"surfs", gt.surfs}};
}

inline void from_json(const nlohmann::json& j, GroundTruth& gt) {
    j.at("seed").get_to(gt.seed);
    j.at("entries").get_to(gt.entries);
    j.at("injected").get_to(gt.injected);
    j.at("files").get_to(gt.files);
    j.at("surfs").get_to(gt.surfs);
}

inline void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
    nlohmann::json j = gt;
    write_file_bytes(path, j.dump(2) + "\n");
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_file_bytes(path)).get<GroundTruth>();
    } catch (const nlohmann::json::exception& e) {
        throw IoFailure("ground truth " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Driver

// Writes the log files, the ground-truth sidecar, and a rules file covering
// every generated site, then hands the corpus back for inspection.
inline SyntheticCorpus generate_synthetic(const GenConfig& cfg, std::uint64_t seed,
                                          const std::filesystem::path& out_dir) {
    SyntheticCorpus corpus = build_corpus(cfg, seed);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create " + out_dir.string() + ": " + ec.message());
    for (const SyntheticFile& f : corpus.files) write_file_bytes(out_dir / f.name, f.text);
    save_ground_truth(corpus.truth, out_dir / "ground_truth.json");
    save_rules(generator_rules(), (out_dir / "rules.tsv").string());
    return corpus;
}

}  // namespace surfminer
