#pragma once

// sessionizer.hpp — rebuilds surfs, windows, and page visits from a cleaned
// log. Windows that never emitted a close event ("unterminated": crashes,
// forced kills) first get an end instant assigned under one of three
// strategies; reconstruction then runs a per-user state machine over the
// real events interleaved with the synthetic closes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "surfminer/cleaner.hpp"
#include "surfminer/errors.hpp"
#include "surfminer/log_model.hpp"
#include "surfminer/tsv.hpp"

namespace surfminer {

enum class TerminationMode : int { LastEvent = 1, NextLogEvent = 2, AverageRate = 3 };

// Statistic used by TerminationMode::AverageRate over the window's
// inter-event gaps.
enum class RateStatistic : int { Mean = 0, Median = 1 };

inline constexpr std::size_t kNoPosition = static_cast<std::size_t>(-1);

struct UnterminatedWindow {
    std::int64_t window_id = 0;
    UserKey user;
    std::size_t first_item = 0;  // index of the opening event in the entry vector
    std::size_t last_item = 0;   // index of the window's final event
    std::int64_t last_event_ms = 0;
    std::int64_t resolved_end_ms = -1;        // pending until resolved
    std::size_t insert_before = kNoPosition;  // mode 2: entry the close precedes

    bool operator==(const UnterminatedWindow&) const = default;
};

enum class WindowEnd : int { CloseEvent = 0, Resolution = 1 };

struct PageVisit {
    int url_id = -1;
    std::int64_t window_id = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::int64_t duration_ms = 0;  // provisional until the refiner confirms it
    bool completed = false;        // a DocumentComplete was observed
    std::string title;
    int category = 0;  // assigned by the refiner; 0 = unclassified

    bool operator==(const PageVisit&) const = default;
};

struct WindowVisit {
    std::int64_t window_id = 0;
    UserKey user;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    WindowEnd terminated_by = WindowEnd::CloseEvent;
    std::vector<PageVisit> pages;

    bool operator==(const WindowVisit&) const = default;
};

struct Surf {
    std::int64_t surf_id = 0;
    UserKey user;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::vector<WindowVisit> windows;  // in opening order

    bool operator==(const Surf&) const = default;
};

// ---------------------------------------------------------------------------
// Unterminated-window detection and resolution

// One scan over the user's entries: navigation events insert or refresh the
// window's row, a close retires it. Whatever survives the scan never closed.
// A window id reused after a close is tracked from its newest occurrence.
inline std::vector<UnterminatedWindow> detect_unterminated(
    const std::vector<CleanEntry>& entries, const UserKey& user) {
    std::map<std::int64_t, UnterminatedWindow> fnt;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const CleanEntry& e = entries[i];
        if (e.user != user) continue;
        if (e.event == EventKind::WindowClose) {
            fnt.erase(e.window_id);
            continue;
        }
        auto it = fnt.find(e.window_id);
        if (it == fnt.end()) {
            UnterminatedWindow w;
            w.window_id = e.window_id;
            w.user = user;
            w.first_item = i;
            w.last_item = i;
            w.last_event_ms = e.ms;
            fnt.emplace(e.window_id, std::move(w));
        } else {
            it->second.last_item = i;
            it->second.last_event_ms = e.ms;
        }
    }
    std::vector<UnterminatedWindow> out;
    out.reserve(fnt.size());
    for (auto& [id, w] : fnt) out.push_back(std::move(w));
    std::sort(out.begin(), out.end(),
              [](const UnterminatedWindow& a, const UnterminatedWindow& b) {
                  return a.first_item < b.first_item;
              });
    return out;
}

// Assigns an end instant to every detected window. LastEvent keeps the last
// recorded moment; NextLogEvent borrows the instant of the user's next entry
// (necessarily another window's); AverageRate extends by the mean (or
// median) inter-event gap. The strategies that can come up empty fall back
// to LastEvent, so resolution is total.
inline void resolve_unterminated(std::vector<UnterminatedWindow>& table, TerminationMode mode,
                                 const std::vector<CleanEntry>& entries,
                                 RateStatistic stat = RateStatistic::Mean) {
    for (UnterminatedWindow& w : table) {
        w.resolved_end_ms = w.last_event_ms;
        w.insert_before = kNoPosition;
        if (mode == TerminationMode::NextLogEvent) {
            for (std::size_t i = w.last_item + 1; i < entries.size(); ++i) {
                if (entries[i].user != w.user) continue;
                w.resolved_end_ms = entries[i].ms;
                w.insert_before = i;
                break;
            }
        } else if (mode == TerminationMode::AverageRate) {
            std::vector<std::int64_t> gaps;
            std::int64_t prev = 0;
            bool have_prev = false;
            for (std::size_t i = w.first_item; i <= w.last_item && i < entries.size(); ++i) {
                const CleanEntry& e = entries[i];
                if (e.user != w.user || e.window_id != w.window_id) continue;
                if (have_prev) gaps.push_back(e.ms - prev);
                prev = e.ms;
                have_prev = true;
            }
            if (!gaps.empty()) {
                double rate = 0.0;
                if (stat == RateStatistic::Mean) {
                    double sum = 0.0;
                    for (std::int64_t g : gaps) sum += static_cast<double>(g);
                    rate = sum / static_cast<double>(gaps.size());
                } else {
                    std::sort(gaps.begin(), gaps.end());
                    std::size_t mid = gaps.size() / 2;
                    rate = gaps.size() % 2 ? static_cast<double>(gaps[mid])
                                           : (static_cast<double>(gaps[mid - 1]) +
                                              static_cast<double>(gaps[mid])) /
                                                 2.0;
                }
                w.resolved_end_ms = w.last_event_ms + std::llround(rate);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Surf reconstruction

struct UserSessions {
    std::vector<Surf> surfs;
    std::int64_t orphan_count = 0;
};

namespace detail {

struct OpenWindowState {
    WindowVisit win;
    std::optional<PageVisit> open_page;
    std::map<int, bool> page_status;  // url_id -> download completed
};

// A processing step: a real log entry or a synthetic close injected by the
// resolution pass. seq encodes log position so that equal instants keep log
// order and mode-2 closes land just before the entry they borrowed from.
struct SessionStep {
    std::int64_t ms = 0;
    std::int64_t seq = 0;
    std::int64_t window_id = 0;
    bool synthetic = false;
    std::size_t entry = kNoPosition;
};

inline void close_open_page(OpenWindowState& ow, std::int64_t at_ms) {
    if (!ow.open_page) return;
    PageVisit p = std::move(*ow.open_page);
    ow.open_page.reset();
    p.end_ms = at_ms;
    p.duration_ms = p.end_ms - p.start_ms;
    ow.win.pages.push_back(std::move(p));
}

inline void open_new_page(OpenWindowState& ow, int url_id, std::int64_t at_ms) {
    PageVisit p;
    p.url_id = url_id;
    p.window_id = ow.win.window_id;
    p.start_ms = at_ms;
    ow.open_page = std::move(p);
    ow.page_status[url_id] = false;
}

}  // namespace detail

// Runs the per-user reconstruction state machine. A NavigateBegin for an
// unknown window opens it (and a surf when none is open); any other event
// for an unknown window is an orphan. Within a window, a NavigateBegin
// terminates the page being viewed and opens the next one — except that
// renavigating to a still-loading page merely restarts it. A
// DocumentComplete marks the matching page finished (its visit still runs
// until the next navigation or the close); one naming an unlisted URL
// settles the page actually loading. Closes — real or synthetic — end the
// window, and the surf once no window remains open. Synthetic closes come
// from the resolved table; if the table missed a window, that window is
// closed defensively at the last instant seen.
inline UserSessions reconstruct_surfs(const std::vector<CleanEntry>& entries,
                                      const std::vector<UnterminatedWindow>& resolved,
                                      const UserKey& user) {
    // Partition positions for this user, in log order.
    std::vector<std::size_t> part;
    std::map<std::size_t, std::int64_t> part_pos;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].user != user) continue;
        part_pos[i] = static_cast<std::int64_t>(part.size());
        part.push_back(i);
    }

    std::vector<detail::SessionStep> steps;
    steps.reserve(part.size() + resolved.size());
    for (std::size_t k = 0; k < part.size(); ++k) {
        detail::SessionStep s;
        s.ms = entries[part[k]].ms;
        s.seq = 2 * static_cast<std::int64_t>(k);
        s.window_id = entries[part[k]].window_id;
        s.entry = part[k];
        steps.push_back(s);
    }
    const std::int64_t end_seq = 2 * static_cast<std::int64_t>(part.size());
    for (const UnterminatedWindow& w : resolved) {
        if (w.user != user || w.resolved_end_ms < 0) continue;
        detail::SessionStep s;
        s.ms = w.resolved_end_ms;
        s.seq = end_seq;
        if (w.insert_before != kNoPosition) {
            auto it = part_pos.find(w.insert_before);
            if (it != part_pos.end()) s.seq = 2 * it->second - 1;
        }
        s.window_id = w.window_id;
        s.synthetic = true;
        steps.push_back(s);
    }
    std::sort(steps.begin(), steps.end(),
              [](const detail::SessionStep& a, const detail::SessionStep& b) {
                  return std::tie(a.ms, a.seq, a.window_id) < std::tie(b.ms, b.seq, b.window_id);
              });

    UserSessions out;
    std::map<std::int64_t, detail::OpenWindowState> open;
    bool surf_open = false;
    Surf cur;
    std::int64_t last_ms = 0;

    // Windows join the surf as they close; report them in opening order so
    // the layout does not depend on the termination mode.
    auto emit_surf = [&]() {
        std::sort(cur.windows.begin(), cur.windows.end(),
                  [](const WindowVisit& a, const WindowVisit& b) {
                      return std::tie(a.start_ms, a.window_id) < std::tie(b.start_ms, b.window_id);
                  });
        cur.end_ms = cur.start_ms;
        for (const WindowVisit& w : cur.windows) cur.end_ms = std::max(cur.end_ms, w.end_ms);
        out.surfs.push_back(std::move(cur));
        cur = Surf{};
        surf_open = false;
    };

    auto close_window = [&](std::map<std::int64_t, detail::OpenWindowState>::iterator it,
                            std::int64_t at_ms, WindowEnd how) {
        detail::OpenWindowState& ow = it->second;
        detail::close_open_page(ow, at_ms);
        ow.win.end_ms = at_ms;
        ow.win.terminated_by = how;
        cur.windows.push_back(std::move(ow.win));
        open.erase(it);
        if (open.empty()) emit_surf();
    };

    for (const detail::SessionStep& step : steps) {
        last_ms = step.ms;
        auto it = open.find(step.window_id);
        if (step.synthetic) {
            if (it != open.end()) close_window(it, step.ms, WindowEnd::Resolution);
            continue;
        }
        const CleanEntry& e = entries[step.entry];
        if (it == open.end()) {
            if (e.event != EventKind::NavigateBegin) {
                ++out.orphan_count;  // a window must start with a navigation
                continue;
            }
            if (!surf_open) {
                surf_open = true;
                cur.user = user;
                cur.start_ms = e.ms;
            }
            detail::OpenWindowState ow;
            ow.win.window_id = e.window_id;
            ow.win.user = user;
            ow.win.start_ms = e.ms;
            detail::open_new_page(ow, e.url_id, e.ms);
            open.emplace(e.window_id, std::move(ow));
            continue;
        }
        detail::OpenWindowState& ow = it->second;
        switch (e.event) {
            case EventKind::NavigateBegin:
                if (ow.open_page && ow.open_page->url_id == e.url_id &&
                    !ow.open_page->completed) {
                    // Renavigation while still loading: restart in place.
                    ow.open_page->start_ms = e.ms;
                } else {
                    detail::close_open_page(ow, e.ms);
                    detail::open_new_page(ow, e.url_id, e.ms);
                }
                break;
            case EventKind::DocumentComplete:
                if (ow.open_page && ow.open_page->url_id == e.url_id) {
                    ow.open_page->completed = true;
                    ow.open_page->title = e.title;
                    ow.page_status[e.url_id] = true;
                } else if (ow.page_status.count(e.url_id)) {
                    ow.page_status[e.url_id] = true;
                } else if (ow.open_page) {
                    // Completion for an unlisted URL (e.g. a redirect):
                    // settle the page actually loading.
                    ow.open_page->completed = true;
                    ow.open_page->title = e.title;
                    ow.page_status[ow.open_page->url_id] = true;
                }
                break;
            case EventKind::WindowClose:
                close_window(it, e.ms, WindowEnd::CloseEvent);
                break;
        }
    }

    // Defensive sweep for callers that passed an incomplete resolution
    // table: close whatever is still open at the last instant seen.
    while (!open.empty()) close_window(open.begin(), last_ms, WindowEnd::Resolution);

    return out;
}

// ---------------------------------------------------------------------------
// Whole-log driver

struct SessionTables {
    std::vector<Surf> surfs;
    std::vector<UnterminatedWindow> unterminated;
    std::int64_t orphan_count = 0;
    TerminationMode mode = TerminationMode::AverageRate;

    bool operator==(const SessionTables&) const = default;
};

inline SessionTables sessionize(const std::vector<CleanEntry>& entries, TerminationMode mode,
                                RateStatistic stat = RateStatistic::Mean) {
    std::set<UserKey> users;
    for (const CleanEntry& e : entries) users.insert(e.user);

    SessionTables out;
    out.mode = mode;
    for (const UserKey& user : users) {
        auto fnt = detect_unterminated(entries, user);
        resolve_unterminated(fnt, mode, entries, stat);
        UserSessions sessions = reconstruct_surfs(entries, fnt, user);
        for (Surf& s : sessions.surfs) {
            s.surf_id = static_cast<std::int64_t>(out.surfs.size());
            out.surfs.push_back(std::move(s));
        }
        out.orphan_count += sessions.orphan_count;
        out.unterminated.insert(out.unterminated.end(), fnt.begin(), fnt.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace detail {

inline std::string window_end_code(WindowEnd w) {
    return w == WindowEnd::CloseEvent ? "close" : "resolved";
}

inline WindowEnd window_end_from(const std::string& s) {
    if (s == "close") return WindowEnd::CloseEvent;
    if (s == "resolved") return WindowEnd::Resolution;
    throw IoFailure("unknown window termination flag: " + s);
}

}  // namespace detail

inline void persist_sessions(const SessionTables& t, const std::string& dir) {
    std::string surfs = "# surf_id\tmac\tlogin\tstart_ms\tend_ms\twindows\n";
    std::string windows = "# surf_id\tseq\twindow_id\tstart_ms\tend_ms\tterminated_by\tpages\n";
    std::string pages =
        "# surf_id\tseq\turl_id\tstart_ms\tend_ms\tduration_ms\tcompleted\tcategory\ttitle\n";
    for (const Surf& s : t.surfs) {
        surfs += join_row({std::to_string(s.surf_id), s.user.mac, s.user.login_cipher,
                           std::to_string(s.start_ms), std::to_string(s.end_ms),
                           std::to_string(s.windows.size())});
        surfs += '\n';
        for (std::size_t wi = 0; wi < s.windows.size(); ++wi) {
            const WindowVisit& w = s.windows[wi];
            windows += join_row({std::to_string(s.surf_id), std::to_string(wi),
                                 std::to_string(w.window_id), std::to_string(w.start_ms),
                                 std::to_string(w.end_ms),
                                 detail::window_end_code(w.terminated_by),
                                 std::to_string(w.pages.size())});
            windows += '\n';
            for (const PageVisit& p : w.pages) {
                pages += join_row({std::to_string(s.surf_id), std::to_string(wi),
                                   std::to_string(p.url_id), std::to_string(p.start_ms),
                                   std::to_string(p.end_ms), std::to_string(p.duration_ms),
                                   p.completed ? "1" : "0", std::to_string(p.category),
                                   p.title});
                pages += '\n';
            }
        }
    }
    write_file_bytes(dir + "/surfs.tsv", surfs);
    write_file_bytes(dir + "/windows.tsv", windows);
    write_file_bytes(dir + "/pages.tsv", pages);

    std::string fnt =
        "# mac\tlogin\twindow_id\tfirst_item\tlast_item\tlast_event_ms\tresolved_end_ms\t"
        "insert_before\n";
    for (const UnterminatedWindow& w : t.unterminated) {
        std::string anchor = w.insert_before == kNoPosition
                                 ? "-1"
                                 : std::to_string(static_cast<std::int64_t>(w.insert_before));
        fnt += join_row({w.user.mac, w.user.login_cipher, std::to_string(w.window_id),
                         std::to_string(w.first_item), std::to_string(w.last_item),
                         std::to_string(w.last_event_ms), std::to_string(w.resolved_end_ms),
                         anchor});
        fnt += '\n';
    }
    write_file_bytes(dir + "/unterminated.tsv", fnt);

    std::string meta = "# key\tvalue\n";
    meta += join_row({"mode", std::to_string(static_cast<int>(t.mode))}) + "\n";
    meta += join_row({"orphan_count", std::to_string(t.orphan_count)}) + "\n";
    write_file_bytes(dir + "/session_meta.tsv", meta);
}

inline SessionTables load_sessions(const std::string& dir) {
    SessionTables t;

    std::map<std::int64_t, std::size_t> surf_index;
    for (const auto& row : read_tsv_file(dir + "/surfs.tsv")) {
        if (row.size() != 6) throw IoFailure("bad surfs.tsv row width");
        Surf s;
        s.surf_id = detail::to_i64(row[0], "surfs.tsv");
        s.user.mac = row[1];
        s.user.login_cipher = row[2];
        s.start_ms = detail::to_i64(row[3], "surfs.tsv");
        s.end_ms = detail::to_i64(row[4], "surfs.tsv");
        s.windows.reserve(static_cast<std::size_t>(detail::to_i64(row[5], "surfs.tsv")));
        surf_index[s.surf_id] = t.surfs.size();
        t.surfs.push_back(std::move(s));
    }
    for (const auto& row : read_tsv_file(dir + "/windows.tsv")) {
        if (row.size() != 7) throw IoFailure("bad windows.tsv row width");
        auto si = surf_index.find(detail::to_i64(row[0], "windows.tsv"));
        if (si == surf_index.end()) throw IoFailure("windows.tsv references unknown surf");
        Surf& s = t.surfs[si->second];
        if (static_cast<std::size_t>(detail::to_i64(row[1], "windows.tsv")) != s.windows.size())
            throw IoFailure("windows.tsv rows out of order");
        WindowVisit w;
        w.window_id = detail::to_i64(row[2], "windows.tsv");
        w.user = s.user;
        w.start_ms = detail::to_i64(row[3], "windows.tsv");
        w.end_ms = detail::to_i64(row[4], "windows.tsv");
        w.terminated_by = detail::window_end_from(row[5]);
        w.pages.reserve(static_cast<std::size_t>(detail::to_i64(row[6], "windows.tsv")));
        s.windows.push_back(std::move(w));
    }
    for (const auto& row : read_tsv_file(dir + "/pages.tsv")) {
        if (row.size() != 9) throw IoFailure("bad pages.tsv row width");
        auto si = surf_index.find(detail::to_i64(row[0], "pages.tsv"));
        if (si == surf_index.end()) throw IoFailure("pages.tsv references unknown surf");
        Surf& s = t.surfs[si->second];
        auto wi = static_cast<std::size_t>(detail::to_i64(row[1], "pages.tsv"));
        if (wi >= s.windows.size()) throw IoFailure("pages.tsv references unknown window");
        PageVisit p;
        p.url_id = static_cast<int>(detail::to_i64(row[2], "pages.tsv"));
        p.window_id = s.windows[wi].window_id;
        p.start_ms = detail::to_i64(row[3], "pages.tsv");
        p.end_ms = detail::to_i64(row[4], "pages.tsv");
        p.duration_ms = detail::to_i64(row[5], "pages.tsv");
        p.completed = detail::to_i64(row[6], "pages.tsv") != 0;
        p.category = static_cast<int>(detail::to_i64(row[7], "pages.tsv"));
        p.title = row[8];
        s.windows[wi].pages.push_back(std::move(p));
    }
    for (const auto& row : read_tsv_file(dir + "/unterminated.tsv")) {
        if (row.size() != 8) throw IoFailure("bad unterminated.tsv row width");
        UnterminatedWindow w;
        w.user.mac = row[0];
        w.user.login_cipher = row[1];
        w.window_id = detail::to_i64(row[2], "unterminated.tsv");
        w.first_item = static_cast<std::size_t>(detail::to_i64(row[3], "unterminated.tsv"));
        w.last_item = static_cast<std::size_t>(detail::to_i64(row[4], "unterminated.tsv"));
        w.last_event_ms = detail::to_i64(row[5], "unterminated.tsv");
        w.resolved_end_ms = detail::to_i64(row[6], "unterminated.tsv");
        std::int64_t anchor = detail::to_i64(row[7], "unterminated.tsv");
        w.insert_before = anchor < 0 ? kNoPosition : static_cast<std::size_t>(anchor);
        t.unterminated.push_back(std::move(w));
    }
    for (const auto& row : read_tsv_file(dir + "/session_meta.tsv")) {
        if (row.size() != 2) throw IoFailure("bad session_meta.tsv row width");
        if (row[0] == "mode") {
            std::int64_t m = detail::to_i64(row[1], "session_meta.tsv");
            if (m < 1 || m > 3) throw IoFailure("bad termination mode in session_meta.tsv");
            t.mode = static_cast<TerminationMode>(m);
        } else if (row[0] == "orphan_count") {
            t.orphan_count = detail::to_i64(row[1], "session_meta.tsv");
        }
    }
    return t;
}

}  // namespace surfminer
