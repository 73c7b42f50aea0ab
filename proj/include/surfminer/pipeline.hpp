#pragma once

// pipeline.hpp — run configuration, stage orchestration, and the summary
// tables. The orchestrator chains ingest → clean → sessionize → refine →
// features → cluster → report, persisting each stage's artifacts into the
// output directory as it completes; a failing stage aborts with its name
// and leaves everything written so far in place.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "surfminer/cleaner.hpp"
#include "surfminer/errors.hpp"
#include "surfminer/features.hpp"
#include "surfminer/log_model.hpp"
#include "surfminer/refiner.hpp"
#include "surfminer/sessionizer.hpp"
#include "surfminer/som.hpp"
#include "surfminer/synthetic.hpp"
#include "surfminer/tsv.hpp"

namespace surfminer {

// ---------------------------------------------------------------------------
// Configuration

struct PipelineConfig {
    std::vector<std::string> inputs;
    std::string out_dir = "out";
    ParserOptions parser;
    CleaningConfig cleaning;
    TerminationMode mode = TerminationMode::AverageRate;
    RateStatistic rate_stat = RateStatistic::Mean;
    RefineConfig refine;
    std::string rules_path;  // empty: every page stays unclassified
    FeatureOptions features;
    SomConfig som;
    int top_n = 10;
    GenConfig gen;  // synthetic-corpus settings, used by the generate command
    std::uint64_t gen_seed = 0;

    bool operator==(const PipelineConfig&) const = default;
};

namespace detail {

inline std::string trim_ws(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline bool conf_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + " wants true/false, got '" + value + "'");
}

inline std::int64_t conf_i64(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + " wants an integer, got '" + value + "'");
    }
}

inline double conf_double(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + " wants a number, got '" + value + "'");
    }
}

inline std::vector<std::string> conf_list(const std::string& value) {
    std::vector<std::string> out;
    for (const std::string& part : split_list(value, ',')) {
        std::string item = trim_ws(part);
        if (!item.empty()) out.push_back(std::move(item));
    }
    return out;
}

}  // namespace detail

// Parse a key = value configuration text. Unknown keys are rejected so a
// typo never silently falls back to a default.
inline PipelineConfig parse_pipeline_config(std::string_view text) {
    PipelineConfig cfg;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string line = detail::trim_ws(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++lineno;
        if (line.empty() || line[0] == '#') continue;

        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim_ws(line.substr(0, eq));
        std::string value = detail::trim_ws(line.substr(eq + 1));

        if (key == "input") {
            if (value.empty()) throw ConfigError("input wants a path");
            cfg.inputs.push_back(value);
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "date_order") {
            if (value == "dmy")
                cfg.parser.date_order = DateOrder::DMY;
            else if (value == "mdy")
                cfg.parser.date_order = DateOrder::MDY;
            else
                throw ConfigError("date_order wants dmy or mdy, got '" + value + "'");
        } else if (key == "allowed_schemes") {
            cfg.cleaning.allowed_schemes.clear();
            for (std::string& s : detail::conf_list(value))
                cfg.cleaning.allowed_schemes.insert(std::move(s));
        } else if (key == "nonlatin_filter") {
            cfg.cleaning.nonlatin_filter_on = detail::conf_bool(value, key);
        } else if (key == "zero_mac_invalid") {
            cfg.cleaning.zero_mac_invalid = detail::conf_bool(value, key);
        } else if (key == "termination_mode") {
            std::int64_t m = detail::conf_i64(value, key);
            if (m < 1 || m > 3) throw ConfigError("termination_mode wants 1, 2 or 3");
            cfg.mode = static_cast<TerminationMode>(m);
        } else if (key == "rate_statistic") {
            if (value == "mean")
                cfg.rate_stat = RateStatistic::Mean;
            else if (value == "median")
                cfg.rate_stat = RateStatistic::Median;
            else
                throw ConfigError("rate_statistic wants mean or median, got '" + value + "'");
        } else if (key == "min_time_ms") {
            cfg.refine.interval.min_ms = detail::conf_i64(value, key);
        } else if (key == "max_time_ms") {
            cfg.refine.interval.max_ms = detail::conf_i64(value, key);
        } else if (key == "error_titles") {
            cfg.refine.error_titles = detail::conf_list(value);
        } else if (key == "rules") {
            cfg.rules_path = value;
        } else if (key == "first_pages") {
            cfg.features.k = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "include_url_codes") {
            cfg.features.include_url_codes = detail::conf_bool(value, key);
        } else if (key == "include_durations") {
            cfg.features.norm.include_durations = detail::conf_bool(value, key);
        } else if (key == "one_hot") {
            cfg.features.one_hot = detail::conf_bool(value, key);
        } else if (key == "category_count") {
            cfg.features.category_count = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "morning_start") {
            cfg.features.periods.morning_start = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "afternoon_start") {
            cfg.features.periods.afternoon_start = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "night_start") {
            cfg.features.periods.night_start = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "normalization") {
            if (value == "none")
                cfg.features.norm.mode = NormalizationMode::None;
            else if (value == "minmax")
                cfg.features.norm.mode = NormalizationMode::MinMax;
            else if (value == "zscore")
                cfg.features.norm.mode = NormalizationMode::ZScore;
            else
                throw ConfigError("normalization wants none, minmax or zscore");
        } else if (key == "max_value_cap") {
            cfg.features.norm.max_value_cap =
                value.empty() ? std::nullopt
                              : std::optional<double>(detail::conf_double(value, key));
        } else if (key == "som_grid_w") {
            cfg.som.grid_w = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "som_grid_h") {
            cfg.som.grid_h = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "som_epochs") {
            cfg.som.epochs = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "som_alpha0") {
            cfg.som.alpha0 = detail::conf_double(value, key);
        } else if (key == "som_sigma0") {
            cfg.som.sigma0 = (value.empty() || value == "auto")
                                 ? std::nullopt
                                 : std::optional<double>(detail::conf_double(value, key));
        } else if (key == "som_seed") {
            cfg.som.seed = static_cast<std::uint64_t>(detail::conf_i64(value, key));
        } else if (key == "som_init") {
            if (value == "sample")
                cfg.som.init = SomInit::SampleDraw;
            else if (value == "uniform")
                cfg.som.init = SomInit::UniformRange;
            else
                throw ConfigError("som_init wants sample or uniform, got '" + value + "'");
        } else if (key == "top_n") {
            cfg.top_n = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_users") {
            cfg.gen.users = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_files") {
            cfg.gen.files = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_surfs_min") {
            cfg.gen.surfs_min = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_surfs_max") {
            cfg.gen.surfs_max = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_windows_min") {
            cfg.gen.windows_min = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_windows_max") {
            cfg.gen.windows_max = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_pages_min") {
            cfg.gen.pages_min = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_pages_max") {
            cfg.gen.pages_max = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_dwell_min_ms") {
            cfg.gen.dwell_min_ms = detail::conf_i64(value, key);
        } else if (key == "gen_dwell_max_ms") {
            cfg.gen.dwell_max_ms = detail::conf_i64(value, key);
        } else if (key == "gen_load_min_ms") {
            cfg.gen.load_min_ms = detail::conf_i64(value, key);
        } else if (key == "gen_load_max_ms") {
            cfg.gen.load_max_ms = detail::conf_i64(value, key);
        } else if (key == "gen_invalid_mac_rate") {
            cfg.gen.invalid_mac_rate = detail::conf_double(value, key);
        } else if (key == "gen_untargeted_rate") {
            cfg.gen.untargeted_rate = detail::conf_double(value, key);
        } else if (key == "gen_nonlatin_rate") {
            cfg.gen.nonlatin_rate = detail::conf_double(value, key);
        } else if (key == "gen_frame_rate") {
            cfg.gen.frame_rate = detail::conf_double(value, key);
        } else if (key == "gen_crash_rate") {
            cfg.gen.crash_rate = detail::conf_double(value, key);
        } else if (key == "gen_skew_rate") {
            cfg.gen.skew_rate = detail::conf_double(value, key);
        } else if (key == "gen_short_rate") {
            cfg.gen.short_rate = detail::conf_double(value, key);
        } else if (key == "gen_frames_per_episode") {
            cfg.gen.frames_per_episode = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_start_year") {
            cfg.gen.start_year = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_start_month") {
            cfg.gen.start_month = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_start_day") {
            cfg.gen.start_day = static_cast<int>(detail::conf_i64(value, key));
        } else if (key == "gen_seed") {
            cfg.gen_seed = static_cast<std::uint64_t>(detail::conf_i64(value, key));
        } else {
            throw ConfigError("unknown key '" + key + "' on line " + std::to_string(lineno));
        }
    }
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    return parse_pipeline_config(read_file_bytes(path));
}

// Every tunable with its default, ready to copy and edit.
inline std::string default_config_text() {
    return "# surfminer run configuration: key = value, one per line\n"
           "# input = logs/machine1.log   (repeat the key for several files)\n"
           "out_dir = out\n"
           "date_order = dmy\n"
           "allowed_schemes = http,ftp\n"
           "nonlatin_filter = true\n"
           "zero_mac_invalid = true\n"
           "termination_mode = 3\n"
           "rate_statistic = mean\n"
           "min_time_ms = 20000\n"
           "max_time_ms = 1800000\n"
           "error_titles = 404,not found,error,erreur\n"
           "rules = \n"
           "first_pages = 2\n"
           "include_url_codes = false\n"
           "include_durations = false\n"
           "one_hot = false\n"
           "category_count = 9\n"
           "morning_start = 6\n"
           "afternoon_start = 12\n"
           "night_start = 18\n"
           "normalization = none\n"
           "max_value_cap = \n"
           "som_grid_w = 3\n"
           "som_grid_h = 3\n"
           "som_epochs = 100\n"
           "som_alpha0 = 0.5\n"
           "som_sigma0 = auto\n"
           "som_seed = 0\n"
           "som_init = sample\n"
           "top_n = 10\n"
           "gen_users = 3\n"
           "gen_files = 1\n"
           "gen_surfs_min = 2\n"
           "gen_surfs_max = 3\n"
           "gen_windows_min = 1\n"
           "gen_windows_max = 2\n"
           "gen_pages_min = 2\n"
           "gen_pages_max = 4\n"
           "gen_dwell_min_ms = 25000\n"
           "gen_dwell_max_ms = 120000\n"
           "gen_load_min_ms = 400\n"
           "gen_load_max_ms = 1500\n"
           "gen_invalid_mac_rate = 0\n"
           "gen_untargeted_rate = 0\n"
           "gen_nonlatin_rate = 0\n"
           "gen_frame_rate = 0\n"
           "gen_crash_rate = 0\n"
           "gen_skew_rate = 0\n"
           "gen_short_rate = 0\n"
           "gen_frames_per_episode = 3\n"
           "gen_start_year = 2008\n"
           "gen_start_month = 5\n"
           "gen_start_day = 5\n"
           "gen_seed = 0\n";
}

// The only environment the toolkit reads: an output-directory override.
inline void apply_env_overrides(PipelineConfig& cfg) {
    if (const char* dir = std::getenv("SURFMINER_OUT"); dir && *dir) cfg.out_dir = dir;
}

// Checks every knob except the input-log paths; stages that work from
// previously persisted artifacts never touch the raw inputs.
inline void validate_options(const PipelineConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("out_dir must not be empty");
    if (!cfg.rules_path.empty() && !std::filesystem::exists(cfg.rules_path))
        throw ConfigError("rules file not found: " + cfg.rules_path);
    if (cfg.refine.interval.min_ms < 0 ||
        cfg.refine.interval.max_ms < cfg.refine.interval.min_ms)
        throw ConfigError("validity interval wants 0 <= min <= max");
    if (cfg.features.k < 1) throw ConfigError("first_pages must be at least 1");
    if (cfg.features.category_count < 1) throw ConfigError("category_count must be positive");
    const PeriodBoundaries& pb = cfg.features.periods;
    if (pb.morning_start < 0 || pb.morning_start >= pb.afternoon_start ||
        pb.afternoon_start >= pb.night_start || pb.night_start > 23)
        throw ConfigError("period boundaries want 0 <= morning < afternoon < night <= 23");
    if (cfg.top_n < 1) throw ConfigError("top_n must be at least 1");
    validate(cfg.som);
    validate(cfg.gen);
}

inline void validate(const PipelineConfig& cfg) {
    if (cfg.inputs.empty()) throw ConfigError("no input logs configured");
    for (const std::string& path : cfg.inputs)
        if (!std::filesystem::exists(path)) throw ConfigError("input not found: " + path);
    validate_options(cfg);
}

// ---------------------------------------------------------------------------
// Top sites (first-level URLs ranked by visits or by total duration)

enum class RankBy : int { Frequency = 0, Duration = 1 };

struct SiteRank {
    std::string site;  // scheme://host
    std::int64_t visits = 0;
    std::int64_t duration_ms = 0;

    bool operator==(const SiteRank&) const = default;
};

inline std::vector<SiteRank> top_sites(const std::vector<Surf>& surfs,
                                       const std::vector<UrlRecord>& urls, int n, RankBy by) {
    if (n < 1) throw ConfigError("top_sites wants n >= 1");
    std::map<std::string, SiteRank> acc;
    for (const Surf& s : surfs)
        for (const WindowVisit& w : s.windows)
            for (const PageVisit& p : w.pages) {
                const UrlRecord& u = urls[static_cast<std::size_t>(p.url_id)];
                std::string site = u.scheme + "://" + u.host;
                SiteRank& r = acc[site];
                r.site = std::move(site);
                ++r.visits;
                r.duration_ms += p.duration_ms;
            }

    std::vector<SiteRank> out;
    out.reserve(acc.size());
    for (auto& [site, rank] : acc) out.push_back(std::move(rank));
    std::sort(out.begin(), out.end(), [by](const SiteRank& a, const SiteRank& b) {
        std::int64_t ka = by == RankBy::Frequency ? a.visits : a.duration_ms;
        std::int64_t kb = by == RankBy::Frequency ? b.visits : b.duration_ms;
        if (ka != kb) return ka > kb;
        return a.site < b.site;
    });
    if (out.size() > static_cast<std::size_t>(n)) out.resize(static_cast<std::size_t>(n));
    return out;
}

inline void save_top_sites(const std::vector<SiteRank>& ranks, const std::string& path) {
    std::string text = "# rank\tsite\tvisits\tduration_ms\n";
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        text += join_row({std::to_string(i + 1), ranks[i].site, std::to_string(ranks[i].visits),
                          std::to_string(ranks[i].duration_ms)});
        text += '\n';
    }
    write_file_bytes(path, text);
}

// ---------------------------------------------------------------------------
// Preprocessing statistics table

struct LogStatsRow {
    std::string scope;  // source file id, or "total"
    std::string name;   // log file name; empty for the consolidated row
    CleaningReport cleaning;
    std::int64_t unterminated = 0;
    std::int64_t surfs = 0;
    std::int64_t aberrant_surfs = 0;
    std::int64_t aberrant_pages = 0;
    std::int64_t aberrant_windows = 0;

    bool operator==(const LogStatsRow&) const = default;
};

struct StatsReport {
    std::vector<LogStatsRow> per_log;
    LogStatsRow consolidated;
    std::int64_t min_time_ms = 20000;
    std::string tsv;
    std::string text;
};

namespace detail {

inline double pct(std::int64_t part, std::int64_t whole) {
    return whole > 0 ? 100.0 * static_cast<double>(part) / static_cast<double>(whole) : 0.0;
}

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// All ratios are recomputed from the counts in the row.
inline double physical_ratio(const LogStatsRow& r) {
    return pct(r.cleaning.total_removed(), r.cleaning.loaded);
}

inline double compacting_ratio(const LogStatsRow& r) {
    return pct(r.surfs - r.aberrant_surfs, r.surfs);
}

inline std::string stats_tsv(const StatsReport& rep) {
    std::string out =
        "# scope\tname\tloaded\tinvalid_mac\tuntargeted\tnonlatin\tframe_events\torphans\t"
        "retained\tphysical_cleaning_ratio\tunterminated\tsurfs\taberrant_surfs\t"
        "aberrant_pages\taberrant_windows\tcompacting_ratio\n";
    auto row = [&out](const LogStatsRow& r) {
        const CleaningReport& c = r.cleaning;
        out += join_row(
            {r.scope, r.name.empty() ? "-" : r.name, std::to_string(c.loaded),
             std::to_string(c.invalid_mac_removed), std::to_string(c.untargeted_removed),
             std::to_string(c.nonlatin_removed), std::to_string(c.frame_events_removed),
             std::to_string(c.orphans_removed), std::to_string(c.retained),
             fixed2(physical_ratio(r)), std::to_string(r.unterminated), std::to_string(r.surfs),
             std::to_string(r.aberrant_surfs), std::to_string(r.aberrant_pages),
             std::to_string(r.aberrant_windows), fixed2(compacting_ratio(r))});
        out += '\n';
    };
    for (const LogStatsRow& r : rep.per_log) row(r);
    row(rep.consolidated);
    return out;
}

// Aligned text block: one line per operation, one column per log plus the
// consolidated column.
inline std::string stats_text(const StatsReport& rep) {
    std::vector<const LogStatsRow*> cols;
    for (const LogStatsRow& r : rep.per_log) cols.push_back(&r);
    cols.push_back(&rep.consolidated);

    std::vector<std::string> headers;
    for (const LogStatsRow* r : cols)
        headers.push_back(r->name.empty() ? (r->scope == "total" ? "Consolidated" : r->scope)
                                          : r->name);

    const std::string mintime_label = "Removal of aberrant items (MinTime=" +
                                      std::to_string(rep.min_time_ms / 1000) + " second)";
    std::vector<std::pair<std::string, std::vector<std::string>>> lines;
    auto add_counts = [&](const std::string& label, auto getter) {
        std::vector<std::string> cells;
        for (const LogStatsRow* r : cols) cells.push_back(std::to_string(getter(*r)));
        lines.emplace_back(label, std::move(cells));
    };
    auto add_ratio = [&](const std::string& label, auto getter) {
        std::vector<std::string> cells;
        for (const LogStatsRow* r : cols) cells.push_back(fixed2(getter(*r)));
        lines.emplace_back(label, std::move(cells));
    };
    auto section = [&](const std::string& label) { lines.emplace_back(label, std::vector<std::string>{}); };

    add_counts("Loading (number of lines)", [](const LogStatsRow& r) { return r.cleaning.loaded; });
    section("Useless items filtering");
    add_counts("  Invalid MAC", [](const LogStatsRow& r) { return r.cleaning.invalid_mac_removed; });
    add_counts("  Untargeted URL", [](const LogStatsRow& r) { return r.cleaning.untargeted_removed; });
    add_counts("  Non-Latin title", [](const LogStatsRow& r) { return r.cleaning.nonlatin_removed; });
    add_counts("  Removal of frame events",
               [](const LogStatsRow& r) { return r.cleaning.frame_events_removed; });
    add_counts("  Orphan events", [](const LogStatsRow& r) { return r.cleaning.orphans_removed; });
    add_counts("  Retained entries", [](const LogStatsRow& r) { return r.cleaning.retained; });
    add_ratio("Ratio of physical cleaning", physical_ratio);
    add_counts("Unterminated windows", [](const LogStatsRow& r) { return r.unterminated; });
    add_counts("Reconstructed surfs", [](const LogStatsRow& r) { return r.surfs; });
    section(mintime_label);
    add_counts("  Surfs", [](const LogStatsRow& r) { return r.aberrant_surfs; });
    add_counts("  Pages", [](const LogStatsRow& r) { return r.aberrant_pages; });
    add_counts("  Windows", [](const LogStatsRow& r) { return r.aberrant_windows; });
    add_ratio("Ratio of compacting of surfs on sessions", compacting_ratio);

    std::size_t label_w = std::string("Operation").size();
    for (const auto& [label, cells] : lines) label_w = std::max(label_w, label.size());
    std::vector<std::size_t> col_w(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        col_w[c] = std::max<std::size_t>(headers[c].size(), 6);
        for (const auto& [label, cells] : lines)
            if (!cells.empty()) col_w[c] = std::max(col_w[c], cells[c].size());
    }

    auto pad_left = [](const std::string& s, std::size_t w) {
        return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
    };
    std::string out = "Operation" + std::string(label_w - 9, ' ');
    for (std::size_t c = 0; c < cols.size(); ++c) out += "  " + pad_left(headers[c], col_w[c]);
    out += '\n';
    for (const auto& [label, cells] : lines) {
        out += label;
        if (!cells.empty()) {
            out += std::string(label_w - label.size(), ' ');
            for (std::size_t c = 0; c < cols.size(); ++c) out += "  " + pad_left(cells[c], col_w[c]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace detail

// Rebuilds the preprocessing table from the persisted artifacts: per-log
// rows plus a consolidated row that is the column-wise sum. Writes
// stats.tsv and stats.txt next to the inputs and hands the table back.
inline StatsReport report_stats(const std::string& out_dir) {
    for (const char* artifact : {"ingest_report.tsv", "cleaning_report.tsv", "session_stats.tsv"})
        if (!std::filesystem::exists(out_dir + "/" + std::string(artifact)))
            throw MissingArtifacts(std::string(artifact) + " in " + out_dir);

    std::map<std::string, std::string> names;  // file id -> log name, for display
    for (const auto& row : read_tsv_file(out_dir + "/ingest_report.tsv")) {
        if (row.size() != 5) throw IoFailure("bad ingest_report.tsv row width");
        names[row[0]] = std::filesystem::path(row[1]).filename().string();
    }

    std::map<std::int64_t, LogStatsRow> rows;  // keyed by source file id
    LogStatsRow total;
    total.scope = "total";
    for (const auto& row : read_tsv_file(out_dir + "/cleaning_report.tsv")) {
        if (row.size() != 9) throw IoFailure("bad cleaning_report.tsv row width");
        CleaningReport c;
        c.loaded = detail::to_i64(row[1], "cleaning_report.tsv");
        c.invalid_mac_removed = detail::to_i64(row[2], "cleaning_report.tsv");
        c.untargeted_removed = detail::to_i64(row[3], "cleaning_report.tsv");
        c.nonlatin_removed = detail::to_i64(row[4], "cleaning_report.tsv");
        c.frame_events_removed = detail::to_i64(row[5], "cleaning_report.tsv");
        c.orphans_removed = detail::to_i64(row[6], "cleaning_report.tsv");
        c.retained = detail::to_i64(row[7], "cleaning_report.tsv");
        if (row[0] == "total") {
            total.cleaning = c;
        } else {
            LogStatsRow& r = rows[detail::to_i64(row[0], "cleaning_report.tsv")];
            r.scope = row[0];
            if (auto it = names.find(row[0]); it != names.end()) r.name = it->second;
            r.cleaning = c;
        }
    }

    StatsReport rep;
    for (const auto& row : read_tsv_file(out_dir + "/session_stats.tsv")) {
        if (row.size() != 8) throw IoFailure("bad session_stats.tsv row width");
        LogStatsRow* r;
        if (row[0] == "total") {
            r = &total;
        } else {
            r = &rows[detail::to_i64(row[0], "session_stats.tsv")];
            r->scope = row[0];
            if (auto it = names.find(row[0]); it != names.end()) r->name = it->second;
        }
        r->unterminated = detail::to_i64(row[1], "session_stats.tsv");
        r->surfs = detail::to_i64(row[2], "session_stats.tsv");
        r->aberrant_surfs = detail::to_i64(row[3], "session_stats.tsv");
        r->aberrant_pages = detail::to_i64(row[4], "session_stats.tsv");
        r->aberrant_windows = detail::to_i64(row[5], "session_stats.tsv");
        rep.min_time_ms = detail::to_i64(row[6], "session_stats.tsv");
    }

    for (auto& [scope, row] : rows) rep.per_log.push_back(std::move(row));
    rep.consolidated = std::move(total);
    rep.tsv = detail::stats_tsv(rep);
    rep.text = detail::stats_text(rep);
    write_file_bytes(out_dir + "/stats.tsv", rep.tsv);
    write_file_bytes(out_dir + "/stats.txt", rep.text);
    return rep;
}

// ---------------------------------------------------------------------------
// Orchestration

struct StageTiming {
    std::string stage;
    double milliseconds = 0.0;
};

struct RunReport {
    std::int64_t files = 0;
    std::int64_t rejected_lines = 0;
    CleaningReport cleaning;
    std::int64_t surfs = 0;
    std::int64_t windows = 0;
    std::int64_t pages = 0;
    std::int64_t unterminated = 0;
    std::int64_t orphans = 0;
    RefineReport refine;
    std::int64_t vectors = 0;
    double initial_qe = 0.0;
    double final_qe = 0.0;
    std::vector<StageTiming> timings;  // console material; never persisted
};

namespace detail {

template <class F>
auto timed_stage(RunReport& rep, const char* name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    auto note = [&] {
        const auto t1 = std::chrono::steady_clock::now();
        rep.timings.push_back(
            {name, std::chrono::duration<double, std::milli>(t1 - t0).count()});
    };
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            note();
        } else {
            auto out = body();
            note();
            return out;
        }
    } catch (const std::exception& e) {
        throw StageFailure(name, e.what());
    }
}

// Session-level stats attributed to the source log of each surf's opening
// event; refilled by the refine stage once the aberrant filter has run.
struct PerFileSessions {
    std::map<int, LogStatsRow> rows;
    LogStatsRow total;
};

inline void persist_session_stats(const PerFileSessions& s, const ValidityInterval& iv,
                                  const std::string& dir) {
    std::string text =
        "# scope\tunterminated\tsurfs\taberrant_surfs\taberrant_pages\taberrant_windows\t"
        "min_time_ms\tmax_time_ms\n";
    auto row = [&](const std::string& scope, const LogStatsRow& r) {
        text += join_row({scope, std::to_string(r.unterminated), std::to_string(r.surfs),
                          std::to_string(r.aberrant_surfs), std::to_string(r.aberrant_pages),
                          std::to_string(r.aberrant_windows), std::to_string(iv.min_ms),
                          std::to_string(iv.max_ms)});
        text += '\n';
    };
    for (const auto& [file, r] : s.rows) row(std::to_string(file), r);
    row("total", s.total);
    write_file_bytes(dir + "/session_stats.tsv", text);
}

}  // namespace detail

// Parses and merges the configured input logs, persisting per-file line
// accounting. Fails on an empty result so later stages never see a hollow
// corpus.
inline LogStore ingest_stage(const PipelineConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoFailure("cannot create " + cfg.out_dir + ": " + ec.message());

    std::vector<ParsedFile> parsed;
    int id = 0;
    for (const std::string& path : cfg.inputs)
        parsed.push_back(parse_log_file(path, id++, cfg.parser));
    LogStore store = merge_logs(std::move(parsed));
    if (store.entries.empty()) throw EmptyInput("input logs contain no entries");

    std::string report = "# file_id\tname\tlines\tentries\trejected\n";
    for (const FileInfo& f : store.files) {
        report += join_row({std::to_string(f.file_id), f.name, std::to_string(f.line_count),
                            std::to_string(f.entry_count), std::to_string(f.rejected_count)});
        report += '\n';
    }
    write_file_bytes(cfg.out_dir + "/ingest_report.tsv", report);
    return store;
}

// The session-refinement stage: derives durations, filters aberrant and
// error-titled pages, and categorizes what survived — the same steps as
// refine_sessions, with per-log bookkeeping wrapped around the aberrant
// filter. Persists the refined tables, session_stats.tsv (each surf and
// unterminated window attributed to the log holding its opening event),
// and the unknown-URL worklist into `out`.
inline RefineReport refine_stage(SessionTables& tables, const EncodedLog& log,
                                 const RefineConfig& rc, const std::vector<CategoryRule>& rules,
                                 const std::string& out) {
    for (Surf& s : tables.surfs)
        for (WindowVisit& w : s.windows)
            for (PageVisit& p : w.pages) p.duration_ms = p.end_ms - p.start_ms;

    std::map<std::pair<UserKey, std::int64_t>, int> openers;
    for (const CleanEntry& e : log.entries) openers.try_emplace({e.user, e.ms}, e.source_file);

    detail::PerFileSessions per_file;
    for (const UnterminatedWindow& w : tables.unterminated) {
        ++per_file.rows[log.entries.at(w.first_item).source_file].unterminated;
        ++per_file.total.unterminated;
    }

    struct Shape {
        int file = 0;
        std::int64_t windows = 0;
        std::int64_t pages = 0;
    };
    std::map<std::int64_t, Shape> before;
    for (const Surf& s : tables.surfs) {
        Shape& sh = before[s.surf_id];
        sh.file = openers.at({s.user, s.start_ms});
        sh.windows = static_cast<std::int64_t>(s.windows.size());
        for (const WindowVisit& w : s.windows)
            sh.pages += static_cast<std::int64_t>(w.pages.size());
        ++per_file.rows[sh.file].surfs;
        ++per_file.total.surfs;
    }

    RefineReport report;
    report.aberrant = filter_aberrant(tables.surfs, rc.interval);

    std::map<std::int64_t, Shape> after;
    for (const Surf& s : tables.surfs) {
        Shape& sh = after[s.surf_id];
        sh.windows = static_cast<std::int64_t>(s.windows.size());
        for (const WindowVisit& w : s.windows)
            sh.pages += static_cast<std::int64_t>(w.pages.size());
    }
    for (const auto& [surf_id, was] : before) {
        LogStatsRow& r = per_file.rows[was.file];
        auto it = after.find(surf_id);
        const std::int64_t windows_now = it == after.end() ? 0 : it->second.windows;
        const std::int64_t pages_now = it == after.end() ? 0 : it->second.pages;
        if (it == after.end()) {
            ++r.aberrant_surfs;
            ++per_file.total.aberrant_surfs;
        }
        r.aberrant_windows += was.windows - windows_now;
        per_file.total.aberrant_windows += was.windows - windows_now;
        r.aberrant_pages += was.pages - pages_now;
        per_file.total.aberrant_pages += was.pages - pages_now;
    }

    report.error_pages_removed = filter_error_pages(tables.surfs, rc.error_titles);
    std::vector<UnknownUrl> unknowns = categorize(tables.surfs, rules, log.urls);
    for (const Surf& s : tables.surfs)
        for (const WindowVisit& w : s.windows)
            for (const PageVisit& p : w.pages) {
                ++report.pages_kept;
                if (p.category == 0) ++report.unclassified_pages;
            }

    std::error_code ec;
    std::filesystem::create_directories(out + "/refined", ec);
    if (ec) throw IoFailure("cannot create " + out + "/refined: " + ec.message());
    persist_sessions(tables, out + "/refined");
    detail::persist_session_stats(per_file, rc.interval, out);

    std::string unk = "# base_url\tsample_title\tvisits\n";
    for (const UnknownUrl& u : unknowns) {
        unk += join_row({u.base_url, u.sample_title, std::to_string(u.visits)});
        unk += '\n';
    }
    write_file_bytes(out + "/unknown_urls.tsv", unk);
    return report;
}

struct ClusterOutcome {
    TrainResult trained;
    Assignments assigned;
};

// Trains the map on the feature rows, routes every vector to its unit, and
// persists the map, the per-unit summaries (tsv and text), and the
// surf-to-unit assignment table.
inline ClusterOutcome cluster_stage(const FeatureMatrix& matrix,
                                    const std::vector<SessionVector>& meta, const SomConfig& som,
                                    const std::string& out) {
    ClusterOutcome o;
    o.trained = train(init_map(som, matrix.rows), matrix.rows, som);
    o.assigned = assign(o.trained.map, matrix.rows, meta);

    save_map(o.trained.map, som, out + "/map.tsv");
    save_clusters(o.assigned.clusters, o.trained.map.grid_w, out + "/clusters.tsv");
    write_file_bytes(out + "/clusters.txt", cluster_text(o.trained.map, o.assigned.clusters));
    std::string units = "# surf_id\tunit\n";
    for (std::size_t i = 0; i < o.assigned.unit_of.size(); ++i) {
        units += join_row(
            {std::to_string(matrix.surf_ids[i]), std::to_string(o.assigned.unit_of[i])});
        units += '\n';
    }
    write_file_bytes(out + "/assignments.tsv", units);
    return o;
}

inline void write_top_sites(const SessionTables& tables, const std::vector<UrlRecord>& urls,
                            int n, const std::string& out) {
    save_top_sites(top_sites(tables.surfs, urls, n, RankBy::Frequency),
                   out + "/top_frequency.tsv");
    save_top_sites(top_sites(tables.surfs, urls, n, RankBy::Duration), out + "/top_duration.tsv");
}

// Runs the whole chain, persisting artifacts stage by stage. Every count in
// the persisted outputs is deterministic for fixed (inputs, config, seed);
// wall-clock timings live only in the returned report.
inline RunReport run_pipeline(const PipelineConfig& cfg) {
    validate(cfg);
    RunReport rep;
    const std::string out = cfg.out_dir;

    try {
        // --- ingest ---------------------------------------------------
        LogStore store = detail::timed_stage(rep, "ingest", [&] {
            LogStore s = ingest_stage(cfg);
            for (const FileInfo& f : s.files) rep.rejected_lines += f.rejected_count;
            rep.files = static_cast<std::int64_t>(s.files.size());
            return s;
        });

        // --- clean ----------------------------------------------------
        CleaningResult cleaned = detail::timed_stage(rep, "clean", [&] {
            CleaningResult r = run_cleaning(store, cfg.cleaning);
            persist_cleaned(r, out);
            rep.cleaning = r.report;
            return r;
        });

        // --- sessionize -----------------------------------------------
        SessionTables tables = detail::timed_stage(rep, "sessionize", [&] {
            SessionTables t = sessionize(cleaned.log.entries, cfg.mode, cfg.rate_stat);
            persist_sessions(t, out);
            for (const Surf& s : t.surfs) {
                rep.windows += static_cast<std::int64_t>(s.windows.size());
                for (const WindowVisit& w : s.windows)
                    rep.pages += static_cast<std::int64_t>(w.pages.size());
            }
            rep.surfs = static_cast<std::int64_t>(t.surfs.size());
            rep.unterminated = static_cast<std::int64_t>(t.unterminated.size());
            rep.orphans = t.orphan_count;
            return t;
        });

        // --- refine ---------------------------------------------------
        detail::timed_stage(rep, "refine", [&] {
            std::vector<CategoryRule> rules;
            if (!cfg.rules_path.empty()) rules = load_rules(cfg.rules_path);
            rep.refine = refine_stage(tables, cleaned.log, cfg.refine, rules, out);
        });

        // --- features ---------------------------------------------------
        std::vector<SessionVector> meta;
        FeatureMatrix matrix = detail::timed_stage(rep, "features", [&] {
            meta = build_session_vectors(tables.surfs, cleaned.log.urls, cfg.features);
            FeatureMatrix m = build_vectors(tables.surfs, cleaned.log.urls, cfg.features);
            export_features(m, out + "/features.tsv");
            rep.vectors = static_cast<std::int64_t>(m.rows.size());
            return m;
        });

        // --- cluster ----------------------------------------------------
        detail::timed_stage(rep, "cluster", [&] {
            ClusterOutcome o = cluster_stage(matrix, meta, cfg.som, out);
            rep.initial_qe = o.trained.trace.initial_qe;
            rep.final_qe = o.trained.trace.epoch_qe.empty() ? o.trained.trace.initial_qe
                                                            : o.trained.trace.epoch_qe.back();
        });

        // --- report -----------------------------------------------------
        detail::timed_stage(rep, "report", [&] {
            std::string kv = "# key\tvalue\n";
            auto put = [&kv](const std::string& k, const std::string& v) {
                kv += join_row({k, v});
                kv += '\n';
            };
            put("files", std::to_string(rep.files));
            put("rejected_lines", std::to_string(rep.rejected_lines));
            put("loaded", std::to_string(rep.cleaning.loaded));
            put("invalid_mac_removed", std::to_string(rep.cleaning.invalid_mac_removed));
            put("untargeted_removed", std::to_string(rep.cleaning.untargeted_removed));
            put("nonlatin_removed", std::to_string(rep.cleaning.nonlatin_removed));
            put("frame_events_removed", std::to_string(rep.cleaning.frame_events_removed));
            put("orphans_removed", std::to_string(rep.cleaning.orphans_removed));
            put("retained", std::to_string(rep.cleaning.retained));
            put("physical_cleaning_ratio",
                detail::fixed2(detail::pct(rep.cleaning.total_removed(), rep.cleaning.loaded)));
            put("surfs", std::to_string(rep.surfs));
            put("windows", std::to_string(rep.windows));
            put("pages", std::to_string(rep.pages));
            put("unterminated", std::to_string(rep.unterminated));
            put("orphan_events", std::to_string(rep.orphans));
            put("aberrant_surfs", std::to_string(rep.refine.aberrant.surfs));
            put("aberrant_pages", std::to_string(rep.refine.aberrant.pages));
            put("aberrant_windows", std::to_string(rep.refine.aberrant.windows));
            put("error_pages_removed", std::to_string(rep.refine.error_pages_removed));
            put("pages_kept", std::to_string(rep.refine.pages_kept));
            put("unclassified_pages", std::to_string(rep.refine.unclassified_pages));
            put("vectors", std::to_string(rep.vectors));
            put("initial_qe", fmt_double(rep.initial_qe));
            put("final_qe", fmt_double(rep.final_qe));
            write_file_bytes(out + "/run_report.tsv", kv);

            report_stats(out);
            write_top_sites(tables, cleaned.log.urls, cfg.top_n, out);
        });

        std::error_code ec;
        std::filesystem::remove(out + "/error.txt", ec);  // clear any stale failure note
    } catch (const StageFailure& f) {
        std::error_code ec;
        if (std::filesystem::exists(out, ec) && !ec) {
            try {
                write_file_bytes(out + "/error.txt", f.what() + std::string("\n"));
            } catch (const std::exception&) {
                // the error report is best-effort; the failure itself matters more
            }
        }
        throw;
    }
    return rep;
}

}  // namespace surfminer
