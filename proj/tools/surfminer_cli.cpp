// surfminer — command-line front end for the log-mining toolkit.
//
//   surfminer <subcommand> --config <path> [--seed N] [--mode 1|2|3]
//                          [--min-time MS] [--top N] [--out DIR]
//
// Exit codes: 0 success, 1 usage/config error, 2 stage failure (the failing
// stage is named on standard error).

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "surfminer/pipeline.hpp"

using namespace surfminer;

namespace {

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> mode;
    std::optional<std::int64_t> min_time;
    std::optional<int> top;
    std::optional<std::string> out;
};

// Resolution order: config file, then environment, then explicit flags.
// --seed feeds the generator for `generate` and the map training otherwise.
PipelineConfig effective_config(const Flags& f, bool seed_for_generator) {
    PipelineConfig cfg = load_pipeline_config(f.config_path);
    apply_env_overrides(cfg);
    if (f.out) cfg.out_dir = *f.out;
    if (f.mode) {
        if (*f.mode < 1 || *f.mode > 3) throw ConfigError("--mode wants 1, 2 or 3");
        cfg.mode = static_cast<TerminationMode>(*f.mode);
    }
    if (f.min_time) cfg.refine.interval.min_ms = *f.min_time;
    if (f.top) cfg.top_n = *f.top;
    if (f.seed) {
        if (seed_for_generator)
            cfg.gen_seed = *f.seed;
        else
            cfg.som.seed = *f.seed;
    }
    return cfg;
}

void cmd_ingest(const PipelineConfig& cfg) {
    validate(cfg);
    LogStore store = ingest_stage(cfg);
    std::int64_t rejected = 0;
    for (const FileInfo& f : store.files) rejected += f.rejected_count;
    std::cout << store.files.size() << " file(s), " << store.entries.size() << " entries, "
              << rejected << " rejected line(s)\n";
}

void cmd_clean(const PipelineConfig& cfg) {
    validate(cfg);
    CleaningResult r = run_cleaning(ingest_stage(cfg), cfg.cleaning);
    persist_cleaned(r, cfg.out_dir);
    const CleaningReport& c = r.report;
    std::cout << "loaded " << c.loaded << ", removed " << c.total_removed() << " (mac "
              << c.invalid_mac_removed << ", untargeted " << c.untargeted_removed
              << ", non-latin " << c.nonlatin_removed << ", frames " << c.frame_events_removed
              << ", orphans " << c.orphans_removed << "), retained " << c.retained << "\n";
}

void cmd_sessionize(const PipelineConfig& cfg) {
    validate_options(cfg);
    CleaningResult cleaned = load_cleaned(cfg.out_dir);
    SessionTables t = sessionize(cleaned.log.entries, cfg.mode, cfg.rate_stat);
    persist_sessions(t, cfg.out_dir);
    std::size_t windows = 0, pages = 0;
    for (const Surf& s : t.surfs) {
        windows += s.windows.size();
        for (const WindowVisit& w : s.windows) pages += w.pages.size();
    }
    std::cout << t.surfs.size() << " surf(s), " << windows << " window(s), " << pages
              << " page(s); " << t.unterminated.size() << " unterminated, " << t.orphan_count
              << " orphan event(s)\n";
}

void cmd_refine(const PipelineConfig& cfg) {
    validate_options(cfg);
    CleaningResult cleaned = load_cleaned(cfg.out_dir);
    SessionTables t = load_sessions(cfg.out_dir);
    std::vector<CategoryRule> rules;
    if (!cfg.rules_path.empty()) rules = load_rules(cfg.rules_path);
    RefineReport rep = refine_stage(t, cleaned.log, cfg.refine, rules, cfg.out_dir);
    std::cout << "removed " << rep.aberrant.pages << " aberrant page(s), " << rep.aberrant.windows
              << " window(s), " << rep.aberrant.surfs << " surf(s) and "
              << rep.error_pages_removed << " error page(s); kept " << rep.pages_kept
              << " page(s), " << rep.unclassified_pages << " unclassified\n";
}

void cmd_features(const PipelineConfig& cfg) {
    validate_options(cfg);
    CleaningResult cleaned = load_cleaned(cfg.out_dir);
    SessionTables t = load_sessions(cfg.out_dir + "/refined");
    FeatureMatrix m = build_vectors(t.surfs, cleaned.log.urls, cfg.features);
    export_features(m, cfg.out_dir + "/features.tsv");
    std::cout << m.rows.size() << " vector(s) x " << m.columns.size() << " column(s)\n";
}

void cmd_cluster(const PipelineConfig& cfg) {
    validate_options(cfg);
    CleaningResult cleaned = load_cleaned(cfg.out_dir);
    SessionTables t = load_sessions(cfg.out_dir + "/refined");
    std::vector<SessionVector> meta = build_session_vectors(t.surfs, cleaned.log.urls, cfg.features);
    FeatureMatrix matrix = load_features(cfg.out_dir + "/features.tsv");
    if (matrix.rows.size() != meta.size())
        throw WidthMismatch("features.tsv holds " + std::to_string(matrix.rows.size()) +
                            " vectors but the refined tables hold " + std::to_string(meta.size()));

    ClusterOutcome o = cluster_stage(matrix, meta, cfg.som, cfg.out_dir);
    const TrainingTrace& trace = o.trained.trace;
    double final_qe = trace.epoch_qe.empty() ? trace.initial_qe : trace.epoch_qe.back();
    std::cout << "quantization error " << fmt_double(trace.initial_qe) << " -> "
              << fmt_double(final_qe) << "\n";
    std::cout << cluster_text(o.trained.map, o.assigned.clusters);
}

void cmd_report(const PipelineConfig& cfg) {
    validate_options(cfg);
    StatsReport stats = report_stats(cfg.out_dir);
    CleaningResult cleaned = load_cleaned(cfg.out_dir);
    SessionTables t = load_sessions(cfg.out_dir + "/refined");
    write_top_sites(t, cleaned.log.urls, cfg.top_n, cfg.out_dir);
    std::cout << stats.text;
}

void cmd_label(const PipelineConfig& cfg) {
    validate_options(cfg);
    if (!::isatty(STDIN_FILENO) || !::isatty(STDOUT_FILENO)) throw NonInteractiveEnvironment();

    const std::string worklist = cfg.out_dir + "/unknown_urls.tsv";
    if (!std::filesystem::exists(worklist))
        throw MissingArtifacts("unknown_urls.tsv in " + cfg.out_dir);
    const std::string rules_path =
        cfg.rules_path.empty() ? cfg.out_dir + "/rules.tsv" : cfg.rules_path;
    std::vector<CategoryRule> rules;
    if (std::filesystem::exists(rules_path)) rules = load_rules(rules_path);

    const std::vector<Category>& cats = default_categories();
    std::cout << "categories:";
    for (const Category& c : cats)
        if (c.code != 0) std::cout << "  " << c.code << "=" << c.name;
    std::cout << "\n";

    int added = 0;
    for (const auto& row : read_tsv_file(worklist)) {
        if (row.size() != 3) throw IoFailure("bad unknown_urls.tsv row width");
        std::cout << row[0] << "  (\"" << row[1] << "\", " << row[2] << " visit(s))\n"
                  << "  category code [0 skips]: " << std::flush;
        std::string line;
        if (!std::getline(std::cin, line)) {
            std::cout << "\n";
            break;
        }
        int code = 0;
        try {
            code = std::stoi(line);
        } catch (const std::exception&) {
            std::cout << "  not a number, skipped\n";
            continue;
        }
        if (code == 0) continue;
        if (!find_category(cats, code)) {
            std::cout << "  unknown code, skipped\n";
            continue;
        }
        CategoryRule rule;
        rule.kind = CategoryRule::Kind::ExactUrl;
        rule.pattern = row[0];
        rule.category = code;
        rules.push_back(rule);
        ++added;
    }
    if (added > 0) save_rules(rules, rules_path);
    std::cout << "added " << added << " rule(s) to " << rules_path << "\n";
}

void cmd_generate(const PipelineConfig& cfg) {
    SyntheticCorpus corpus = generate_synthetic(cfg.gen, cfg.gen_seed, cfg.out_dir);
    std::int64_t lines = 0;
    for (const GtFile& f : corpus.truth.files) lines += f.lines;
    std::cout << "wrote " << corpus.files.size() << " log file(s), " << lines
              << " lines, ground_truth.json and rules.tsv to " << cfg.out_dir << "\n";
}

void cmd_run(const PipelineConfig& cfg) {
    RunReport rep = run_pipeline(cfg);
    for (const StageTiming& t : rep.timings) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%10.1f ms  ", t.milliseconds);
        std::cout << buf << t.stage << "\n";
    }
    std::cout << rep.cleaning.loaded << " entries -> " << rep.surfs << " surf(s) -> "
              << rep.vectors << " vector(s); quantization error "
              << fmt_double(rep.initial_qe) << " -> " << fmt_double(rep.final_qe)
              << "; artifacts in " << cfg.out_dir << "\n";
}

struct Command {
    const char* name;
    const char* help;
    void (*body)(const PipelineConfig&);
    bool seed_for_generator;
};

const Command kCommands[] = {
    {"ingest", "parse the input logs and persist line accounting", cmd_ingest, false},
    {"clean", "parse and run the physical cleaning chain", cmd_clean, false},
    {"sessionize", "reconstruct surfs/windows/pages from cleaned entries", cmd_sessionize, false},
    {"refine", "filter aberrant items and categorize the kept pages", cmd_refine, false},
    {"features", "build per-surf feature vectors from refined tables", cmd_features, false},
    {"cluster", "train the self-organizing map and assign every surf", cmd_cluster, false},
    {"report", "rebuild the summary tables from persisted artifacts", cmd_report, false},
    {"label", "interactively map unknown URLs onto categories", cmd_label, false},
    {"generate", "emit a synthetic corpus with its ground-truth sidecar", cmd_generate, true},
    {"run", "execute the full pipeline end to end", cmd_run, false},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"surfminer: mine browser-event logs into cleaned sessions and clusters"};
    app.require_subcommand(1);

    Flags flags;
    for (const Command& c : kCommands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", flags.config_path, "key = value configuration file")
            ->required();
        sub->add_option("--seed", flags.seed,
                        c.seed_for_generator ? "corpus seed" : "map training seed");
        sub->add_option("--mode", flags.mode, "unterminated-window strategy (1, 2 or 3)");
        sub->add_option("--min-time", flags.min_time, "validity-interval minimum (ms)");
        sub->add_option("--top", flags.top, "rows in the top-sites tables");
        sub->add_option("--out", flags.out, "output directory (beats config and environment)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const Command* active = nullptr;
    for (const Command& c : kCommands)
        if (app.get_subcommand(c.name)->parsed()) active = &c;

    PipelineConfig cfg;
    try {
        cfg = effective_config(flags, active->seed_for_generator);
    } catch (const std::exception& e) {
        std::cerr << "surfminer: " << e.what() << "\n";
        return 1;
    }

    try {
        active->body(cfg);
    } catch (const StageFailure& f) {
        std::cerr << "surfminer: " << f.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "surfminer: " << e.what() << "\n";
        return 1;
    } catch (const NonInteractiveEnvironment& e) {
        std::cerr << "surfminer: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "surfminer: stage '" << active->name << "' failed: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
