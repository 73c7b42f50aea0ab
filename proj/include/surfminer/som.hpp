#pragma once

// som.hpp — a compact Kohonen self-organizing map over session feature
// vectors: seeded initialization, online training with linearly decaying
// rate and neighborhood radius, Euclidean best-matching-unit search,
// per-unit cluster summaries, and TSV persistence.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surfminer/errors.hpp"
#include "surfminer/features.hpp"
#include "surfminer/refiner.hpp"
#include "surfminer/rng.hpp"
#include "surfminer/tsv.hpp"

namespace surfminer {

enum class SomInit : int { SampleDraw = 0, UniformRange = 1 };

struct SomConfig {
    int grid_w = 3;
    int grid_h = 3;
    int epochs = 100;
    double alpha0 = 0.5;
    // Initial neighborhood radius; unset means max(grid_w, grid_h) / 2.
    std::optional<double> sigma0;
    std::uint64_t seed = 0;
    SomInit init = SomInit::SampleDraw;

    bool operator==(const SomConfig&) const = default;
};

inline double effective_sigma0(const SomConfig& c) {
    return c.sigma0 ? *c.sigma0 : std::max(c.grid_w, c.grid_h) / 2.0;
}

inline void validate(const SomConfig& c) {
    if (c.grid_w < 1 || c.grid_h < 1 || c.grid_w * c.grid_h < 2)
        throw ConfigError("som grid needs at least two units");
    if (c.epochs < 1) throw ConfigError("som needs at least one epoch");
    if (!(c.alpha0 > 0.0) || c.alpha0 > 1.0)
        throw ConfigError("som alpha0 must be in (0, 1]");
    if (!(effective_sigma0(c) > 0.0)) throw ConfigError("som sigma0 must be positive");
}

// Rectangular grid, row-major unit indexing: unit (r, c) lives at
// r * grid_w + c. Weight vectors all share the feature width.
struct SomMap {
    int grid_w = 0;
    int grid_h = 0;
    std::vector<std::vector<double>> weights;

    int units() const { return grid_w * grid_h; }
    int row_of(int unit) const { return unit / grid_w; }
    int col_of(int unit) const { return unit % grid_w; }
    std::size_t width() const { return weights.empty() ? 0 : weights[0].size(); }

    bool operator==(const SomMap&) const = default;
};

struct TrainingTrace {
    double initial_qe = 0.0;        // before the first update
    std::vector<double> epoch_qe;   // after each epoch, one entry per epoch

    bool operator==(const TrainingTrace&) const = default;
};

namespace detail {

// Chebyshev distance between two units on the grid.
inline int grid_distance(const SomMap& m, int a, int b) {
    return std::max(std::abs(m.row_of(a) - m.row_of(b)),
                    std::abs(m.col_of(a) - m.col_of(b)));
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline void check_data(const SomMap& m, const std::vector<std::vector<double>>& data,
                       const char* what) {
    for (const auto& row : data)
        if (row.size() != m.width())
            throw WidthMismatch(std::string(what) + ": vector width " +
                                std::to_string(row.size()) + " vs map width " +
                                std::to_string(m.width()));
}

}  // namespace detail

// Unit nearest to x by Euclidean distance; ties go to the smallest
// row-major index (the scan order makes that automatic).
inline int bmu(const SomMap& m, const std::vector<double>& x) {
    if (x.size() != m.width())
        throw WidthMismatch("bmu query width " + std::to_string(x.size()) +
                            " vs map width " + std::to_string(m.width()));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int u = 0; u < m.units(); ++u) {
        double d = detail::squared_distance(m.weights[static_cast<std::size_t>(u)], x);
        if (d < best_d) {
            best_d = d;
            best = u;
        }
    }
    return best;
}

// Mean Euclidean distance from the samples to their best matching units.
inline double quantization_error(const SomMap& m, const std::vector<std::vector<double>>& data) {
    if (data.empty()) throw EmptyData("quantization error over an empty sample set");
    detail::check_data(m, data, "quantization error");
    double total = 0.0;
    for (const auto& x : data)
        total += std::sqrt(detail::squared_distance(m.weights[static_cast<std::size_t>(bmu(m, x))], x));
    return total / static_cast<double>(data.size());
}

inline SomMap init_map(const SomConfig& cfg, const std::vector<std::vector<double>>& data) {
    validate(cfg);
    if (data.empty()) throw EmptyData("som initialization needs data");
    const std::size_t width = data[0].size();
    if (width == 0) throw EmptyData("som initialization needs nonempty vectors");
    for (const auto& row : data)
        if (row.size() != width) throw WidthMismatch("som initialization: ragged data");

    SomMap m;
    m.grid_w = cfg.grid_w;
    m.grid_h = cfg.grid_h;
    const int units = cfg.grid_w * cfg.grid_h;
    m.weights.reserve(static_cast<std::size_t>(units));
    DeterministicRng rng(cfg.seed);

    if (cfg.init == SomInit::SampleDraw) {
        if (data.size() >= static_cast<std::size_t>(units)) {
            // Without replacement: shuffle row indices, take the first ones.
            std::vector<std::size_t> idx(data.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            rng.shuffle(idx);
            for (int u = 0; u < units; ++u) m.weights.push_back(data[idx[static_cast<std::size_t>(u)]]);
        } else {
            for (int u = 0; u < units; ++u)
                m.weights.push_back(data[static_cast<std::size_t>(rng.next_below(data.size()))]);
        }
    } else {
        std::vector<double> lo(width), hi(width);
        for (std::size_t c = 0; c < width; ++c) {
            lo[c] = hi[c] = data[0][c];
            for (const auto& row : data) {
                lo[c] = std::min(lo[c], row[c]);
                hi[c] = std::max(hi[c], row[c]);
            }
        }
        for (int u = 0; u < units; ++u) {
            std::vector<double> w(width);
            for (std::size_t c = 0; c < width; ++c)
                w[c] = lo[c] + rng.next_double() * (hi[c] - lo[c]);
            m.weights.push_back(std::move(w));
        }
    }
    return m;
}

// One online update. Units within Chebyshev radius sigma of the BMU move
// toward x by alpha * exp(-g^2 / (2 sigma^2)); units outside the shrinking
// neighborhood stay put. The blend form keeps the full-rate step exact:
// alpha * h == 1 lands the weight on x with no rounding residue.
inline void train_step(SomMap& m, const std::vector<double>& x, double alpha, double sigma) {
    const int b = bmu(m, x);
    for (int u = 0; u < m.units(); ++u) {
        const int g = detail::grid_distance(m, u, b);
        if (static_cast<double>(g) > sigma) continue;
        const double h = g == 0 ? 1.0
                                : std::exp(-static_cast<double>(g) * g / (2.0 * sigma * sigma));
        const double rate = alpha * h;
        auto& w = m.weights[static_cast<std::size_t>(u)];
        for (std::size_t c = 0; c < w.size(); ++c)
            w[c] = (1.0 - rate) * w[c] + rate * x[c];
    }
}

struct TrainResult {
    SomMap map;
    TrainingTrace trace;

    bool operator==(const TrainResult&) const = default;
};

// Online training. Per epoch e: alpha(e) = alpha0 * (1 - e/epochs),
// sigma(e) = max(sigma0 * (1 - e/epochs), 0.5); sample order reshuffled
// each epoch by the seeded generator. Fully deterministic given the seed.
inline TrainResult train(SomMap map, const std::vector<std::vector<double>>& data,
                         const SomConfig& cfg) {
    validate(cfg);
    if (data.empty()) throw EmptyData("som training needs data");
    if (map.grid_w != cfg.grid_w || map.grid_h != cfg.grid_h ||
        map.weights.size() != static_cast<std::size_t>(map.units()))
        throw ConfigError("som map shape does not match the config");
    detail::check_data(map, data, "som training");

    const double sigma0 = effective_sigma0(cfg);
    DeterministicRng rng(cfg.seed);

    TrainResult out{std::move(map), {}};
    out.trace.initial_qe = quantization_error(out.map, data);
    out.trace.epoch_qe.reserve(static_cast<std::size_t>(cfg.epochs));

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int e = 0; e < cfg.epochs; ++e) {
        const double frac = 1.0 - static_cast<double>(e) / static_cast<double>(cfg.epochs);
        const double alpha = cfg.alpha0 * frac;
        const double sigma = std::max(sigma0 * frac, 0.5);
        rng.shuffle(order);
        for (std::size_t i : order) train_step(out.map, data[i], alpha, sigma);
        out.trace.epoch_qe.push_back(quantization_error(out.map, data));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assignment and cluster summaries

struct CategoryPair {
    int first = 0;   // category of the session's first page
    int second = 0;  // and of its second (0 when padded)
    std::int64_t count = 0;

    bool operator==(const CategoryPair&) const = default;
};

struct ClusterSummary {
    int unit = 0;
    std::int64_t count = 0;
    PeriodBucket modal_period = PeriodBucket::Morning;
    std::vector<CategoryPair> top_pairs;             // at most 3, by frequency
    std::vector<std::int64_t> representative_surfs;  // first members, at most 5

    bool operator==(const ClusterSummary&) const = default;
};

struct Assignments {
    std::vector<int> unit_of;              // parallel to the data rows
    std::vector<ClusterSummary> clusters;  // one per unit, row-major order

    bool operator==(const Assignments&) const = default;
};

inline constexpr int kTopPairs = 3;
inline constexpr int kRepresentativeSurfs = 5;

// Routes every vector to its BMU and summarizes each unit: member count,
// modal period (ties to the earlier period), and the most frequent
// (first page, second page) category pairs (ties to the smaller codes).
inline Assignments assign(const SomMap& m, const std::vector<std::vector<double>>& data,
                          const std::vector<SessionVector>& meta) {
    if (data.empty()) throw EmptyData("no vectors to assign");
    if (meta.size() != data.size())
        throw WidthMismatch("assign: " + std::to_string(meta.size()) + " metadata rows for " +
                            std::to_string(data.size()) + " vectors");
    detail::check_data(m, data, "assign");

    Assignments out;
    out.unit_of.reserve(data.size());
    const std::size_t units = static_cast<std::size_t>(m.units());
    std::vector<std::array<std::int64_t, 3>> period_counts(units, {0, 0, 0});
    std::vector<std::map<std::pair<int, int>, std::int64_t>> pair_counts(units);
    out.clusters.resize(units);

    for (std::size_t i = 0; i < data.size(); ++i) {
        const int u = bmu(m, data[i]);
        out.unit_of.push_back(u);
        ClusterSummary& s = out.clusters[static_cast<std::size_t>(u)];
        s.count += 1;
        if (s.representative_surfs.size() < static_cast<std::size_t>(kRepresentativeSurfs))
            s.representative_surfs.push_back(meta[i].surf_id);
        period_counts[static_cast<std::size_t>(u)]
                     [static_cast<std::size_t>(meta[i].period)] += 1;
        const int first = meta[i].categories.empty() ? 0 : meta[i].categories[0];
        const int second = meta[i].categories.size() > 1 ? meta[i].categories[1] : 0;
        pair_counts[static_cast<std::size_t>(u)][{first, second}] += 1;
    }

    for (std::size_t u = 0; u < units; ++u) {
        ClusterSummary& s = out.clusters[u];
        s.unit = static_cast<int>(u);
        int modal = 0;
        for (int p = 1; p < 3; ++p)
            if (period_counts[u][static_cast<std::size_t>(p)] >
                period_counts[u][static_cast<std::size_t>(modal)])
                modal = p;
        s.modal_period = static_cast<PeriodBucket>(modal);

        std::vector<CategoryPair> pairs;
        pairs.reserve(pair_counts[u].size());
        for (const auto& [key, n] : pair_counts[u])
            pairs.push_back({key.first, key.second, n});
        std::sort(pairs.begin(), pairs.end(), [](const CategoryPair& a, const CategoryPair& b) {
            if (a.count != b.count) return a.count > b.count;
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        });
        if (pairs.size() > static_cast<std::size_t>(kTopPairs))
            pairs.resize(static_cast<std::size_t>(kTopPairs));
        s.top_pairs = std::move(pairs);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace detail {

inline std::string som_init_name(SomInit i) {
    return i == SomInit::SampleDraw ? "sample" : "uniform";
}

inline SomInit som_init_from(const std::string& s) {
    if (s == "sample") return SomInit::SampleDraw;
    if (s == "uniform") return SomInit::UniformRange;
    throw IoFailure("unknown som init mode: " + s);
}

}  // namespace detail

// map.tsv: a config echo comment, then one row per unit (row, col, weights).
inline void save_map(const SomMap& m, const SomConfig& cfg, const std::string& path) {
    std::string text = "# som map\n";
    text += "# grid_w=" + std::to_string(cfg.grid_w) + " grid_h=" + std::to_string(cfg.grid_h) +
            " epochs=" + std::to_string(cfg.epochs) + " alpha0=" + fmt_double(cfg.alpha0) +
            " sigma0=" + fmt_double(effective_sigma0(cfg)) + " seed=" + std::to_string(cfg.seed) +
            " init=" + detail::som_init_name(cfg.init) + "\n";
    text += "# row\tcol\tweights...\n";
    for (int u = 0; u < m.units(); ++u) {
        std::vector<std::string> fields = {std::to_string(m.row_of(u)),
                                           std::to_string(m.col_of(u))};
        for (double w : m.weights[static_cast<std::size_t>(u)]) fields.push_back(fmt_double(w));
        text += join_row(fields);
        text += '\n';
    }
    write_file_bytes(path, text);
}

struct LoadedMap {
    SomMap map;
    SomConfig config;

    bool operator==(const LoadedMap&) const = default;
};

inline LoadedMap load_map(const std::string& path) {
    const std::string text = read_file_bytes(path);
    LoadedMap out;
    bool have_config = false;
    std::vector<std::vector<double>> rows;  // indexed later by (row, col)
    std::vector<std::pair<int, int>> cells;

    for (const std::string& line : split_lines(text)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            // The config echo is the only comment with '=' in it.
            if (line.find('=') == std::string::npos) continue;
            SomConfig cfg;
            std::size_t pos = 1;
            while (pos < line.size()) {
                while (pos < line.size() && line[pos] == ' ') ++pos;
                std::size_t end = line.find(' ', pos);
                if (end == std::string::npos) end = line.size();
                const std::string token = line.substr(pos, end - pos);
                pos = end;
                const std::size_t eq = token.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = token.substr(0, eq);
                const std::string value = token.substr(eq + 1);
                try {
                    if (key == "grid_w") cfg.grid_w = static_cast<int>(detail::to_i64(value, "som config"));
                    else if (key == "grid_h") cfg.grid_h = static_cast<int>(detail::to_i64(value, "som config"));
                    else if (key == "epochs") cfg.epochs = static_cast<int>(detail::to_i64(value, "som config"));
                    else if (key == "alpha0") cfg.alpha0 = std::stod(value);
                    else if (key == "sigma0") cfg.sigma0 = std::stod(value);
                    else if (key == "seed") cfg.seed = std::stoull(value);
                    else if (key == "init") cfg.init = detail::som_init_from(value);
                } catch (const Error&) {
                    throw;
                } catch (const std::exception&) {
                    throw IoFailure("bad som config value in " + path + ": " + token);
                }
            }
            out.config = cfg;
            have_config = true;
            continue;
        }
        const auto fields = parse_row(line);
        if (fields.size() < 3) throw IoFailure("short som map row in " + path);
        const int r = static_cast<int>(detail::to_i64(fields[0], "som map"));
        const int c = static_cast<int>(detail::to_i64(fields[1], "som map"));
        std::vector<double> w;
        w.reserve(fields.size() - 2);
        for (std::size_t i = 2; i < fields.size(); ++i) {
            try {
                std::size_t used = 0;
                w.push_back(std::stod(fields[i], &used));
                if (used != fields[i].size()) throw std::invalid_argument(fields[i]);
            } catch (const std::exception&) {
                throw IoFailure("bad som weight in " + path + ": " + fields[i]);
            }
        }
        cells.emplace_back(r, c);
        rows.push_back(std::move(w));
    }

    if (!have_config) throw IoFailure("som map file lacks a config line: " + path);
    out.map.grid_w = out.config.grid_w;
    out.map.grid_h = out.config.grid_h;
    if (cells.size() != static_cast<std::size_t>(out.map.units()))
        throw IoFailure("som map row count does not match the grid in " + path);
    out.map.weights.assign(cells.size(), {});
    const std::size_t width = rows.empty() ? 0 : rows[0].size();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto [r, c] = cells[i];
        if (r < 0 || r >= out.map.grid_h || c < 0 || c >= out.map.grid_w)
            throw IoFailure("som map cell out of range in " + path);
        if (rows[i].size() != width) throw IoFailure("ragged som map weights in " + path);
        auto& slot = out.map.weights[static_cast<std::size_t>(r * out.map.grid_w + c)];
        if (!slot.empty()) throw IoFailure("duplicate som map cell in " + path);
        slot = std::move(rows[i]);
    }
    if (width == 0) throw IoFailure("som map has no weight columns: " + path);
    return out;
}

// clusters.tsv: one row per unit with the summary fields; list-valued
// fields are ';'-joined, '-' when empty.
inline void save_clusters(const std::vector<ClusterSummary>& clusters, int grid_w,
                          const std::string& path) {
    std::string text = "# som clusters\n# unit\trow\tcol\tcount\tperiod\ttop_pairs\tsurfs\n";
    for (const ClusterSummary& s : clusters) {
        std::string pairs;
        for (const CategoryPair& p : s.top_pairs) {
            if (!pairs.empty()) pairs += ';';
            pairs += std::to_string(p.first) + "+" + std::to_string(p.second) + ":" +
                     std::to_string(p.count);
        }
        std::string reps;
        for (std::int64_t id : s.representative_surfs) {
            if (!reps.empty()) reps += ';';
            reps += std::to_string(id);
        }
        text += join_row({std::to_string(s.unit), std::to_string(s.unit / grid_w),
                          std::to_string(s.unit % grid_w), std::to_string(s.count),
                          std::string(1, period_letter(s.modal_period)),
                          pairs.empty() ? "-" : pairs, reps.empty() ? "-" : reps});
        text += '\n';
    }
    write_file_bytes(path, text);
}

inline std::vector<ClusterSummary> load_clusters(const std::string& path) {
    std::vector<ClusterSummary> out;
    for (const auto& fields : read_tsv_file(path)) {
        if (fields.size() != 7) throw IoFailure("som cluster row width in " + path);
        ClusterSummary s;
        s.unit = static_cast<int>(detail::to_i64(fields[0], "som clusters"));
        s.count = detail::to_i64(fields[3], "som clusters");
        switch (fields[4].empty() ? '?' : fields[4][0]) {
            case 'M': s.modal_period = PeriodBucket::Morning; break;
            case 'A': s.modal_period = PeriodBucket::Afternoon; break;
            case 'N': s.modal_period = PeriodBucket::Night; break;
            default: throw IoFailure("bad period letter in " + path + ": " + fields[4]);
        }
        if (fields[5] != "-") {
            for (const std::string& token : split_list(fields[5], ';')) {
                const std::size_t plus = token.find('+');
                const std::size_t colon = token.find(':', plus == std::string::npos ? 0 : plus);
                if (plus == std::string::npos || colon == std::string::npos)
                    throw IoFailure("bad category pair in " + path + ": " + token);
                CategoryPair p;
                p.first = static_cast<int>(detail::to_i64(token.substr(0, plus), "som clusters"));
                p.second = static_cast<int>(
                    detail::to_i64(token.substr(plus + 1, colon - plus - 1), "som clusters"));
                p.count = detail::to_i64(token.substr(colon + 1), "som clusters");
                s.top_pairs.push_back(p);
            }
        }
        if (fields[6] != "-")
            for (const std::string& token : split_list(fields[6], ';'))
                s.representative_surfs.push_back(detail::to_i64(token, "som clusters"));
        out.push_back(std::move(s));
    }
    return out;
}

// Human-readable cluster sheet: one cell per grid unit with its session
// count, dominant day period, and the leading first-two-page category
// sequences.
inline std::string cluster_text(const SomMap& m, const std::vector<ClusterSummary>& clusters,
                                const std::vector<Category>& categories = default_categories()) {
    auto cat_name = [&](int code) {
        const Category* c = find_category(categories, code);
        return c ? c->name : std::to_string(code);
    };
    std::string text = "SOM clusters (" + std::to_string(m.grid_w) + "x" +
                       std::to_string(m.grid_h) + ")\n";
    for (const ClusterSummary& s : clusters) {
        text += "[" + std::to_string(m.row_of(s.unit)) + "," + std::to_string(m.col_of(s.unit)) +
                "] ";
        if (s.count == 0) {
            text += "empty\n";
            continue;
        }
        text += std::to_string(s.count) + (s.count == 1 ? " session" : " sessions");
        text += " | period ";
        text += period_letter(s.modal_period);
        if (!s.top_pairs.empty()) {
            text += " | starts: ";
            for (std::size_t i = 0; i < s.top_pairs.size(); ++i) {
                if (i) text += ", ";
                const CategoryPair& p = s.top_pairs[i];
                text += cat_name(p.first) + "+" + cat_name(p.second) + " x" +
                        std::to_string(p.count);
            }
        }
        text += '\n';
    }
    return text;
}

}  // namespace surfminer
