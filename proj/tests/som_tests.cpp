#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "oracle_helpers.hpp"
#include "surfminer/rng.hpp"
#include "surfminer/som.hpp"

using namespace surfminer;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("surfminer_som_" + tag + "_" + std::to_string(::getpid()) + ".tsv");
        std::filesystem::remove(path);
    }
    ~TempFile() { std::filesystem::remove(path); }
    std::string str() const { return path.string(); }
};

std::vector<std::vector<double>> random_rows(std::uint64_t seed, std::size_t n,
                                             std::size_t width) {
    DeterministicRng rng(seed);
    std::vector<std::vector<double>> data;
    data.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(width);
        for (double& v : row) v = rng.next_double() * 10.0;
        data.push_back(std::move(row));
    }
    return data;
}

std::vector<std::vector<double>> gaussian_cloud(DeterministicRng& rng,
                                                const std::vector<double>& center,
                                                std::size_t n) {
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> p(center.size());
        for (std::size_t c = 0; c < center.size(); ++c) p[c] = rng.gaussian(center[c], 1.0);
        pts.push_back(std::move(p));
    }
    return pts;
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

SomMap two_unit_map(std::vector<double> w0, std::vector<double> w1) {
    SomMap m;
    m.grid_w = 2;
    m.grid_h = 1;
    m.weights = {std::move(w0), std::move(w1)};
    return m;
}

SessionVector meta_row(std::int64_t surf_id, PeriodBucket p, int cat1, int cat2) {
    SessionVector v;
    v.surf_id = surf_id;
    v.period = p;
    v.categories = {cat1, cat2};
    v.url_codes = {-1, -1};
    v.durations = {0, 0};
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST_CASE("som config validation") {
    CHECK_NOTHROW(validate(SomConfig{}));

    SomConfig tiny;
    tiny.grid_w = 1;
    tiny.grid_h = 1;
    CHECK_THROWS_AS(validate(tiny), ConfigError);

    SomConfig zero_epochs;
    zero_epochs.epochs = 0;
    CHECK_THROWS_AS(validate(zero_epochs), ConfigError);

    SomConfig bad_alpha;
    bad_alpha.alpha0 = 0.0;
    CHECK_THROWS_AS(validate(bad_alpha), ConfigError);
    bad_alpha.alpha0 = 1.25;
    CHECK_THROWS_AS(validate(bad_alpha), ConfigError);

    SomConfig bad_sigma;
    bad_sigma.sigma0 = -1.0;
    CHECK_THROWS_AS(validate(bad_sigma), ConfigError);
}

TEST_CASE("sigma0 defaults to half the larger grid side") {
    SomConfig c;
    CHECK(effective_sigma0(c) == 1.5);
    c.grid_w = 5;
    CHECK(effective_sigma0(c) == 2.5);
    c.sigma0 = 0.75;
    CHECK(effective_sigma0(c) == 0.75);
}

// ---------------------------------------------------------------------------
// Initialization

TEST_CASE("sample-draw init with exactly as many rows as units is a permutation") {
    auto data = random_rows(5, 9, 4);
    SomConfig cfg;
    cfg.seed = 17;
    auto m = init_map(cfg, data);
    REQUIRE(m.weights.size() == 9);

    auto sorted_weights = m.weights;
    auto sorted_data = data;
    std::sort(sorted_weights.begin(), sorted_weights.end());
    std::sort(sorted_data.begin(), sorted_data.end());
    CHECK(sorted_weights == sorted_data);
}

TEST_CASE("sample-draw init with fewer rows than units reuses rows") {
    auto data = random_rows(6, 4, 3);
    SomConfig cfg;
    cfg.seed = 1;
    auto m = init_map(cfg, data);
    REQUIRE(m.weights.size() == 9);
    for (const auto& w : m.weights)
        CHECK(std::find(data.begin(), data.end(), w) != data.end());
}

TEST_CASE("uniform-range init stays within per-column bounds") {
    std::vector<std::vector<double>> data = {{0.0, 5.0, 7.5}, {10.0, 5.0, -2.5}, {4.0, 5.0, 0.0}};
    SomConfig cfg;
    cfg.init = SomInit::UniformRange;
    cfg.seed = 23;
    auto m = init_map(cfg, data);
    for (const auto& w : m.weights) {
        CHECK(w[0] >= 0.0);
        CHECK(w[0] <= 10.0);
        CHECK(w[1] == 5.0);  // constant column collapses to the constant
        CHECK(w[2] >= -2.5);
        CHECK(w[2] <= 7.5);
    }
}

TEST_CASE("init is deterministic for a fixed seed") {
    auto data = random_rows(8, 30, 5);
    for (SomInit init : {SomInit::SampleDraw, SomInit::UniformRange}) {
        SomConfig cfg;
        cfg.init = init;
        cfg.seed = 99;
        CHECK(init_map(cfg, data) == init_map(cfg, data));
    }
}

TEST_CASE("init rejects bad data") {
    SomConfig cfg;
    CHECK_THROWS_AS(init_map(cfg, {}), EmptyData);
    CHECK_THROWS_AS(init_map(cfg, {{}, {}}), EmptyData);
    CHECK_THROWS_AS(init_map(cfg, {{1.0, 2.0}, {1.0}}), WidthMismatch);
}

// ---------------------------------------------------------------------------
// BMU search

TEST_CASE("bmu picks the nearest unit") {
    auto m = two_unit_map({0.0, 0.0}, {1.0, 1.0});
    CHECK(bmu(m, {0.1, 0.0}) == 0);
    CHECK(bmu(m, {0.9, 1.0}) == 1);
    CHECK(bmu(m, {0.0, 0.0}) == 0);  // exact hit
    CHECK(bmu(m, {1.0, 1.0}) == 1);
    CHECK(bmu(m, {0.5, 0.5}) == 0);  // equidistant: smallest index wins
}

TEST_CASE("bmu rejects a query of the wrong width") {
    auto m = two_unit_map({0.0, 0.0}, {1.0, 1.0});
    CHECK_THROWS_AS(bmu(m, {1.0}), WidthMismatch);
}

TEST_CASE("bmu agrees with a linear-scan oracle") {
    DeterministicRng rng(31);
    for (int round = 0; round < 10; ++round) {
        SomMap m;
        m.grid_w = 4;
        m.grid_h = 3;
        for (int u = 0; u < 12; ++u) {
            std::vector<double> w(3);
            for (double& v : w) v = rng.next_double();
            m.weights.push_back(std::move(w));
        }
        for (int q = 0; q < 50; ++q) {
            std::vector<double> x(3);
            for (double& v : x) v = rng.next_double();
            int best = 0;
            double best_d = euclid(m.weights[0], x);
            for (int u = 1; u < 12; ++u) {
                double d = euclid(m.weights[static_cast<std::size_t>(u)], x);
                if (d < best_d) {
                    best_d = d;
                    best = u;
                }
            }
            REQUIRE(bmu(m, x) == best);
        }
    }
}

// ---------------------------------------------------------------------------
// Update step

TEST_CASE("a full-rate step lands the single unit exactly on the sample") {
    SomMap m;
    m.grid_w = 1;
    m.grid_h = 1;
    m.weights = {{0.1, 0.7, -3.0}};
    std::vector<double> x = {0.3, 0.3, 12.5};
    train_step(m, x, 1.0, 0.0);
    CHECK(m.weights[0] == x);  // exact, no rounding residue
}

TEST_CASE("an update step contracts the distance to the sample") {
    DeterministicRng rng(13);
    for (int i = 0; i < 200; ++i) {
        SomMap m;
        m.grid_w = 1;
        m.grid_h = 1;
        std::vector<double> w(3), x(3);
        for (double& v : w) v = rng.next_double() * 20 - 10;
        for (double& v : x) v = rng.next_double() * 20 - 10;
        if (w == x) continue;
        m.weights = {w};
        double before = euclid(w, x);
        double alpha = 0.1 + 0.8 * rng.next_double();
        train_step(m, x, alpha, 0.5);
        CHECK(euclid(m.weights[0], x) < before);
    }
}

TEST_CASE("units beyond the neighborhood radius do not move") {
    auto m = two_unit_map({0.0, 0.0}, {10.0, 10.0});
    train_step(m, {0.0, 0.0}, 0.5, 0.5);  // radius 0.5 covers only the BMU
    CHECK(m.weights[1] == std::vector<double>{10.0, 10.0});

    train_step(m, {0.0, 0.0}, 0.5, 1.0);  // radius 1 reaches the neighbor
    CHECK(m.weights[1][0] < 10.0);
}

// ---------------------------------------------------------------------------
// Training

TEST_CASE("training a codebook that already equals the data is a no-op") {
    // Constant data: uniform-range init collapses every unit onto the one
    // point, so all distances and all updates are zero.
    std::vector<std::vector<double>> data(12, std::vector<double>{4.0, -1.0, 0.5});
    SomConfig cfg;
    cfg.init = SomInit::UniformRange;
    cfg.epochs = 10;
    auto m = init_map(cfg, data);
    auto result = train(m, data, cfg);
    CHECK(result.map == m);
    CHECK(result.trace.initial_qe == 0.0);
    REQUIRE(result.trace.epoch_qe.size() == 10);
    for (double qe : result.trace.epoch_qe) CHECK(qe == 0.0);
}

TEST_CASE("a 2x1 map splits two separated clouds onto its units") {
    DeterministicRng rng(2718);
    auto cloud_a = gaussian_cloud(rng, {0.0, 0.0}, 100);
    auto cloud_b = gaussian_cloud(rng, {20.0, 20.0}, 100);
    auto mean_a = oracle::cloud_mean(cloud_a);
    auto mean_b = oracle::cloud_mean(cloud_b);

    std::vector<std::vector<double>> data = cloud_a;
    data.insert(data.end(), cloud_b.begin(), cloud_b.end());

    for (std::uint64_t seed : {1ull, 11ull, 42ull}) {
        SomConfig cfg;
        cfg.grid_w = 2;
        cfg.grid_h = 1;
        cfg.seed = seed;
        auto result = train(init_map(cfg, data), data, cfg);

        double to_a = std::min(euclid(result.map.weights[0], mean_a),
                               euclid(result.map.weights[1], mean_a));
        double to_b = std::min(euclid(result.map.weights[0], mean_b),
                               euclid(result.map.weights[1], mean_b));
        INFO("seed " << seed);
        CHECK(to_a < 0.1);
        CHECK(to_b < 0.1);
        // ... and it is one unit per cloud, not one unit near both.
        CHECK(euclid(result.map.weights[0], result.map.weights[1]) > 10.0);
    }
}

TEST_CASE("training is deterministic in the seed") {
    auto data = random_rows(55, 60, 4);
    SomConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 7;
    auto a = train(init_map(cfg, data), data, cfg);
    auto b = train(init_map(cfg, data), data, cfg);
    CHECK(a == b);

    SomConfig other = cfg;
    other.seed = 8;
    auto c = train(init_map(other, data), data, other);
    CHECK(a.map.weights != c.map.weights);
}

TEST_CASE("quantization error does not end above its start") {
    for (std::uint64_t seed : {3ull, 14ull, 159ull}) {
        DeterministicRng rng(seed);
        auto data = gaussian_cloud(rng, {0.0, 0.0, 0.0}, 50);
        auto more = gaussian_cloud(rng, {8.0, 0.0, 4.0}, 50);
        data.insert(data.end(), more.begin(), more.end());

        SomConfig cfg;
        cfg.seed = seed;
        cfg.epochs = 30;
        auto result = train(init_map(cfg, data), data, cfg);
        REQUIRE(result.trace.epoch_qe.size() == 30);
        CHECK(result.trace.epoch_qe.back() <= result.trace.initial_qe);
        for (double qe : result.trace.epoch_qe) CHECK(std::isfinite(qe));
    }
}

TEST_CASE("train validates its inputs") {
    auto data = random_rows(1, 20, 3);
    SomConfig cfg;
    cfg.epochs = 2;
    auto m = init_map(cfg, data);

    CHECK_THROWS_AS(train(m, {}, cfg), EmptyData);
    CHECK_THROWS_AS(train(m, random_rows(2, 5, 4), cfg), WidthMismatch);

    SomConfig other = cfg;
    other.grid_w = 4;
    CHECK_THROWS_AS(train(m, data, other), ConfigError);
}

TEST_CASE("nine separated archetype clouds occupy at least eight units") {
    // Archetype centers shaped like scaled one-hot feature vectors: a period
    // block of 3 and two category blocks of 9.
    std::vector<std::vector<double>> centers;
    const std::vector<std::pair<int, int>> profiles = {{1, 1}, {2, 4}, {3, 3}};
    for (int p = 0; p < 3; ++p)
        for (auto [c1, c2] : profiles) {
            std::vector<double> v(21, 0.0);
            v[static_cast<std::size_t>(p)] = 10.0;
            v[static_cast<std::size_t>(3 + c1)] = 10.0;
            v[static_cast<std::size_t>(12 + c2)] = 10.0;
            centers.push_back(std::move(v));
        }

    DeterministicRng rng(808);
    std::vector<std::vector<double>> data;
    for (const auto& c : centers) {
        auto cloud = gaussian_cloud(rng, c, 40);
        data.insert(data.end(), cloud.begin(), cloud.end());
    }

    SomConfig cfg;
    cfg.seed = 4;
    auto result = train(init_map(cfg, data), data, cfg);
    std::set<int> units;
    for (const auto& c : centers) units.insert(bmu(result.map, c));
    CHECK(units.size() >= 8);
}

// ---------------------------------------------------------------------------
// Assignment and summaries

TEST_CASE("identical vectors all land on one unit") {
    std::vector<std::vector<double>> data(7, std::vector<double>{1.0, 2.0});
    std::vector<SessionVector> meta;
    for (int i = 0; i < 7; ++i)
        meta.push_back(meta_row(i, PeriodBucket::Morning, 1, 1));

    auto m = two_unit_map({1.0, 2.0}, {5.0, 5.0});
    auto a = assign(m, data, meta);
    REQUIRE(a.clusters.size() == 2);
    CHECK(a.clusters[0].count == 7);
    CHECK(a.clusters[1].count == 0);
    CHECK(a.clusters[1].top_pairs.empty());
    CHECK(a.unit_of == std::vector<int>(7, 0));
}

TEST_CASE("cluster member counts sum to the input size") {
    auto data = random_rows(77, 120, 3);
    std::vector<SessionVector> meta;
    for (int i = 0; i < 120; ++i)
        meta.push_back(meta_row(i, static_cast<PeriodBucket>(i % 3), i % 9, (i + 1) % 9));

    SomConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 20;
    auto result = train(init_map(cfg, data), data, cfg);
    auto a = assign(result.map, data, meta);
    std::int64_t total = 0;
    for (const auto& c : a.clusters) total += c.count;
    CHECK(total == 120);
    CHECK(a.unit_of.size() == 120);
}

TEST_CASE("summaries report modal period and leading category pairs") {
    // Single relevant unit; craft the mix by hand.
    std::vector<std::vector<double>> data(10, std::vector<double>{0.0});
    std::vector<SessionVector> meta = {
        meta_row(0, PeriodBucket::Night, 1, 2),  meta_row(1, PeriodBucket::Night, 1, 2),
        meta_row(2, PeriodBucket::Night, 1, 2),  meta_row(3, PeriodBucket::Morning, 3, 3),
        meta_row(4, PeriodBucket::Morning, 3, 3), meta_row(5, PeriodBucket::Night, 7, 7),
        meta_row(6, PeriodBucket::Afternoon, 2, 2), meta_row(7, PeriodBucket::Night, 8, 0),
        meta_row(8, PeriodBucket::Night, 1, 2),  meta_row(9, PeriodBucket::Night, 3, 3),
    };

    auto m = two_unit_map({0.0}, {100.0});
    auto a = assign(m, data, meta);
    const ClusterSummary& s = a.clusters[0];
    CHECK(s.count == 10);
    CHECK(s.modal_period == PeriodBucket::Night);
    REQUIRE(s.top_pairs.size() == 3);
    CHECK(s.top_pairs[0] == CategoryPair{1, 2, 4});
    CHECK(s.top_pairs[1] == CategoryPair{3, 3, 3});
    // The three singleton pairs tie; the smallest category codes win.
    CHECK(s.top_pairs[2] == CategoryPair{2, 2, 1});
    CHECK(s.representative_surfs == std::vector<std::int64_t>{0, 1, 2, 3, 4});
}

TEST_CASE("period ties resolve toward the earlier bucket") {
    std::vector<std::vector<double>> data(4, std::vector<double>{0.0});
    std::vector<SessionVector> meta = {
        meta_row(0, PeriodBucket::Night, 1, 1), meta_row(1, PeriodBucket::Night, 1, 1),
        meta_row(2, PeriodBucket::Morning, 1, 1), meta_row(3, PeriodBucket::Morning, 1, 1)};
    auto m = two_unit_map({0.0}, {9.0});
    CHECK(assign(m, data, meta).clusters[0].modal_period == PeriodBucket::Morning);
}

TEST_CASE("assign validates inputs") {
    auto m = two_unit_map({0.0}, {1.0});
    CHECK_THROWS_AS(assign(m, {}, {}), EmptyData);
    CHECK_THROWS_AS(assign(m, {{0.0}}, {}), WidthMismatch);
}

// ---------------------------------------------------------------------------
// Persistence

TEST_CASE("map round-trips through its tsv form") {
    auto data = random_rows(3, 20, 4);
    SomConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 77;
    cfg.sigma0 = 1.25;
    cfg.init = SomInit::UniformRange;
    auto result = train(init_map(cfg, data), data, cfg);

    TempFile file("map");
    save_map(result.map, cfg, file.str());
    auto loaded = load_map(file.str());
    CHECK(loaded.map == result.map);
    CHECK(loaded.config == cfg);
}

TEST_CASE("map loading rejects broken files") {
    TempFile file("badmap");

    write_file_bytes(file.str(), "0\t0\t1.5\n");  // no config echo
    CHECK_THROWS_AS(load_map(file.str()), IoFailure);

    write_file_bytes(file.str(),
                     "# grid_w=2 grid_h=1 epochs=5 alpha0=0.5 sigma0=1 seed=0 init=sample\n"
                     "0\t0\t1.5\n");  // one unit missing
    CHECK_THROWS_AS(load_map(file.str()), IoFailure);

    write_file_bytes(file.str(),
                     "# grid_w=2 grid_h=1 epochs=5 alpha0=0.5 sigma0=1 seed=0 init=sample\n"
                     "0\t0\t1.5\n0\t0\t2.5\n");  // duplicate cell
    CHECK_THROWS_AS(load_map(file.str()), IoFailure);

    write_file_bytes(file.str(),
                     "# grid_w=2 grid_h=1 epochs=5 alpha0=0.5 sigma0=1 seed=0 init=sample\n"
                     "0\t0\t1.5\n0\t1\tx\n");  // bad weight
    CHECK_THROWS_AS(load_map(file.str()), IoFailure);
}

TEST_CASE("cluster summaries round-trip and render") {
    std::vector<std::vector<double>> data(5, std::vector<double>{0.0});
    data.push_back({100.0});
    std::vector<SessionVector> meta;
    for (int i = 0; i < 5; ++i) meta.push_back(meta_row(i, PeriodBucket::Night, 1, 2));
    meta.push_back(meta_row(5, PeriodBucket::Afternoon, 3, 3));

    auto m = two_unit_map({0.0}, {100.0});
    auto a = assign(m, data, meta);

    TempFile file("clusters");
    save_clusters(a.clusters, m.grid_w, file.str());
    CHECK(load_clusters(file.str()) == a.clusters);

    auto text = cluster_text(m, a.clusters);
    CHECK(text.find("SOM clusters (2x1)") != std::string::npos);
    CHECK(text.find("[0,0] 5 sessions | period N | starts: Search/IR+Mail x5") !=
          std::string::npos);
    CHECK(text.find("[0,1] 1 session | period A | starts: Games+Games x1") != std::string::npos);
}

TEST_CASE("empty clusters render as empty cells") {
    SomMap m;
    m.grid_w = 2;
    m.grid_h = 1;
    m.weights = {{0.0}, {1.0}};
    std::vector<ClusterSummary> clusters(2);
    clusters[0].unit = 0;
    clusters[1].unit = 1;
    clusters[0].count = 0;
    clusters[1].count = 0;
    auto text = cluster_text(m, clusters);
    CHECK(text.find("[0,0] empty") != std::string::npos);
    CHECK(text.find("[0,1] empty") != std::string::npos);

    TempFile file("emptyclusters");
    save_clusters(clusters, m.grid_w, file.str());
    CHECK(load_clusters(file.str()) == clusters);
}
