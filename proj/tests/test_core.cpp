#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mespp/belief.hpp"
#include "mespp/danger.hpp"
#include "mespp/env_graph.hpp"
#include "mespp/io.hpp"
#include "mespp/similarity.hpp"

#include "oracles.hpp"
#include "testutil.hpp"

using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

mespp::DescriptorCorpus fire_collapse_corpus() {
    mespp::DescriptorCorpus corpus;
    mespp::DescriptorSet fire{"fire", {"fire_l1", "fire_l2", "fire_l3", "fire_l4", "fire_l5"}};
    mespp::DescriptorSet collapse{
        "collapse", {"collapse_l1", "collapse_l2", "collapse_l3", "collapse_l4", "collapse_l5"}};
    corpus.sets = {fire, collapse};
    return corpus;
}

// Two-vertex environment: v1 hazard-free level 1, v2 fire level 3.
mespp::EnvironmentGraph tiny_env() {
    mespp::EnvironmentGraph g;
    g.n = 2;
    g.neighbors = {{}, {2}, {1}};
    g.neighborhood_name = {"", "left", "right"};
    g.truth_level = {0, 1, 3};
    g.hazard_type = {mespp::HazardType::None, mespp::HazardType::None, mespp::HazardType::Fire};
    g.scenes = {{}, {"v1_a", "v1_b"}, {"v2_a", "v2_b"}};
    mespp::validate_environment(g);
    return g;
}

}  // namespace

TEST_CASE("school environment loads and validates", "[env]") {
    const auto g = mespp::load_environment(testutil::school_path());
    REQUIRE(g.n == 46);

    const auto gym = mespp::neighborhood_of(g, 3);
    REQUIRE(gym == std::vector<int>{1, 2, 3, 4, 5, 6});

    // Neighborhood groups partition the vertex set.
    std::set<int> covered;
    for (int v = 1; v <= g.n; ++v) {
        const auto group = mespp::neighborhood_of(g, v);
        REQUIRE(std::find(group.begin(), group.end(), v) != group.end());
        covered.insert(group.begin(), group.end());
    }
    REQUIRE(covered.size() == static_cast<std::size_t>(g.n));

    REQUIRE_THROWS_AS(mespp::neighborhood_of(g, 0), mespp::ValidationError);
    REQUIRE_THROWS_AS(mespp::neighborhood_of(g, 47), mespp::ValidationError);
}

TEST_CASE("minimal two-vertex environment is accepted", "[env]") {
    testutil::TempDir tmp;
    const std::string file = tmp.file("mini.json");
    mespp::detail::write_file(file, R"({
      "vertices": [
        {"id": 1, "neighborhood": "a", "truth_level": 1, "scene_images": ["x1"]},
        {"id": 2, "neighborhood": "a", "truth_level": 1, "scene_images": ["x2"]}
      ],
      "edges": [[1, 2]]
    })");
    const auto g = mespp::load_environment(file);
    REQUIRE(g.n == 2);
    REQUIRE(g.has_edge(1, 2));
    REQUIRE(g.has_edge(2, 1));
}

TEST_CASE("structural violations are reported with the offending element", "[env]") {
    testutil::TempDir tmp;

    const std::string self_loop = tmp.file("loop.json");
    mespp::detail::write_file(self_loop, R"({
      "vertices": [
        {"id": 1, "neighborhood": "a", "truth_level": 1, "scene_images": ["x1"]},
        {"id": 2, "neighborhood": "a", "truth_level": 1, "scene_images": ["x2"]}
      ],
      "edges": [[1, 2], [1, 1]]
    })");
    REQUIRE_THROWS_WITH(mespp::load_environment(self_loop), ContainsSubstring("self-loop"));

    const std::string disconnected = tmp.file("disc.json");
    mespp::detail::write_file(disconnected, R"({
      "vertices": [
        {"id": 1, "neighborhood": "a", "truth_level": 1, "scene_images": ["x1"]},
        {"id": 2, "neighborhood": "a", "truth_level": 1, "scene_images": ["x2"]},
        {"id": 3, "neighborhood": "a", "truth_level": 1, "scene_images": ["x3"]}
      ],
      "edges": [[1, 2]]
    })");
    REQUIRE_THROWS_WITH(mespp::load_environment(disconnected),
                        ContainsSubstring("disconnected") && ContainsSubstring("3"));

    const std::string bad_level = tmp.file("level.json");
    mespp::detail::write_file(bad_level, R"({
      "vertices": [
        {"id": 1, "neighborhood": "a", "truth_level": 6, "scene_images": ["x1"]},
        {"id": 2, "neighborhood": "a", "truth_level": 1, "scene_images": ["x2"]}
      ],
      "edges": [[1, 2]]
    })");
    REQUIRE_THROWS_WITH(mespp::load_environment(bad_level), ContainsSubstring("truth_level"));

    const std::string bad_json = tmp.file("bad.json");
    mespp::detail::write_file(bad_json, "{not json");
    REQUIRE_THROWS_AS(mespp::load_environment(bad_json), mespp::ValidationError);
    REQUIRE_THROWS_AS(mespp::load_environment(tmp.file("missing.json")), mespp::IoError);
}

TEST_CASE("candidate moves include staying put, ascending", "[env]") {
    const auto g = tiny_env();
    REQUIRE(g.moves_from(1) == std::vector<int>{1, 2});
    REQUIRE(g.moves_from(2) == std::vector<int>{1, 2});

    mespp::Rng rng(4);
    const auto rg = oracle::random_graph(rng, 7);
    for (int v = 1; v <= rg.n; ++v) {
        const auto moves = rg.moves_from(v);
        REQUIRE(std::is_sorted(moves.begin(), moves.end()));
        REQUIRE(std::find(moves.begin(), moves.end(), v) != moves.end());
        REQUIRE(moves.size() == rg.adjacent(v).size() + 1);
    }
}

TEST_CASE("scenario generation respects requested proportions", "[env]") {
    const auto g = mespp::load_environment(testutil::school_path());

    const auto nff = mespp::generate_scenario(g, mespp::HazardScenarioSpec::preset("NFF", 11));
    int none = 0, collapse = 0, fire = 0;
    for (int v = 1; v <= nff.n; ++v) {
        switch (nff.hazard_type[static_cast<std::size_t>(v)]) {
            case mespp::HazardType::None:
                ++none;
                REQUIRE(nff.truth_level[static_cast<std::size_t>(v)] == 1);
                break;
            case mespp::HazardType::Collapse: ++collapse; break;
            case mespp::HazardType::Fire:
                ++fire;
                REQUIRE(nff.truth_level[static_cast<std::size_t>(v)] >= 2);
                break;
        }
    }
    REQUIRE((none == 15 || none == 16));
    REQUIRE(collapse == 0);
    REQUIRE(none + fire == 46);

    // Counts stay within 1 of the ideal for every preset and seed.
    for (const std::string code : {"NFF", "NCC", "NCF"}) {
        for (std::uint64_t seed : {0ULL, 7ULL, 999ULL}) {
            const auto spec = mespp::HazardScenarioSpec::preset(code, seed);
            const auto out = mespp::generate_scenario(g, spec);
            std::array<int, 3> counts{};
            for (int v = 1; v <= out.n; ++v)
                counts[static_cast<std::size_t>(out.hazard_type[static_cast<std::size_t>(v)])] += 1;
            for (std::size_t i = 0; i < 3; ++i)
                REQUIRE(std::abs(counts[i] - spec.proportions[i] * out.n) < 1.0);
        }
    }
}

TEST_CASE("scenario generation degenerate and deterministic cases", "[env]") {
    const auto g = mespp::load_environment(testutil::school_path());

    mespp::HazardScenarioSpec all_none;
    all_none.proportions = {1.0, 0.0, 0.0};
    const auto cleared = mespp::generate_scenario(g, all_none);
    for (int v = 1; v <= cleared.n; ++v) {
        REQUIRE(cleared.hazard_type[static_cast<std::size_t>(v)] == mespp::HazardType::None);
        REQUIRE(cleared.truth_level[static_cast<std::size_t>(v)] == 1);
    }

    const auto spec = mespp::HazardScenarioSpec::preset("NCF", 42);
    const auto a = mespp::generate_scenario(g, spec);
    const auto b = mespp::generate_scenario(g, spec);
    REQUIRE(a.hazard_type == b.hazard_type);
    REQUIRE(a.truth_level == b.truth_level);

    mespp::HazardScenarioSpec bad;
    bad.proportions = {0.5, 0.2, 0.2};
    REQUIRE_THROWS_WITH(mespp::generate_scenario(g, bad), ContainsSubstring("sum to 1"));
    REQUIRE_THROWS_AS(mespp::HazardScenarioSpec::preset("XYZ", 0), mespp::ValidationError);
}

TEST_CASE("environment save and load round-trip", "[env][io]") {
    testutil::TempDir tmp;
    const auto g = mespp::load_environment(testutil::school_path());

    const std::string first = tmp.file("env1.json");
    mespp::save_environment(g, first);
    const auto g2 = mespp::load_environment(first);
    REQUIRE(g2.n == g.n);
    REQUIRE(g2.neighbors == g.neighbors);
    REQUIRE(g2.neighborhood_name == g.neighborhood_name);
    REQUIRE(g2.truth_level == g.truth_level);
    REQUIRE(g2.hazard_type == g.hazard_type);
    REQUIRE(g2.scenes == g.scenes);

    // Canonical form is a fixed point: saving the reloaded graph reproduces
    // the same bytes.
    const std::string second = tmp.file("env2.json");
    mespp::save_environment(g2, second);
    REQUIRE(mespp::detail::read_file(first) == mespp::detail::read_file(second));
}

TEST_CASE("descriptor corpus validation", "[similarity]") {
    auto corpus = fire_collapse_corpus();
    REQUIRE_NOTHROW(corpus.validate());

    auto dup = corpus;
    dup.sets[1].descriptor_ids[2] = "fire_l3";
    REQUIRE_THROWS_WITH(dup.validate(), ContainsSubstring("duplicate"));

    auto gap = corpus;
    gap.sets[0].descriptor_ids[4] = "";
    REQUIRE_THROWS_WITH(gap.validate(), ContainsSubstring("missing"));

    mespp::DescriptorCorpus empty;
    REQUIRE_THROWS_AS(empty.validate(), mespp::ValidationError);
}

TEST_CASE("score matrix rejects duplicates and bad lookups", "[similarity]") {
    mespp::ScoreMatrix m;
    m.insert("img1", "fire_l5", 0.91);
    REQUIRE(m.score("img1", "fire_l5") == Approx(0.91));
    REQUIRE(m.contains("img1", "fire_l5"));
    REQUIRE_FALSE(m.contains("img1", "fire_l4"));
    REQUIRE_THROWS_WITH(m.insert("img1", "fire_l5", 0.2), ContainsSubstring("duplicate"));
    REQUIRE_THROWS_WITH(m.score("img2", "fire_l5"), ContainsSubstring("missing"));
    REQUIRE_THROWS_AS(m.insert("img3", "fire_l1", std::nan("")), mespp::ValidationError);
    REQUIRE(m.size() == 1);
}

TEST_CASE("noise-free synthesis hits the configured means", "[similarity]") {
    const auto g = tiny_env();
    const auto corpus = fire_collapse_corpus();
    mespp::SynthesisParams params;  // sigma 0

    const auto scores = mespp::synthesize_scores(g, corpus, params, 1);
    REQUIRE(scores.size() == 2 * 2 * 2 * 5);

    // v2 is fire level 3: only fire_l3 scores high.
    REQUIRE(scores.score("v2_a", "fire_l3") == Approx(0.8));
    REQUIRE(scores.score("v2_a", "fire_l2") == Approx(0.3));
    REQUIRE(scores.score("v2_a", "fire_l4") == Approx(0.3));
    REQUIRE(scores.score("v2_a", "collapse_l3") == Approx(0.3));

    // v1 is hazard-free: level-1 descriptors of every set match the scene.
    REQUIRE(scores.score("v1_a", "fire_l1") == Approx(0.8));
    REQUIRE(scores.score("v1_a", "collapse_l1") == Approx(0.8));
    REQUIRE(scores.score("v1_a", "fire_l2") == Approx(0.3));

    mespp::SynthesisParams leaky = params;
    leaky.adjacent_leak = true;
    const auto leak_scores = mespp::synthesize_scores(g, corpus, leaky, 1);
    REQUIRE(leak_scores.score("v2_a", "fire_l2") == Approx(0.55));
    REQUIRE(leak_scores.score("v2_a", "fire_l4") == Approx(0.55));
    REQUIRE(leak_scores.score("v2_a", "fire_l3") == Approx(0.8));
    REQUIRE(leak_scores.score("v2_a", "fire_l5") == Approx(0.3));

    // Severity-skewed confusion: only the level above leaks.
    mespp::SynthesisParams upward = leaky;
    upward.leak_up_only = true;
    const auto up_scores = mespp::synthesize_scores(g, corpus, upward, 1);
    REQUIRE(up_scores.score("v2_a", "fire_l2") == Approx(0.3));
    REQUIRE(up_scores.score("v2_a", "fire_l4") == Approx(0.55));
    REQUIRE(up_scores.score("v2_a", "fire_l3") == Approx(0.8));
    REQUIRE(up_scores.score("v2_a", "fire_l5") == Approx(0.3));

    mespp::SynthesisParams strict = params;
    strict.safe_match = false;
    const auto strict_scores = mespp::synthesize_scores(g, corpus, strict, 1);
    REQUIRE(strict_scores.score("v1_a", "fire_l1") == Approx(0.3));
    REQUIRE(strict_scores.score("v1_a", "collapse_l1") == Approx(0.3));
}

TEST_CASE("synthesis is deterministic in the seed and bounded", "[similarity]") {
    const auto g = tiny_env();
    const auto corpus = fire_collapse_corpus();
    mespp::SynthesisParams params;
    params.sigma = 0.25;

    const auto a = mespp::synthesize_scores(g, corpus, params, 99);
    const auto b = mespp::synthesize_scores(g, corpus, params, 99);
    REQUIRE(a.sorted_entries() == b.sorted_entries());

    const auto c = mespp::synthesize_scores(g, corpus, params, 100);
    REQUIRE(a.sorted_entries() != c.sorted_entries());

    for (const auto& [key, value] : a.sorted_entries()) {
        REQUIRE(value >= 0.0);
        REQUIRE(value <= 1.0);
    }

    auto empty_scene = g;
    empty_scene.scenes[1].clear();
    REQUIRE_THROWS_WITH(mespp::synthesize_scores(empty_scene, corpus, params, 1),
                        ContainsSubstring("empty scene"));
}

TEST_CASE("recall ranks true images", "[similarity]") {
    // Three captions, each scoring its own image strictly highest.
    mespp::ScoreMatrix sharp;
    const std::vector<std::string> images = {"imgA", "imgB", "imgC"};
    for (const auto& img : images)
        for (const auto& cap : {"capA", "capB", "capC"})
            sharp.insert(img, cap, img.back() == cap[3] ? 0.9 : 0.1);
    const std::vector<std::pair<std::string, std::string>> truth = {
        {"capA", "imgA"}, {"capB", "imgB"}, {"capC", "imgC"}};
    REQUIRE(mespp::recall_at_k(sharp, truth, 1) == Approx(100.0));

    // True image pinned to rank 2 of 10 candidates.
    mespp::ScoreMatrix offset;
    std::vector<std::pair<std::string, std::string>> truth10;
    for (int i = 0; i < 10; ++i) {
        const std::string img = "img" + std::to_string(i);
        const std::string cap = "cap" + std::to_string(i);
        truth10.push_back({cap, img});
    }
    for (int i = 0; i < 10; ++i) {
        const std::string cap = "cap" + std::to_string(i);
        for (int j = 0; j < 10; ++j) {
            const std::string img = "img" + std::to_string(j);
            double score = 0.1;
            if (j == i) score = 0.8;                 // true image
            if (j == (i + 1) % 10) score = 0.9;      // decoy wins rank 1
            offset.insert(img, cap, score);
        }
    }
    REQUIRE(mespp::recall_at_k(offset, truth10, 1) == Approx(0.0));
    REQUIRE(mespp::recall_at_k(offset, truth10, 5) == Approx(100.0));

    // Monotone in k, exact at the pool size.
    double prev = 0.0;
    for (int k = 1; k <= 10; ++k) {
        const double r = mespp::recall_at_k(offset, truth10, k);
        REQUIRE(r >= prev);
        prev = r;
    }
    REQUIRE(mespp::recall_at_k(offset, truth10, 10) == Approx(100.0));
    REQUIRE(mespp::recall_at_k(offset, truth10, 99) == Approx(100.0));

    REQUIRE_THROWS_AS(mespp::recall_at_k(offset, truth10, 0), mespp::ValidationError);
    REQUIRE_THROWS_AS(mespp::recall_at_k(offset, {}, 1), mespp::ValidationError);
    truth10.push_back({"cap_unscored", "img0"});
    REQUIRE_THROWS_WITH(mespp::recall_at_k(offset, truth10, 1), ContainsSubstring("no score"));
}

TEST_CASE("recall at ten under random scores matches the analytic rate", "[similarity][slow]") {
    // With 97 candidates and rank-independent scores, the true image lands in
    // the top 10 with probability 10/97.
    const int n_images = 97;
    mespp::Rng rng(12345);
    double total = 0.0;
    const int rounds = 40;
    for (int round = 0; round < rounds; ++round) {
        mespp::ScoreMatrix scores;
        std::vector<std::pair<std::string, std::string>> truth;
        for (int i = 0; i < n_images; ++i)
            truth.push_back({"cap" + std::to_string(i), "img" + std::to_string(i)});
        for (int i = 0; i < n_images; ++i)
            for (int j = 0; j < n_images; ++j)
                scores.insert("img" + std::to_string(j), "cap" + std::to_string(i),
                              rng.next_double());
        total += mespp::recall_at_k(scores, truth, 10);
    }
    const double mean = total / rounds;
    REQUIRE(mean == Approx(100.0 * 10.0 / 97.0).margin(2.0));
}

TEST_CASE("heavy noise drives point estimates toward chance", "[similarity][danger][slow]") {
    // 1000 vertices in a path, truth levels cycling 1..5; sigma large enough
    // to swamp the signal leaves ~20% point-estimate accuracy.
    mespp::EnvironmentGraph g;
    g.n = 1000;
    const auto sz = static_cast<std::size_t>(g.n) + 1;
    g.neighbors.assign(sz, {});
    g.neighborhood_name.assign(sz, "zone");
    g.truth_level.assign(sz, 1);
    g.hazard_type.assign(sz, mespp::HazardType::Fire);
    g.scenes.assign(sz, {});
    for (int v = 1; v <= g.n; ++v) {
        if (v > 1) g.neighbors[static_cast<std::size_t>(v)].push_back(v - 1);
        if (v < g.n) g.neighbors[static_cast<std::size_t>(v)].push_back(v + 1);
        g.truth_level[static_cast<std::size_t>(v)] = 1 + (v - 1) % 5;
        g.scenes[static_cast<std::size_t>(v)] = {"n" + std::to_string(v)};
    }
    mespp::validate_environment(g);

    mespp::DescriptorCorpus corpus;
    corpus.sets = {{"fire", {"fire_l1", "fire_l2", "fire_l3", "fire_l4", "fire_l5"}}};

    mespp::SynthesisParams params;
    params.sigma = 5.0;
    const auto scores = mespp::synthesize_scores(g, corpus, params, 2024);

    mespp::EstimationParams est;
    int correct = 0;
    for (int v = 1; v <= g.n; ++v) {
        const auto eta = mespp::estimate_vertex(g, v, scores, corpus, est);
        if (mespp::point_estimate(eta) == g.truth_level[static_cast<std::size_t>(v)]) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / g.n;
    REQUIRE(accuracy == Approx(0.2).margin(0.05));

    // Sanity: the noise-free provider stays near-perfect on the same setup.
    mespp::SynthesisParams clean;
    const auto clean_scores = mespp::synthesize_scores(g, corpus, clean, 2024);
    int clean_correct = 0;
    for (int v = 1; v <= g.n; ++v) {
        const auto eta = mespp::estimate_vertex(g, v, clean_scores, corpus, est);
        if (mespp::point_estimate(eta) == g.truth_level[static_cast<std::size_t>(v)]) ++clean_correct;
    }
    REQUIRE(clean_correct == g.n);
}

TEST_CASE("binarize thresholds per level", "[danger]") {
    REQUIRE(mespp::binarize({0.2, 0.4, 0.6, 0.8, 0.1}, 0.5) == std::array<int, 5>{0, 0, 1, 1, 0});
    REQUIRE(mespp::binarize({0.1, 0.2, 0.3, 0.4, 0.45}, 0.5) == std::array<int, 5>{0, 0, 0, 0, 0});
    REQUIRE(mespp::binarize({0.1, 0.2, 0.3, 0.4, 0.45}, -1.0) == std::array<int, 5>{1, 1, 1, 1, 1});
    REQUIRE(mespp::binarize({0.5, 0.5, 0.5, 0.5, 0.5}, 0.5) == std::array<int, 5>{1, 1, 1, 1, 1});
}

TEST_CASE("binarize is monotone in the threshold", "[danger]") {
    mespp::Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 5> xi{};
        for (auto& x : xi) x = rng.next_double();
        double t1 = rng.next_double();
        double t2 = rng.next_double();
        if (t1 > t2) std::swap(t1, t2);
        const auto lo = mespp::binarize(xi, t1);
        const auto hi = mespp::binarize(xi, t2);
        for (std::size_t i = 0; i < 5; ++i) REQUIRE(hi[i] <= lo[i]);
    }
}

TEST_CASE("vote counting normalizes over the total number of ones", "[danger]") {
    const auto eta = mespp::estimate_distribution({{0, 0, 1, 0, 0}, {0, 0, 1, 1, 0}});
    REQUIRE(eta[0] == Approx(0.0));
    REQUIRE(eta[2] == Approx(2.0 / 3.0));
    REQUIRE(eta[3] == Approx(1.0 / 3.0));

    const auto single = mespp::estimate_distribution({{0, 1, 0, 0, 0}});
    REQUIRE(single == mespp::DangerDistribution{0.0, 1.0, 0.0, 0.0, 0.0});

    const auto silent = mespp::estimate_distribution({{0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}});
    REQUIRE(silent == mespp::kUniformDanger);

    const mespp::DangerDistribution fallback{0.5, 0.5, 0.0, 0.0, 0.0};
    REQUIRE(mespp::estimate_distribution({{0, 0, 0, 0, 0}}, fallback) == fallback);

    REQUIRE_THROWS_AS(mespp::estimate_distribution({}), mespp::ValidationError);
}

TEST_CASE("vote estimates lie on the probability simplex", "[danger]") {
    mespp::Rng rng(6);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::array<int, 5>> ys(1 + rng.next_below(8));
        for (auto& y : ys)
            for (auto& bit : y) bit = rng.bernoulli(0.4) ? 1 : 0;
        const auto eta = mespp::estimate_distribution(ys);
        double sum = 0.0;
        for (double x : eta) {
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
            sum += x;
        }
        REQUIRE(sum == Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("point estimate takes the highest tied level", "[danger]") {
    REQUIRE(mespp::point_estimate({0.0, 0.0, 0.6, 0.3, 0.1}) == 3);
    REQUIRE(mespp::point_estimate({0.5, 0.0, 0.0, 0.0, 0.5}) == 5);
    REQUIRE(mespp::point_estimate(mespp::kUniformDanger) == 5);
    REQUIRE(mespp::point_estimate({0.9, 0.025, 0.025, 0.025, 0.025}) == 1);

    // Positive rescaling never changes the winner.
    mespp::Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        mespp::DangerDistribution eta{};
        for (auto& x : eta) x = rng.next_double();
        const double c = 0.1 + 5.0 * rng.next_double();
        mespp::DangerDistribution scaled = eta;
        for (auto& x : scaled) x *= c;
        REQUIRE(mespp::point_estimate(eta) == mespp::point_estimate(scaled));
    }
}

TEST_CASE("cumulative confidence sums the safe levels", "[danger]") {
    REQUIRE(mespp::cumulative_confidence({0.3, 0.3, 0.1, 0.2, 0.1}, 3) == Approx(0.7));
    REQUIRE(mespp::cumulative_confidence({0.3, 0.3, 0.1, 0.2, 0.1}, 5) == Approx(1.0));
    REQUIRE(mespp::cumulative_confidence({0.0, 0.0, 0.0, 0.0, 1.0}, 3) == Approx(0.0));
    REQUIRE_THROWS_AS(mespp::cumulative_confidence(mespp::kUniformDanger, 0),
                      mespp::ValidationError);
    REQUIRE_THROWS_AS(mespp::cumulative_confidence(mespp::kUniformDanger, 6),
                      mespp::ValidationError);
}

TEST_CASE("first visit estimates spread across the neighborhood", "[danger]") {
    const auto g = mespp::load_environment(testutil::school_path());
    const auto corpus = mespp::load_corpus(testutil::corpus_path());
    const auto scores = mespp::synthesize_scores(g, corpus, {}, 3);
    mespp::EstimationParams params;

    auto map = mespp::make_prior(mespp::PriorKind::Uniform, g);
    mespp::update_on_visit(map, g, 1, scores, corpus, params, 0);
    mespp::update_on_visit(map, g, 2, scores, corpus, params, 1);
    const auto eta1 = map.at(1);
    const auto eta2 = map.at(2);
    REQUIRE(map.visited[1]);
    REQUIRE(map.visited[2]);

    mespp::update_on_visit(map, g, 3, scores, corpus, params, 2);
    REQUIRE(map.visited[3]);
    // Gym vertices 4..6 inherit vertex 3's fresh estimate without being
    // marked visited; the already-visited 1 and 2 keep theirs.
    for (int w : {4, 5, 6}) {
        REQUIRE(map.at(w) == map.at(3));
        REQUIRE_FALSE(map.visited[static_cast<std::size_t>(w)]);
        REQUIRE(map.last_update_step[static_cast<std::size_t>(w)] == 2);
    }
    REQUIRE(map.at(1) == eta1);
    REQUIRE(map.at(2) == eta2);

    // Second visit to the same vertex changes nothing.
    const auto snapshot_eta = map.eta;
    const auto snapshot_visited = map.visited;
    mespp::update_on_visit(map, g, 3, scores, corpus, params, 9);
    REQUIRE(map.eta == snapshot_eta);
    REQUIRE(map.visited == snapshot_visited);
}

TEST_CASE("visited vertices are never overwritten by propagation", "[danger]") {
    const auto g = mespp::load_environment(testutil::school_path());
    const auto corpus = mespp::load_corpus(testutil::corpus_path());
    const auto scores = mespp::synthesize_scores(g, corpus, {}, 8);
    mespp::EstimationParams params;

    mespp::Rng rng(9);
    auto map = mespp::make_prior(mespp::PriorKind::Uniform, g);
    std::vector<std::pair<int, mespp::DangerDistribution>> frozen;
    for (int step = 0; step < 120; ++step) {
        const int v = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(g.n)));
        mespp::update_on_visit(map, g, v, scores, corpus, params, step);
        for (const auto& [u, eta] : frozen) REQUIRE(map.at(u) == eta);
        if (map.visited[static_cast<std::size_t>(v)]) frozen.push_back({v, map.at(v)});
    }
}

TEST_CASE("priors start uniform or exact", "[danger]") {
    const auto g = tiny_env();

    const auto uniform = mespp::make_prior(mespp::PriorKind::Uniform, g);
    for (int v = 1; v <= g.n; ++v) {
        REQUIRE(uniform.at(v) == mespp::kUniformDanger);
        REQUIRE(uniform.point(v) == 5);
        REQUIRE(uniform.confidence(v, 3) == Approx(0.6));
        REQUIRE_FALSE(uniform.visited[static_cast<std::size_t>(v)]);
    }

    const auto perfect = mespp::make_prior(mespp::PriorKind::Perfect, g);
    REQUIRE(perfect.at(1) == mespp::DangerDistribution{1.0, 0.0, 0.0, 0.0, 0.0});
    REQUIRE(perfect.at(2) == mespp::DangerDistribution{0.0, 0.0, 1.0, 0.0, 0.0});
    REQUIRE(perfect.visited[1]);
    REQUIRE(perfect.visited[2]);

    // Perfect knowledge shrugs off online updates.
    const auto corpus = fire_collapse_corpus();
    const auto scores = mespp::synthesize_scores(g, corpus, {}, 4);
    auto mutated = perfect;
    mespp::update_on_visit(mutated, g, 1, scores, corpus, {}, 1);
    mespp::update_on_visit(mutated, g, 2, scores, corpus, {}, 2);
    REQUIRE(mutated.eta == perfect.eta);
}

TEST_CASE("estimate quality metric spans its range", "[danger]") {
    const auto g = mespp::load_environment(testutil::school_path());

    const auto uniform = mespp::make_prior(mespp::PriorKind::Uniform, g);
    REQUIRE(mespp::bhattacharyya(uniform, g) == Approx(std::sqrt(0.2)).margin(1e-9));

    const auto perfect = mespp::make_prior(mespp::PriorKind::Perfect, g);
    REQUIRE(mespp::bhattacharyya(perfect, g) == Approx(1.0));

    // Confident and wrong everywhere scores zero.
    auto wrong = mespp::make_prior(mespp::PriorKind::Uniform, g);
    for (int v = 1; v <= g.n; ++v) {
        wrong.eta[static_cast<std::size_t>(v)] = {};
        const int truth = g.truth_level[static_cast<std::size_t>(v)];
        wrong.eta[static_cast<std::size_t>(v)][truth == 1 ? 4 : 0] = 1.0;
    }
    REQUIRE(mespp::bhattacharyya(wrong, g) == Approx(0.0));

    mespp::Rng rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        const auto map = oracle::random_estimates(rng, g.n);
        const double bc = mespp::bhattacharyya(map, g);
        REQUIRE(bc >= 0.0);
        REQUIRE(bc <= 1.0);
    }
}

TEST_CASE("initial belief construction", "[belief]") {
    const auto b = mespp::init_belief(2, 0.0, {{2, 1.0}});
    REQUIRE(b.b == std::vector<double>{0.0, 0.0, 1.0});

    REQUIRE_THROWS_WITH(mespp::init_belief(2, 0.0, {{2, 0.9}}), ContainsSubstring("sum"));
    REQUIRE_THROWS_AS(mespp::init_belief(2, 0.0, {{3, 1.0}}), mespp::ValidationError);
    REQUIRE_THROWS_AS(mespp::init_belief(2, -0.1, {{2, 1.1}}), mespp::ValidationError);

    // Repeated vertices accumulate.
    const auto acc = mespp::init_belief(3, 0.25, {{2, 0.25}, {2, 0.25}, {3, 0.25}});
    REQUIRE(acc.at(2) == Approx(0.5));
    REQUIRE(acc.capture() == Approx(0.25));
}

TEST_CASE("capture transfers occupied mass", "[belief]") {
    const auto M = mespp::MotionModel::identity(2);
    const mespp::CaptureModel capture;

    const auto b = mespp::init_belief(2, 0.0, {{2, 1.0}});
    const auto after = mespp::update(b, M, {2}, capture);
    REQUIRE(after.b == std::vector<double>{1.0, 0.0, 0.0});

    const auto idle = mespp::update(b, M, {}, capture);
    REQUIRE(idle.b == b.b);

    REQUIRE_THROWS_AS(mespp::update(b, M, {3}, capture), mespp::ValidationError);
    REQUIRE_THROWS_AS(mespp::update(b, mespp::MotionModel::identity(5), {1}, capture),
                      mespp::ValidationError);
}

TEST_CASE("motion spreads mass before detection", "[belief]") {
    // Chain 1-2-3 lazy walk: stay 0.5, remainder split over neighbors.
    mespp::EnvironmentGraph chain;
    chain.n = 3;
    chain.neighbors = {{}, {2}, {1, 3}, {2}};
    chain.neighborhood_name = {"", "a", "a", "a"};
    chain.truth_level = {0, 1, 1, 1};
    chain.hazard_type.assign(4, mespp::HazardType::None);
    chain.scenes = {{}, {"c1"}, {"c2"}, {"c3"}};
    mespp::validate_environment(chain);

    const auto M = mespp::MotionModel::lazy_walk(chain, 0.5);
    M.validate(&chain);
    REQUIRE(M.prob(1, 1) == Approx(0.5));
    REQUIRE(M.prob(1, 2) == Approx(0.5));
    REQUIRE(M.prob(2, 1) == Approx(0.25));
    REQUIRE(M.prob(2, 2) == Approx(0.5));
    REQUIRE(M.prob(2, 3) == Approx(0.25));

    // Mass on the middle vertex, searcher on an endpoint: one hand-propagated
    // step puts 0.25 at vertex 1, which the searcher captures.
    const auto b = mespp::init_belief(3, 0.0, {{2, 1.0}});
    const auto after = mespp::update(b, M, {1}, mespp::CaptureModel{});
    REQUIRE(after.capture() == Approx(0.25));
    REQUIRE(after.at(1) == Approx(0.0));
    REQUIRE(after.at(2) == Approx(0.5));
    REQUIRE(after.at(3) == Approx(0.25));

    // General motion agrees with a direct matrix-vector product.
    mespp::Rng rng(11);
    const auto rb = oracle::random_belief(rng, 3);
    const auto moved = mespp::update(rb, M, {}, mespp::CaptureModel{});
    for (int v = 1; v <= 3; ++v) {
        double expect = 0.0;
        for (int u = 1; u <= 3; ++u) expect += rb.at(u) * M.prob(u, v);
        REQUIRE(moved.at(v) == Approx(expect).margin(1e-12));
    }
}

TEST_CASE("belief updates conserve mass and only grow capture", "[belief]") {
    mespp::Rng rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(6));
        const auto g = oracle::random_graph(rng, n);
        const auto M = trial % 2 == 0 ? mespp::MotionModel::identity(n)
                                      : mespp::MotionModel::lazy_walk(g, 0.3 + 0.4 * rng.next_double());
        M.validate(&g);
        auto b = oracle::random_belief(rng, n, 0.1 * rng.next_double());
        for (int step = 0; step < 8; ++step) {
            std::vector<int> positions;
            const auto n_agents = rng.next_below(3);
            for (std::uint64_t a = 0; a < n_agents; ++a)
                positions.push_back(1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n))));
            const double before = b.capture();
            b = mespp::update(b, M, positions, mespp::CaptureModel{});
            REQUIRE(b.sum() == Approx(1.0).epsilon(1e-9));
            REQUIRE(b.capture() >= before - 1e-12);
            b.validate();
            for (int pos : positions) REQUIRE(b.at(pos) == 0.0);
        }
    }
}

TEST_CASE("default detection equals its explicit matrix form", "[belief]") {
    mespp::Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(3));  // n <= 4
        const auto g = oracle::random_graph(rng, n);
        const auto M = trial % 2 == 0 ? mespp::MotionModel::identity(n)
                                      : mespp::MotionModel::lazy_walk(g, 0.5);
        const auto b = oracle::random_belief(rng, n, 0.2 * rng.next_double());

        const auto n_agents = 1 + rng.next_below(2);
        std::vector<int> positions;
        for (std::uint64_t a = 0; a < n_agents; ++a)
            positions.push_back(1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n))));

        mespp::CaptureModel explicit_model;
        explicit_model.mode = mespp::CaptureModel::Mode::Explicit;
        explicit_model.matrices.resize(positions.size());
        for (auto& per_vertex : explicit_model.matrices)
            for (int u = 1; u <= n; ++u)
                per_vertex.push_back(mespp::make_perfect_capture_matrix(n, u));

        const auto fast = mespp::update(b, M, positions, mespp::CaptureModel{});
        const auto slow = mespp::update(b, M, positions, explicit_model);
        for (int i = 0; i <= n; ++i)
            REQUIRE(fast.b[static_cast<std::size_t>(i)] ==
                    Approx(slow.b[static_cast<std::size_t>(i)]).margin(1e-12));
    }
}

TEST_CASE("motion model validation rejects malformed matrices", "[belief]") {
    const auto g = tiny_env();

    auto M = mespp::MotionModel::lazy_walk(g, 0.5);
    M.rows[0][0] = 0.6;
    REQUIRE_THROWS_WITH(M.validate(), ContainsSubstring("sum to 1"));

    auto neg = mespp::MotionModel::lazy_walk(g, 0.5);
    neg.rows[0][0] = -0.5;
    neg.rows[0][1] = 1.5;
    REQUIRE_THROWS_WITH(neg.validate(), ContainsSubstring("negative"));

    // Probability on a non-edge is caught only with the graph in hand.
    mespp::EnvironmentGraph path3;
    path3.n = 3;
    path3.neighbors = {{}, {2}, {1, 3}, {2}};
    path3.neighborhood_name = {"", "a", "a", "a"};
    path3.truth_level = {0, 1, 1, 1};
    path3.hazard_type.assign(4, mespp::HazardType::None);
    path3.scenes = {{}, {"p1"}, {"p2"}, {"p3"}};
    auto hop = mespp::MotionModel::identity(3);
    hop.is_identity = false;
    hop.rows[0] = {0.5, 0.0, 0.5};  // 1 -> 3 skips the chain
    REQUIRE_NOTHROW(hop.validate());
    REQUIRE_THROWS_WITH(hop.validate(&path3), ContainsSubstring("not a graph edge"));

    REQUIRE_THROWS_AS(mespp::MotionModel::lazy_walk(g, 1.5), mespp::ValidationError);
}

TEST_CASE("discounted capture objective", "[belief]") {
    REQUIRE(mespp::discounted_capture_objective({0.0, 0.5, 0.5}, 1.0) == Approx(1.0));
    REQUIRE(mespp::discounted_capture_objective({0.0, 0.5, 1.0}, 0.95) == Approx(1.3775));
    REQUIRE(mespp::discounted_capture_objective({0.0, 0.0, 0.0}, 0.5) == Approx(0.0));
    REQUIRE(mespp::discounted_capture_objective({}, 0.99) == Approx(0.0));
    REQUIRE_THROWS_AS(mespp::discounted_capture_objective({1.0}, 0.0), mespp::ValidationError);
    REQUIRE_THROWS_AS(mespp::discounted_capture_objective({1.0}, 1.01), mespp::ValidationError);
}
