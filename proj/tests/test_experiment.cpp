#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "ratebench/error.hpp"
#include "ratebench/experiment.hpp"
#include "ratebench/sentiment.hpp"
#include "test_util.hpp"

using namespace ratebench;
using namespace ratebench::experiment;
using ratebench::testing::read_file;
using ratebench::testing::source_path;
using ratebench::testing::TempDir;
using ratebench::testing::write_file;

namespace {

const auto kReviews = source_path("data/fixtures/reviews_50.jsonl");
const auto kScores = source_path("data/fixtures/scores_50.csv");

RunConfig fixture_config(const TempDir& tmp) {
    auto cfg = default_config();
    cfg.datasets = {{"fx", kReviews, kScores}};
    cfg.min_df = 1;
    cfg.output = tmp / "out";
    cfg.overrides = {{"NN", {{"epochs", 20}}}, {"LR", {{"max_iters", 200}}}};
    cfg.word2vec.epochs = 2;
    return cfg;
}

}  // namespace

TEST_CASE("config file parsing resolves relative paths") {
    TempDir tmp;
    write_file(tmp / "run.json", R"({
        // comment allowed
        "datasets": [{"name": "a", "path": "a.jsonl", "scores": "a.csv"}],
        "split": {"test_fraction": 0.25, "seed": 7},
        "pipelines": ["TFIDF+LR", "VADER"],
        "embedding": {"min_df": 3},
        "jobs": 2
    })");
    const auto cfg = load_config(tmp / "run.json");
    REQUIRE(cfg.datasets.size() == 1);
    CHECK(cfg.datasets[0].path == tmp / "a.jsonl");
    CHECK(*cfg.datasets[0].scores == tmp / "a.csv");
    CHECK(cfg.test_fraction == 0.25);
    CHECK(cfg.split_seed == 7);
    CHECK(cfg.min_df == 3);
    CHECK(cfg.jobs == 2);
    const auto p = cfg.selected_pipelines();
    REQUIRE(p.size() == 2);
    CHECK(p[0].name() == "VADER");
    CHECK(p[1].name() == "TFIDF+LR");
}

TEST_CASE("config rejects unknown keys") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"datasetz": []})"), "."), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"split": {"fraction": 0.2}})"), "."), ConfigError);
}

TEST_CASE("validation examples") {
    TempDir tmp;
    SUBCASE("missing dataset file is one error") {
        auto cfg = default_config();
        cfg.datasets = {{"gone", tmp / "missing.jsonl", std::nullopt}};
        cfg.pipelines = {"TFIDF+LR"};
        const auto r = validate_config(cfg);
        CHECK(r.errors.size() == 1);
    }
    SUBCASE("BS pipeline without scores is one error") {
        auto cfg = default_config();
        cfg.datasets = {{"fx", kReviews, std::nullopt}};
        cfg.pipelines = {"TFIDF+LR-BS"};
        const auto r = validate_config(cfg);
        REQUIRE(r.errors.size() == 1);
        CHECK(r.errors[0].find("fx") != std::string::npos);
    }
    SUBCASE("valid config has no errors") {
        const auto r = validate_config(fixture_config(tmp));
        CHECK(r.ok());
    }
    SUBCASE("unknown override key") {
        auto cfg = fixture_config(tmp);
        cfg.overrides = {{"LR", {{"learning_rat", 0.1}}}};
        CHECK_FALSE(validate_config(cfg).ok());
    }
    SUBCASE("run refuses an invalid config before writing anything") {
        auto cfg = default_config();
        cfg.datasets = {{"fx", kReviews, std::nullopt}};
        cfg.pipelines = {"BERT"};
        cfg.output = tmp / "never";
        CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
        CHECK_FALSE(std::filesystem::exists(tmp / "never"));
    }
}

TEST_CASE("fixture scores cover every review") {
    auto loaded = corpus::load_reviews(kReviews, 0);
    const auto scores = sentiment::load_external_scores(kScores);
    const auto joined = sentiment::join_scores(loaded.dataset, scores);
    REQUIRE(joined.size() == loaded.dataset.size());
    for (std::size_t i = 0; i < joined.size(); ++i) {
        CHECK(joined[i].review_id == loaded.dataset.reviews[i].id);
        CHECK(joined[i].source == sentiment::ScoreSource::external);
    }
}

TEST_CASE("VADER-only run yields one cell") {
    TempDir tmp;
    auto cfg = fixture_config(tmp);
    cfg.datasets[0].scores.reset();
    cfg.pipelines = {"VADER"};
    const auto r = run_experiment(cfg);
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].pipeline == "VADER");
    CHECK(r.cells[0].ci == doctest::Approx(0.20));
    CHECK_FALSE(r.cells[0].parameter_count.has_value());
    const auto csv = read_file(cfg.output / "tradeoff.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("full grid on the fixture is deterministic and reuses its cache") {
    TempDir tmp;
    auto cfg = fixture_config(tmp);
    const auto first = run_experiment(cfg);
    REQUIRE(first.cells.size() == 26);
    std::set<std::string> names;
    for (const auto& c : first.cells) {
        names.insert(c.pipeline);
        CHECK(c.cache_hit == false);
        CHECK(c.accuracy >= 0.0);
        CHECK(c.accuracy <= 1.0);
        if (ci::PipelineSpec::parse(c.pipeline).is_classifier()) {
            CHECK(c.parameter_count.has_value());
            CHECK(c.cache_key.size() == 16);
        }
    }
    CHECK(names.size() == 26);

    auto second_cfg = cfg;
    second_cfg.output = tmp / "out2";
    second_cfg.cache_dir = first.cache_dir;
    second_cfg.jobs = 3;
    const auto second = run_experiment(second_cfg);
    REQUIRE(second.files == first.files);
    for (const auto& f : first.files)
        if (f != "run_log.json") CHECK_MESSAGE(read_file(cfg.output / f) == read_file(second_cfg.output / f), f);
    const auto hits = std::count_if(second.cells.begin(), second.cells.end(), [](const CellRecord& c) { return c.cache_hit; });
    CHECK(hits == 24);

    auto reseeded = cfg;
    reseeded.seed = 2;
    reseeded.output = tmp / "out3";
    const auto third = run_experiment(reseeded);
    CHECK(std::none_of(third.cells.begin(), third.cells.end(), [](const CellRecord& c) { return c.cache_hit; }));
    CHECK(read_file(reseeded.output / "manifest.json") != read_file(cfg.output / "manifest.json"));
}

TEST_CASE("manifest excludes machine-dependent settings") {
    TempDir tmp;
    auto cfg = fixture_config(tmp);
    cfg.pipelines = {"VADER", "Count+NB"};
    run_experiment(cfg);
    const auto manifest = nlohmann::json::parse(read_file(cfg.output / "manifest.json"));
    const auto& c = manifest.at("config");
    CHECK_FALSE(c.contains("output"));
    CHECK_FALSE(c.contains("cache_dir"));
    CHECK_FALSE(c.contains("jobs"));
    const auto log = nlohmann::json::parse(read_file(cfg.output / "run_log.json"));
    CHECK(log.at("cells").size() == 2);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}
