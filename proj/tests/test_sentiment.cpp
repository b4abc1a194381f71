#include <cmath>
#include <fstream>

#include "doctest.h"
#include "ratebench/error.hpp"
#include "ratebench/random.hpp"
#include "ratebench/sentiment.hpp"
#include "test_util.hpp"

using namespace ratebench;
using namespace ratebench::sentiment;
using ratebench::testing::source_path;
using ratebench::testing::TempDir;
using ratebench::testing::write_file;

namespace {

const SentimentLexicon& bundled() {
    static const auto lex = SentimentLexicon::load(source_path("data/vader_lexicon.tsv"));
    return lex;
}

}  // namespace

TEST_CASE("compound_score trivial cases") {
    CHECK(compound_score("", bundled()) == 0.0);
    CHECK(compound_score("the phone arrived tuesday", bundled()) == 0.0);
}

TEST_CASE("compound_score matches the reference golden file") {
    std::ifstream in(source_path("tests/data/vader_golden.tsv"));
    REQUIRE(in);
    std::string line;
    std::getline(in, line);
    int n = 0;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        const double expected = std::stod(line.substr(0, tab));
        const std::string text = line.substr(tab + 1);
        CAPTURE(text);
        CHECK(std::abs(compound_score(text, bundled()) - expected) <= 1e-4);
        ++n;
    }
    CHECK(n >= 50);
}

TEST_CASE("rule properties") {
    const auto& lex = bundled();
    CHECK(compound_score("not good", lex) < compound_score("good", lex));
    CHECK(compound_score("very good", lex) > compound_score("good", lex));
    CHECK(compound_score("good!", lex) > compound_score("good", lex));
    CHECK(compound_score("It is GOOD", lex) > compound_score("It is good", lex));
    CHECK(compound_score("bad but good", lex) > compound_score("good but bad", lex));

    const auto tiny = SentimentLexicon::from_valences({{"good", 1.9}});
    CHECK(compound_score("not good", tiny) < compound_score("good", tiny));
    CHECK(compound_score("very good", tiny) > compound_score("good", tiny));
}

TEST_CASE("compound stays strictly inside (-1, 1)") {
    const auto& lex = bundled();
    Rng rng(5);
    const std::vector<std::string> words{"great", "awful", "LOVE", "hate", "not", "very", "but", "!!!", "?",
                                         "good", "no", "never", "so", "kind", "of", "least", "amazing"};
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const auto n = 1 + rng.uniform_index(30);
        for (std::size_t i = 0; i < n; ++i) text += words[rng.uniform_index(words.size())] + " ";
        const double c = compound_score(text, lex);
        CHECK(c > -1.0);
        CHECK(c < 1.0);
    }
}

TEST_CASE("rescale_to_stars and star_class") {
    CHECK(rescale_to_stars(0.0) == 3.0);
    CHECK(rescale_to_stars(1.0) == 5.0);
    CHECK(rescale_to_stars(-1.0) == 1.0);
    CHECK(rescale_to_stars(0.3) == doctest::Approx(3.6).epsilon(1e-15));
    CHECK(star_class(rescale_to_stars(0.3)) == 4);
    CHECK(star_class(3.5) == 4);
    CHECK(star_class(2.5) == 3);
    CHECK(star_class(0.2) == 1);
    CHECK(star_class(7.0) == 5);
    CHECK_THROWS_AS(rescale_to_stars(1.01), ArgumentError);
    CHECK_THROWS_AS(rescale_to_stars(std::nan("")), ArgumentError);

    double prev = rescale_to_stars(-1.0);
    for (int k = -999; k <= 1000; ++k) {
        const double s = rescale_to_stars(k / 1000.0);
        CHECK(s >= prev);
        prev = s;
    }
}

TEST_CASE("external score files") {
    TempDir dir;
    write_file(dir / "ok.csv", "review_id,stars,confidence\na,1,0.9\nb,5,0.8\nc,3,0.5\n");
    const auto ok = load_external_scores(dir / "ok.csv");
    CHECK(ok.stars.size() == 3);
    CHECK(ok.stars.at("b") == 5);

    write_file(dir / "dup.csv", "review_id,stars\na,1\na,2\n");
    try {
        load_external_scores(dir / "dup.csv");
        FAIL("expected duplicate error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("duplicate review_id a") != std::string::npos);
    }

    write_file(dir / "range.csv", "review_id,stars\na,1\nb,6\n");
    try {
        load_external_scores(dir / "range.csv");
        FAIL("expected range error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }

    write_file(dir / "noid.csv", "id,stars\na,1\n");
    CHECK_THROWS_AS(load_external_scores(dir / "noid.csv"), FormatError);
    CHECK_THROWS_AS(load_external_scores(dir / "absent.csv"), IoError);
}

TEST_CASE("join_scores aligns with dataset order") {
    ExternalScoreFile f;
    f.stars = {{"x", 2}, {"y", 4}, {"z", 5}};
    corpus::Dataset ds{"d", {{"z", "", "", 5}, {"x", "", "", 1}, {"y", "", "", 4}}};
    const auto joined = join_scores(ds, f);
    REQUIRE(joined.size() == 3);
    CHECK(joined[0].review_id == "z");
    CHECK(joined[0].stars_real == 5.0);
    CHECK(joined[0].compound == 1.0);
    CHECK(joined[1].stars_real == 2.0);

    ds.reviews.push_back({"w", "", "", 3});
    CHECK_THROWS_AS(join_scores(ds, f), DataError);
    CHECK(join_scores(corpus::Dataset{}, f).empty());
}
