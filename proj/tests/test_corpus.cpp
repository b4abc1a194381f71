#include <set>

#include <fmt/core.h>

#include "doctest.h"
#include "ratebench/corpus.hpp"
#include "ratebench/error.hpp"
#include "ratebench/random.hpp"
#include "test_util.hpp"

using namespace ratebench;
using namespace ratebench::corpus;
using ratebench::testing::TempDir;
using ratebench::testing::write_file;

namespace {

Dataset synthetic(std::size_t per_class) {
    Dataset ds{"toy", {}};
    for (int star = 1; star <= 5; ++star)
        for (std::size_t k = 0; k < per_class; ++k)
            ds.reviews.push_back({fmt::format("r{}_{}", star, k), "text", "text", star});
    return ds;
}

}  // namespace

TEST_CASE("preprocess lowercases, strips punctuation and stopwords") {
    const StopwordSet stop{"the", "is", "and"};
    CHECK(preprocess("The phone is GREAT!!", stop) == "phone great");
    CHECK(preprocess("", stop).empty());
    CHECK(preprocess("and and and", stop).empty());
    CHECK(preprocess("  Don't   stop\tme\nnow ", stop) == "dont stop me now");
    CHECK(preprocess("ÉCRAN Überall", stop) == "écran überall");
    CHECK(preprocess("5-star, 100%", stop) == "5star 100");
}

TEST_CASE("preprocess is idempotent") {
    const StopwordSet stop{"the", "a", "is"};
    Rng rng(3);
    const std::string alphabet = "abcXYZ 1!?,.'-\tÄé";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        const auto len = rng.uniform_index(40);
        for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.uniform_index(alphabet.size() - 3)];
        if (trial % 3 == 0) s += " The A is Ä";
        const auto once = preprocess(s, stop);
        CHECK(preprocess(once, stop) == once);
    }
}

TEST_CASE("stopword file entries are normalized like text") {
    TempDir dir;
    write_file(dir / "stop.txt", "The\ndon't\n\n");
    const auto stop = load_stopwords(dir / "stop.txt");
    CHECK(stop.contains("the"));
    CHECK(stop.contains("dont"));
    CHECK(preprocess("Don't do the thing", stop) == "do thing");
}

TEST_CASE("load_reviews caps per class and skips bad records") {
    TempDir dir;
    std::string jsonl;
    for (int i = 0; i < 10; ++i)
        jsonl += fmt::format(R"({{"reviewText": "review {}", "overall": {}.0, "asin": "B{}"}})", i, i % 5 + 1, i) + "\n";
    jsonl += R"({"reviewText": "too many stars", "overall": 6})" "\n";
    jsonl += R"({"overall": 3})" "\n";
    jsonl += R"({"reviewText": "half star", "overall": 3.5})" "\n";
    jsonl += "not json\n";
    write_file(dir / "cpa.jsonl", jsonl);

    const auto res = load_reviews(dir / "cpa.jsonl", 2);
    CHECK(res.dataset.name == "cpa");
    CHECK(res.dataset.size() == 10);
    for (auto c : res.dataset.class_counts()) CHECK(c == 2);
    CHECK(res.skipped == 4);
    CHECK(res.dataset.reviews.front().id == "B0#1");

    const auto capped = load_reviews(dir / "cpa.jsonl", 1);
    CHECK(capped.dataset.size() == 5);
    CHECK(capped.over_limit == 5);
}

TEST_CASE("load_reviews single out-of-range record counts one skip") {
    TempDir dir;
    write_file(dir / "a.jsonl", R"({"reviewText": "ok", "overall": 4})" "\n" R"({"reviewText": "x", "overall": 6})" "\n");
    const auto res = load_reviews(dir / "a.jsonl", 0);
    CHECK(res.skipped == 1);
    CHECK(res.dataset.size() == 1);
}

TEST_CASE("load_reviews errors") {
    TempDir dir;
    CHECK_THROWS_AS(load_reviews(dir / "missing.jsonl", 0), IoError);
    write_file(dir / "bad.jsonl", R"({"reviewText": "x", "overall": 9})" "\n");
    CHECK_THROWS_AS(load_reviews(dir / "bad.jsonl", 0), DataError);
}

TEST_CASE("load_reviews full category reaches 10,000 at 2,000 per class") {
    TempDir dir;
    std::string jsonl;
    for (int i = 0; i < 11000; ++i)
        jsonl += fmt::format(R"({{"reviewText": "r", "overall": {}}})", i % 5 + 1) + "\n";
    write_file(dir / "big.jsonl", jsonl);
    const auto res = load_reviews(dir / "big.jsonl", 2000);
    CHECK(res.dataset.size() == 10000);
}

TEST_CASE("balanced_sample draws exactly per_class") {
    const auto ds = synthetic(3000);
    const auto s = balanced_sample(ds, 2000, 42);
    CHECK(s.size() == 10000);
    for (auto c : s.class_counts()) CHECK(c == 2000);
    CHECK(balanced_sample(ds, 2000, 42).reviews == s.reviews);
    CHECK(balanced_sample(ds, 2000, 43).reviews != s.reviews);
    CHECK(balanced_sample(ds, 0, 1).empty());
}

TEST_CASE("balanced_sample names the deficient class") {
    auto ds = synthetic(11);
    std::erase_if(ds.reviews, [](const Review& r) { return r.rating == 3 && r.id == "r3_0"; });
    try {
        balanced_sample(ds, 11, 1);
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()) == "class 3: 10 < 11");
    }
}

TEST_CASE("stratified_split proportions and determinism") {
    const auto ds = synthetic(2000);
    const auto split = stratified_split(ds, 0.3, 42);
    CHECK(split.train_ids.size() == 7000);
    CHECK(split.test_ids.size() == 3000);
    std::set<std::string> test(split.test_ids.begin(), split.test_ids.end());
    std::array<int, 5> per_class{};
    for (const auto& r : ds.reviews)
        if (test.contains(r.id)) ++per_class[r.rating - 1];
    for (int c : per_class) CHECK(c == 600);
    for (const auto& id : split.train_ids) CHECK_FALSE(test.contains(id));
    CHECK(stratified_split(ds, 0.3, 42) == split);

    const auto half = stratified_split(synthetic(10), 0.5, 7);
    CHECK(half.train_ids.size() == 25);
    CHECK(half.test_ids.size() == 25);

    CHECK_THROWS_AS(stratified_split(ds, 0.0, 1), ArgumentError);
    CHECK_THROWS_AS(stratified_split(ds, 1.0, 1), ArgumentError);
}

TEST_CASE("stratified_split property: partition within one item of the ratio") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        Dataset ds{"p", {}};
        for (int star = 1; star <= 5; ++star) {
            const auto n = 1 + rng.uniform_index(40);
            for (std::size_t k = 0; k < n; ++k) ds.reviews.push_back({fmt::format("{}-{}", star, k), "", "", star});
        }
        const double frac = 0.05 + 0.9 * rng.uniform01();
        const auto split = stratified_split(ds, frac, trial);
        const auto [train, test] = apply_split(ds, split);
        CHECK(train.size() + test.size() == ds.size());
        const auto all = ds.class_counts();
        const auto t = test.class_counts();
        for (std::size_t c = 0; c < 5; ++c)
            CHECK(std::abs(static_cast<double>(t[c]) - frac * static_cast<double>(all[c])) <= 1.0);
    }
}

TEST_CASE("dataset and split files round-trip byte-identically") {
    TempDir dir;
    auto ds = synthetic(4);
    ds.reviews[0].text = "Quote \" and ünïcode";
    write_dataset(ds, dir / "d.jsonl");
    const auto back = read_dataset(dir / "d.jsonl");
    CHECK(back.reviews == ds.reviews);
    CHECK(serialize_dataset(back) == serialize_dataset(ds));

    const auto split = stratified_split(ds, 0.25, 9);
    write_split(split, dir / "s.json");
    CHECK(read_split(dir / "s.json") == split);
}
