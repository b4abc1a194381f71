#include <cmath>

#include <fmt/core.h>

#include "doctest.h"
#include "ratebench/embed.hpp"
#include "ratebench/error.hpp"
#include "ratebench/random.hpp"
#include "test_util.hpp"

using namespace ratebench;
using namespace ratebench::embed;
using ratebench::testing::TempDir;

namespace {

std::vector<std::string> ids_for(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("d{}", i));
    return ids;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("fit_vocabulary counts document frequency") {
    const std::vector<std::string> docs{"a b", "b c"};
    const auto v = fit_vocabulary(docs, 1);
    REQUIRE(v.terms() == std::vector<std::string>{"a", "b", "c"});
    CHECK(v.document_frequency()[0] == 1);
    CHECK(v.document_frequency()[1] == 2);
    CHECK(v.document_frequency()[2] == 1);
    CHECK(v.n_docs() == 2);

    CHECK(fit_vocabulary(docs, 2).terms() == std::vector<std::string>{"b"});
    CHECK_THROWS_AS(fit_vocabulary(std::vector<std::string>{}, 1), DataError);

    const auto capped = fit_vocabulary(std::vector<std::string>{"x y z", "y z", "z"}, 1, 2);
    CHECK(capped.terms() == std::vector<std::string>{"y", "z"});
}

TEST_CASE("count_transform") {
    const std::vector<std::string> fit_docs{"a b", "b c"};
    const auto v = fit_vocabulary(fit_docs, 1);
    const std::vector<std::string> docs{"b b c", "", "z z"};
    const auto m = count_transform(docs, ids_for(3), v).values.to_dense();
    CHECK(m(0, 0) == 0.0);
    CHECK(m(0, 1) == 2.0);
    CHECK(m(0, 2) == 1.0);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(m(1, c) == 0.0);
        CHECK(m(2, c) == 0.0);
    }
}

TEST_CASE("count_transform column sums equal corpus term totals") {
    Rng rng(2);
    const std::vector<std::string> words{"a", "b", "c", "d", "e", "f"};
    std::vector<std::string> docs;
    std::map<std::string, double> totals;
    for (int d = 0; d < 40; ++d) {
        std::string doc;
        for (std::size_t k = 0, n = rng.uniform_index(12); k < n; ++k) {
            const auto& w = words[rng.uniform_index(words.size())];
            doc += w + " ";
            totals[w] += 1;
        }
        docs.push_back(doc);
    }
    const auto v = fit_vocabulary(docs, 1);
    const auto m = count_transform(docs, ids_for(docs.size()), v).values.to_dense();
    for (std::size_t t = 0; t < v.size(); ++t) {
        double col = 0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            CHECK(m(r, t) >= 0.0);
            CHECK(m(r, t) == std::floor(m(r, t)));
            col += m(r, t);
        }
        CHECK(col == totals[v.terms()[t]]);
    }
}

TEST_CASE("tfidf golden two-document example") {
    const std::vector<std::string> docs{"good good phone", "bad phone"};
    const auto v = fit_vocabulary(docs, 1);
    const auto m = tfidf_transform(docs, ids_for(2), v).values.to_dense();
    const auto good = *v.index_of("good");
    const auto phone = *v.index_of("phone");
    const auto bad = *v.index_of("bad");
    // ln(3/2)+1 for "good", 1 for "phone"; values computed at 30 digits
    CHECK(std::abs(v.idf(good) - 1.405465108108164381978013115465) < 1e-12);
    CHECK(v.idf(phone) == 1.0);
    CHECK(std::abs(m(0, good) - 0.942155624663235895039364534151) < 1e-9);
    CHECK(std::abs(m(0, phone) - 0.335175743327926053635332220933) < 1e-9);
    CHECK(m(0, bad) == 0.0);

    const auto single = fit_vocabulary(std::vector<std::string>{"x"}, 1);
    const auto sm = tfidf_transform(std::vector<std::string>{"x"}, ids_for(1), single).values.to_dense();
    CHECK(sm(0, 0) == 1.0);
}

TEST_CASE("tfidf rows are unit norm or zero and idf decreases with df") {
    Rng rng(8);
    const std::vector<std::string> words{"p", "q", "r", "s", "t", "u", "v"};
    std::vector<std::string> docs;
    for (int d = 0; d < 60; ++d) {
        std::string doc;
        for (std::size_t k = 0, n = rng.uniform_index(9); k < n; ++k) doc += words[rng.uniform_index(1 + d % 7)] + " ";
        docs.push_back(doc);
    }
    const auto v = fit_vocabulary(docs, 1);
    const auto m = tfidf_transform(docs, ids_for(docs.size()), v);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double sq = 0;
        for (double x : m.values.row(r).values) {
            CHECK(std::isfinite(x));
            sq += x * x;
        }
        if (m.values.row(r).size() > 0) CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-9);
    }
    for (std::size_t a = 0; a < v.size(); ++a)
        for (std::size_t b = 0; b < v.size(); ++b)
            if (v.document_frequency()[a] < v.document_frequency()[b]) CHECK(v.idf(a) > v.idf(b));
}

namespace {

// "good" and "great" share their contexts; "bolt" lives among hardware words.
std::vector<std::string> planted_corpus() {
    Rng rng(99);
    const std::vector<std::string> praise_ctx{"phone", "screen", "battery", "love", "works", "fast"};
    const std::vector<std::string> hw_ctx{"wrench", "nut", "tighten", "steel", "thread", "socket"};
    std::vector<std::string> docs;
    for (int i = 0; i < 400; ++i) {
        std::string doc;
        const bool hardware = i % 3 == 0;
        const auto& ctx = hardware ? hw_ctx : praise_ctx;
        for (int k = 0; k < 8; ++k) {
            doc += ctx[rng.uniform_index(ctx.size())] + " ";
            if (k == 3) doc += hardware ? "bolt " : (rng.uniform_index(2) ? "good " : "great ");
        }
        docs.push_back(doc);
    }
    return docs;
}

}  // namespace

TEST_CASE("word2vec places shared-context words together") {
    Word2VecConfig cfg;
    cfg.dim = 16;
    cfg.seed = 7;
    cfg.epochs = 5;
    const auto docs = planted_corpus();
    const auto wv = train_word2vec(docs, cfg);
    CHECK(wv.dimension() == 16);
    for (std::size_t i = 0; i < wv.size(); ++i) CHECK(wv.vectors().row(i).size() == 16);
    const auto good = *wv.find("good");
    CHECK(cosine(good, *wv.find("great")) > cosine(good, *wv.find("bolt")));
    REQUIRE(wv.epoch_loss.size() == 5);
    CHECK(wv.epoch_loss.back() < wv.epoch_loss.front());

    const auto again = train_word2vec(docs, cfg);
    CHECK(again.vectors() == wv.vectors());
    cfg.seed = 8;
    CHECK_FALSE(train_word2vec(docs, cfg).vectors() == wv.vectors());
}

TEST_CASE("word2vec argument and corpus errors") {
    Word2VecConfig cfg;
    CHECK_THROWS_AS(train_word2vec(std::vector<std::string>{}, cfg), DataError);
    CHECK_THROWS_AS(train_word2vec(std::vector<std::string>{"a b"}, cfg), DataError);
    cfg.dim = 0;
    CHECK_THROWS_AS(train_word2vec(std::vector<std::string>{"a b c d e f"}, cfg), ArgumentError);
}

TEST_CASE("doc_embed averages known tokens") {
    Matrix vecs(2, 3);
    vecs(0, 0) = 1;
    vecs(0, 1) = 2;
    vecs(0, 2) = 3;
    vecs(1, 0) = -1;
    const WordVectors wv({"w", "v"}, vecs, {});
    const auto one = doc_embed("w", wv);
    CHECK(one == std::vector<double>{1, 2, 3});
    CHECK(doc_embed("w w", wv) == one);
    CHECK(doc_embed("w v", wv) == std::vector<double>{0, 1, 1.5});
    CHECK(doc_embed("zz yy", wv) == std::vector<double>{0, 0, 0});
    CHECK(doc_embed("", wv).size() == 3);
}

TEST_CASE("word vector text format is lossless") {
    TempDir dir;
    Word2VecConfig cfg;
    cfg.dim = 8;
    const auto wv = train_word2vec(planted_corpus(), cfg);
    save_word_vectors(wv, dir / "wv.txt");
    const auto back = load_word_vectors(dir / "wv.txt");
    CHECK(back.terms() == wv.terms());
    CHECK(back.vectors() == wv.vectors());
    for (std::size_t i = 0; i < back.size(); ++i)
        for (double x : doc_embed(back.terms()[i] + " unknown", back)) CHECK(std::isfinite(x));

    ratebench::testing::write_file(dir / "bad.txt", "2 3\na 1 2 3\nb 1 x 3\n");
    CHECK_THROWS_AS(load_word_vectors(dir / "bad.txt"), FormatError);
}

TEST_CASE("doc matrix CSV export") {
    TempDir dir;
    const std::vector<std::string> docs{"a b b", "c"};
    const auto v = fit_vocabulary(docs, 1);
    write_doc_matrix_csv(count_transform(docs, ids_for(2), v), dir / "m.csv");
    CHECK(ratebench::testing::read_file(dir / "m.csv") == "id,0,1,2\nd0,1,2,0\nd1,0,0,1\n");
}
