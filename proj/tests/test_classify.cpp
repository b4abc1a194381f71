#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "ratebench/classify.hpp"
#include "ratebench/classify_detail.hpp"
#include "ratebench/embed.hpp"
#include "ratebench/error.hpp"
#include "test_util.hpp"

using namespace ratebench;
using namespace ratebench::classify;
using ratebench::testing::random_csr;
using ratebench::testing::TempDir;

namespace {

std::vector<std::string> ids_for(std::size_t n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("d{}", i));
    return ids;
}

ModelSpec spec_for(Family f) {
    ModelSpec s;
    s.family = f;
    s.seed = 11;
    s.mlp.hidden = {16, 8};
    s.mlp.epochs = 5;
    s.mlp.learning_rate = 1e-2;
    return s;
}

// Five Gaussian-ish blobs in 4 dimensions, labels 1..5.
struct Toy {
    CsrMatrix x;
    std::vector<int> y;
};

Toy blobs(std::uint64_t seed, std::size_t per_class, double spread) {
    Rng rng(seed);
    Matrix d(per_class * 5, 4);
    std::vector<int> y;
    for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t r = c * per_class + i;
            for (std::size_t t = 0; t < 4; ++t)
                d(r, t) = (t == c % 4 ? 2.0 : 0.0) + (c == 4 ? 1.0 : 0.0) + rng.uniform(-spread, spread);
            y.push_back(static_cast<int>(c + 1));
        }
    return {CsrMatrix::from_dense(d), y};
}

double accuracy(std::span<const int> a, std::span<const int> b) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
    return static_cast<double>(hit) / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("family names round-trip") {
    for (Family f : {Family::logistic, Family::naive_bayes, Family::svm, Family::mlp})
        CHECK(parse_family(family_name(f)) == f);
    CHECK_THROWS_AS(parse_family("RF"), ArgumentError);
}

TEST_CASE("spec validation and overrides") {
    ModelSpec s;
    s.family = Family::svm;
    s.svm.c = 0.0;
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    s.apply_overrides({{"SVM", {{"c", 2.5}, {"gamma", 0.1}}}, {"NN", {{"epochs", 3}, {"hidden", {4}}}}});
    CHECK(s.svm.c == 2.5);
    CHECK(*s.svm.gamma == 0.1);
    CHECK(s.mlp.epochs == 3);
    CHECK(s.mlp.hidden == std::vector<std::size_t>{4});
    CHECK_NOTHROW(s.validate());
    CHECK_THROWS_AS(s.apply_overrides({{"NN", {{"momentum", 0.9}}}}), ConfigError);
    CHECK_THROWS_AS(s.apply_overrides({{"XGB", {}}}), ConfigError);
    CHECK_THROWS_AS(s.apply_overrides({{"LR", {{"l2", "big"}}}}), ConfigError);
    s.family = Family::mlp;
    s.mlp.hidden = {4, 0};
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    s.family = Family::naive_bayes;
    s.bayes.alpha = -1;
    CHECK_THROWS_AS(s.validate(), ArgumentError);
    s.family = Family::logistic;
    CHECK(s.hyperparameters().at("max_iters") == 5000);
}

TEST_CASE("assemble_features appends the star column") {
    embed::DocMatrix base{ids_for(3), CsrMatrix::from_dense(Matrix(3, 4, 0.5))};
    std::vector<sentiment::SentimentScore> scores(3);
    for (std::size_t i = 0; i < 3; ++i) {
        scores[i].review_id = base.row_ids[i];
        scores[i].stars_real = 1.0 + static_cast<double>(i);
    }
    const auto with = assemble_features(base, std::span<const sentiment::SentimentScore>(scores));
    REQUIRE(with.rows() == 3);
    REQUIRE(with.cols() == 5);
    const auto d = with.matrix().to_dense();
    CHECK(d(2, 4) == 3.0);
    CHECK(d(0, 0) == 0.5);

    const auto without = assemble_features(base, std::nullopt);
    CHECK(without.matrix() == base.values);

    std::vector<sentiment::SentimentScore> two(scores.begin(), scores.begin() + 2);
    CHECK_THROWS_AS(assemble_features(base, std::span<const sentiment::SentimentScore>(two)), DataError);
    scores[1].review_id = "other";
    CHECK_THROWS_AS(assemble_features(base, std::span<const sentiment::SentimentScore>(scores)), DataError);
}

TEST_CASE("naive Bayes on the good/bad corpus") {
    const std::vector<std::string> docs{"good", "bad"};
    const auto vocab = embed::fit_vocabulary(docs, 1);
    const auto x = embed::count_transform(docs, ids_for(2), vocab).values;
    const std::vector<int> y{5, 1};
    auto spec = spec_for(Family::naive_bayes);
    const auto m = train(spec, x, y);
    const auto& nb = m.as<NaiveBayesModel>();
    const auto good = *vocab.index_of("good");
    // classes sorted: index 1 is label 5 (the positive class)
    CHECK(std::exp(nb.feature_log_prob(1, good)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    for (std::size_t c = 0; c < 2; ++c) {
        double s = 0.0;
        for (double v : nb.feature_log_prob.row(c)) s += std::exp(v);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    const std::vector<std::string> q{"good"};
    CHECK(predict(m, embed::count_transform(q, ids_for(1), vocab).values) == std::vector<int>{5});
    CHECK(parameter_count(m) == 2 * 2 + 2);
}

TEST_CASE("naive Bayes log-posteriors equal the counting oracle exactly") {
    Rng rng(2024);
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_index(19));
        const std::size_t k = 2 + static_cast<std::size_t>(rng.uniform_index(std::min<std::size_t>(4, n - 1)));
        const auto docs = testing::random_docs(rng, n, 12, 8);
        const auto yi = testing::random_classes(rng, n, k);
        const double alpha = round % 2 == 0 ? 1.0 : rng.uniform(0.1, 2.0);
        const auto vocab = embed::fit_vocabulary(docs, 1);
        const auto x = embed::count_transform(docs, ids_for(n), vocab).values;
        NaiveBayesParams p;
        p.alpha = alpha;
        const auto model = detail::fit_naive_bayes(x, yi, k, p);
        const auto queries = testing::random_docs(rng, 5, 14, 8);
        const auto got = detail::naive_bayes_log_posterior(model, embed::count_transform(queries, ids_for(5), vocab).values);
        const auto want = testing::naive_bayes_oracle(docs, yi, k, alpha, queries);
        CHECK(got == want);
    }
}

TEST_CASE("naive Bayes min-max scaling handles negative features") {
    const auto toy = blobs(5, 10, 0.3);
    auto spec = spec_for(Family::naive_bayes);
    CHECK_THROWS_AS(train(spec, toy.x, toy.y), DataError);
    spec.bayes.minmax_scale = true;
    const auto m = train(spec, toy.x, toy.y);
    const auto p = predict_proba(m, toy.x);
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double s = 0.0;
        for (double v : p.row(r)) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(accuracy(predict(m, toy.x), toy.y) > 0.5);
}

TEST_CASE("logistic regression separates a linearly separable set") {
    Matrix d(40, 2);
    std::vector<int> y;
    Rng rng(1);
    for (std::size_t i = 0; i < 40; ++i) {
        const bool pos = i % 2 == 0;
        d(i, 0) = (pos ? 1.0 : -1.0) + rng.uniform(-0.5, 0.5);
        d(i, 1) = rng.uniform(-1.0, 1.0);
        y.push_back(pos ? 4 : 2);
    }
    const auto x = CsrMatrix::from_dense(d);
    const auto m = train(spec_for(Family::logistic), x, y);
    CHECK(accuracy(predict(m, x), y) == 1.0);
    CHECK(m.classes() == std::vector<int>{2, 4});
    CHECK(parameter_count(m) == 2 * 2 + 2);
    const auto& h = m.report().loss_history;
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
}

TEST_CASE("logistic regression parameter count example") {
    const auto x = CsrMatrix::from_dense(Matrix(2, 1, 1.0));
    const auto m = train(spec_for(Family::logistic), x, std::vector<int>{1, 2});
    CHECK(parameter_count(m) == 4);
}

TEST_CASE("zero-weight models give uniform probabilities and the tie goes to class 1") {
    ModelSpec spec = spec_for(Family::mlp);
    spec.mlp.hidden = {512, 128};
    MlpModel net;
    net.weights = {Matrix(2, 512), Matrix(512, 128), Matrix(128, 5)};
    net.biases = {std::vector<double>(512), std::vector<double>(128), std::vector<double>(5)};
    const FittedModel m(spec, {1, 2, 3, 4, 5}, 2, net);
    CHECK(parameter_count(m) == 67845);
    const auto x = CsrMatrix::from_dense(Matrix(3, 2, 0.7));
    const auto p = predict_proba(m, x);
    for (double v : p.values()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(predict(m, x) == std::vector<int>{1, 1, 1});

    const FittedModel lr(spec_for(Family::logistic), {1, 2, 3, 4, 5}, 2, LogisticModel{Matrix(2, 5), std::vector<double>(5)});
    const auto plr = predict_proba(lr, x);
    for (double v : plr.values()) CHECK(v == 0.2);
    CHECK(predict(lr, x) == std::vector<int>{1, 1, 1});

    const NaiveBayesModel nb{std::vector<double>(5, std::log(0.2)), Matrix(5, 2, std::log(0.5)), {}, {}};
    CHECK(parameter_count(FittedModel(spec_for(Family::naive_bayes), {1, 2, 3, 4, 5}, 2, nb)) == 15);

    const double tie[] = {0.2, 0.2, 0.2, 0.2, 0.2};
    CHECK(argmax(tie) == 0);
}

TEST_CASE("predict handles empty input and dimension mismatch") {
    const auto toy = blobs(1, 6, 0.2);
    const auto m = train(spec_for(Family::logistic), toy.x, toy.y);
    CHECK(predict(m, CsrMatrix(4)).empty());
    CHECK_THROWS_AS(predict(m, CsrMatrix(3)), ArgumentError);
}

TEST_CASE("training input errors") {
    const auto toy = blobs(1, 4, 0.2);
    for (Family f : {Family::logistic, Family::naive_bayes, Family::svm, Family::mlp}) {
        CHECK_THROWS_AS(train(spec_for(f), toy.x, std::vector<int>(toy.y.size(), 3)), DataError);
        CHECK_THROWS_AS(train(spec_for(f), toy.x, std::vector<int>{1, 2}), DataError);
    }
    auto bad = toy.y;
    bad[0] = 6;
    CHECK_THROWS_AS(train(spec_for(Family::logistic), toy.x, bad), DataError);
    Matrix d = toy.x.to_dense();
    d(0, 0) = std::nan("");
    CHECK_THROWS_AS(train(spec_for(Family::logistic), CsrMatrix::from_dense(d), toy.y), DataError);
}

TEST_CASE("every family yields row-stochastic probabilities consistent with predict") {
    const auto toy = blobs(9, 12, 0.4);
    for (Family f : {Family::logistic, Family::naive_bayes, Family::svm, Family::mlp}) {
        auto spec = spec_for(f);
        spec.bayes.minmax_scale = true;
        const auto m = train(spec, toy.x, toy.y);
        const auto p = predict_proba(m, toy.x);
        const auto labels = predict(m, toy.x);
        for (std::size_t r = 0; r < p.rows(); ++r) {
            double s = 0.0;
            for (double v : p.row(r)) {
                CHECK(v >= 0.0);
                s += v;
            }
            CHECK(std::abs(s - 1.0) <= 1e-9);
            CHECK(m.classes()[argmax(p.row(r))] == labels[r]);
        }
        if (f != Family::mlp) CHECK(accuracy(labels, toy.y) > 0.8);
    }
}

TEST_CASE("logistic gradient matches central differences") {
    Rng rng(42);
    for (int round = 0; round < 20; ++round) {
        const std::size_t d = 1 + rng.uniform_index(10);
        const std::size_t n = 2 + rng.uniform_index(29);
        const std::size_t k = 2 + rng.uniform_index(std::min<std::size_t>(4, n - 1));
        const auto x = random_csr(rng, n, d, 0.7);
        const auto y = testing::random_classes(rng, n, k);
        const auto r = testing::check_logistic_gradient(x, y, k, 1e-2, rng);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("network gradient matches central differences") {
    Rng rng(43);
    for (int round = 0; round < 20; ++round) {
        const std::size_t d = 1 + rng.uniform_index(10);
        const std::size_t n = 2 + rng.uniform_index(29);
        const std::size_t k = 2 + rng.uniform_index(std::min<std::size_t>(4, n - 1));
        const std::vector<std::size_t> hidden{1 + rng.uniform_index(12), 1 + rng.uniform_index(8)};
        const auto x = random_csr(rng, n, d, 0.7);
        const auto y = testing::random_classes(rng, n, k);
        const auto r = testing::check_mlp_gradient(x, y, k, hidden, rng);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("SMO duals satisfy the KKT conditions") {
    Rng rng(99);
    for (int round = 0; round < 4; ++round) {
        const std::size_t n = 20 + rng.uniform_index(41);
        const std::size_t d = 2 + rng.uniform_index(4);
        const auto x = random_csr(rng, n, d, 1.0);
        std::vector<std::int8_t> y(n);
        const auto dense = x.to_dense();
        for (std::size_t i = 0; i < n; ++i) {
            // noisy linear rule so some points end up bounded
            const double s = dense(i, 0) + 0.5 * dense(i, 1) + rng.uniform(-0.4, 0.4);
            y[i] = s > 0 ? 1 : -1;
        }
        y[0] = 1;
        y[1] = -1;
        const double c = round % 2 == 0 ? 1.0 : 10.0;
        const double gamma = detail::default_gamma(x);
        detail::KernelCache cache(x, gamma, 1 << 20);
        const auto res = detail::solve_smo(cache, y, c, 1e-3, 10000);
        CHECK(res.converged);
        const auto rep = testing::kkt_report(x, y, gamma, c, res);
        CHECK(rep.duals_in_box);
        CHECK(rep.max_violation < 1e-3);
        CHECK(rep.max_free_margin_error < 1e-2);
    }
}

TEST_CASE("kernel cache evicts but returns identical rows") {
    Rng rng(4);
    const auto x = random_csr(rng, 30, 5, 0.8);
    detail::KernelCache small(x, 0.7, 1);
    detail::KernelCache big(x, 0.7, 1 << 20);
    for (int rep = 0; rep < 3; ++rep)
        for (std::size_t i = 0; i < 30; ++i) CHECK(*small.row(i) == *big.row(i));
    const auto held = small.row(0);
    small.row(1);
    small.row(2);
    CHECK(held->size() == 30);
}

TEST_CASE("network training lowers the loss and is deterministic") {
    const auto toy = blobs(3, 20, 0.5);
    const auto spec = spec_for(Family::mlp);
    const auto a = train(spec, toy.x, toy.y);
    const auto b = train(spec, toy.x, toy.y);
    CHECK(to_json(a) == to_json(b));
    const auto& h = a.report().loss_history;
    REQUIRE(h.size() == spec.mlp.epochs + 1);
    CHECK(h.back() < h.front());
    auto other = spec;
    other.seed = 12;
    CHECK(to_json(train(other, toy.x, toy.y)) != to_json(a));
}

TEST_CASE("models round-trip losslessly through JSON and CBOR") {
    const auto toy = blobs(8, 8, 0.4);
    TempDir dir;
    for (Family f : {Family::logistic, Family::naive_bayes, Family::svm, Family::mlp}) {
        auto spec = spec_for(f);
        spec.bayes.minmax_scale = true;
        const auto m = train(spec, toy.x, toy.y);
        for (const char* name : {"m.json", "m.bin"}) {
            const auto path = dir.path() / name;
            save_model(m, path);
            const auto back = load_model(path);
            CHECK(to_json(back) == to_json(m));
            CHECK(decision_scores(back, toy.x) == decision_scores(m, toy.x));
            CHECK(parameter_count(back) == parameter_count(m));
        }
    }
    testing::write_file(dir.path() / "bad.json", "{\"format\": \"other\"}");
    CHECK_THROWS_AS(load_model(dir.path() / "bad.json"), FormatError);
    testing::write_file(dir.path() / "trunc.bin", "\xa1");
    CHECK_THROWS_AS(load_model(dir.path() / "trunc.bin"), FormatError);
    CHECK_THROWS_AS(load_model(dir.path() / "missing.bin"), IoError);
}

TEST_CASE("SVM parameter count follows the support vectors") {
    const auto toy = blobs(2, 10, 0.6);
    const auto m = train(spec_for(Family::svm), toy.x, toy.y);
    const auto& s = m.as<SvmModel>();
    std::size_t expect = s.binaries.size();
    for (const auto& b : s.binaries) {
        expect += b.sv.size() * (toy.x.cols() + 1);
        for (double c : b.coef) CHECK(std::abs(c) <= 1.0);
    }
    CHECK(parameter_count(m) == expect);
    CHECK(m.report().converged);
}
