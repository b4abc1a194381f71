#include "ratebench/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <omp.h>

#include "ratebench/classify.hpp"
#include "ratebench/corpus.hpp"
#include "ratebench/error.hpp"
#include "ratebench/sentiment.hpp"
#include "ratebench/stats.hpp"

namespace ratebench::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCacheVersion = 1;

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string_view mode_name(ci::ScoreMode m) { return m == ci::ScoreMode::printed ? "printed" : "recomputed"; }

json word2vec_json(const embed::Word2VecConfig& c) {
    return {{"dim", c.dim},           {"window", c.window},   {"negatives", c.negatives},
            {"epochs", c.epochs},     {"learning_rate", c.learning_rate},
            {"min_count", c.min_count}, {"seed", c.seed}};
}

template <typename T>
void take(const json& obj, const char* key, T& out, std::string_view where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}{}: {}", where, key, e.what()));
    }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) throw ConfigError(fmt::format("{} must be an object", where.empty() ? "config" : where));
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(fmt::format("unknown config key '{}{}'", where, key));
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

classify::Family family_of(ci::Head h) {
    switch (h) {
        case ci::Head::lr: return classify::Family::logistic;
        case ci::Head::nb: return classify::Family::naive_bayes;
        case ci::Head::svm: return classify::Family::svm;
        case ci::Head::nn: return classify::Family::mlp;
        default: break;
    }
    throw ArgumentError(fmt::format("{} is not a trainable head", ci::head_name(h)));
}

}  // namespace

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<ci::PipelineSpec> RunConfig::selected_pipelines() const {
    const auto all = ci::all_pipelines();
    if (pipelines.empty()) return all;
    std::set<std::string> wanted;
    for (const auto& name : pipelines) wanted.insert(ci::PipelineSpec::parse(name).name());
    std::vector<ci::PipelineSpec> out;
    for (const auto& p : all)
        if (wanted.count(p.name())) out.push_back(p);
    return out;
}

json RunConfig::to_json() const {
    json ds = json::array();
    for (const auto& d : datasets) {
        json e = {{"name", d.name}, {"path", d.path.string()}};
        if (d.scores) e["scores"] = d.scores->string();
        ds.push_back(std::move(e));
    }
    json out = {{"datasets", ds},
                {"per_class", per_class},
                {"split", {{"test_fraction", test_fraction}, {"seed", split_seed}}},
                {"seed", seed},
                {"pipelines", pipelines},
                {"overrides", overrides},
                {"embedding", {{"min_df", min_df}, {"max_features", max_features}, {"word2vec", word2vec_json(word2vec)}}},
                {"resources", {{"lexicon", lexicon.string()}, {"stopwords", stopwords.string()}, {"table", table.string()}}},
                {"ci_mode", mode_name(ci_mode)},
                {"output", output.string()},
                {"jobs", jobs}};
    out["cache_dir"] = cache_dir ? json(cache_dir->string()) : json(nullptr);
    return out;
}

fs::path default_data_dir() {
    if (const char* env = std::getenv("RATEBENCH_DATA_DIR"); env && *env) return env;
    return RATEBENCH_DEFAULT_DATA_DIR;
}

RunConfig default_config() {
    RunConfig c;
    const auto data = default_data_dir();
    c.lexicon = data / "vader_lexicon.tsv";
    c.stopwords = data / "stopwords_en.txt";
    c.table = data / "interpretability_table.json";
    c.word2vec.seed = c.seed;
    return c;
}

RunConfig config_from_json(const json& j, const fs::path& base) {
    reject_unknown(j,
                   {"datasets", "per_class", "split", "seed", "pipelines", "overrides", "embedding", "resources",
                    "ci_mode", "output", "cache_dir", "jobs"},
                   "");
    RunConfig c = default_config();
    take(j, "seed", c.seed, "");
    c.word2vec.seed = c.seed;
    if (j.contains("datasets")) {
        if (!j.at("datasets").is_array()) throw ConfigError("datasets must be an array");
        for (const auto& d : j.at("datasets")) {
            reject_unknown(d, {"name", "path", "scores"}, "datasets[].");
            DatasetConfig dc;
            std::string path;
            take(d, "path", path, "datasets[].");
            if (path.empty()) throw ConfigError("datasets[].path is required");
            dc.path = resolve(base, path);
            dc.name = dc.path.stem().string();
            take(d, "name", dc.name, "datasets[].");
            if (d.contains("scores") && !d.at("scores").is_null()) {
                std::string s;
                take(d, "scores", s, "datasets[].");
                dc.scores = resolve(base, s);
            }
            c.datasets.push_back(std::move(dc));
        }
    }
    take(j, "per_class", c.per_class, "");
    if (j.contains("split")) {
        const auto& s = j.at("split");
        reject_unknown(s, {"test_fraction", "seed"}, "split.");
        take(s, "test_fraction", c.test_fraction, "split.");
        take(s, "seed", c.split_seed, "split.");
    }
    take(j, "pipelines", c.pipelines, "");
    if (j.contains("overrides")) c.overrides = j.at("overrides");
    if (j.contains("embedding")) {
        const auto& e = j.at("embedding");
        reject_unknown(e, {"min_df", "max_features", "word2vec"}, "embedding.");
        take(e, "min_df", c.min_df, "embedding.");
        take(e, "max_features", c.max_features, "embedding.");
        if (e.contains("word2vec")) {
            const auto& w = e.at("word2vec");
            reject_unknown(w, {"dim", "window", "negatives", "epochs", "learning_rate", "min_count", "seed"},
                           "embedding.word2vec.");
            take(w, "dim", c.word2vec.dim, "embedding.word2vec.");
            take(w, "window", c.word2vec.window, "embedding.word2vec.");
            take(w, "negatives", c.word2vec.negatives, "embedding.word2vec.");
            take(w, "epochs", c.word2vec.epochs, "embedding.word2vec.");
            take(w, "learning_rate", c.word2vec.learning_rate, "embedding.word2vec.");
            take(w, "min_count", c.word2vec.min_count, "embedding.word2vec.");
            take(w, "seed", c.word2vec.seed, "embedding.word2vec.");
        }
    }
    if (j.contains("resources")) {
        const auto& r = j.at("resources");
        reject_unknown(r, {"lexicon", "stopwords", "table"}, "resources.");
        std::string s;
        if (r.contains("lexicon")) {
            take(r, "lexicon", s, "resources.");
            c.lexicon = resolve(base, s);
        }
        if (r.contains("stopwords")) {
            take(r, "stopwords", s, "resources.");
            c.stopwords = resolve(base, s);
        }
        if (r.contains("table")) {
            take(r, "table", s, "resources.");
            c.table = resolve(base, s);
        }
    }
    if (j.contains("ci_mode")) {
        std::string m;
        take(j, "ci_mode", m, "");
        if (m == "printed") c.ci_mode = ci::ScoreMode::printed;
        else if (m == "recomputed") c.ci_mode = ci::ScoreMode::recomputed;
        else throw ConfigError(fmt::format("ci_mode must be 'printed' or 'recomputed', not '{}'", m));
    }
    if (j.contains("output")) {
        std::string o;
        take(j, "output", o, "");
        c.output = resolve(base, o);
    }
    if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) {
        std::string o;
        take(j, "cache_dir", o, "");
        c.cache_dir = resolve(base, o);
    }
    take(j, "jobs", c.jobs, "");
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot open config {}", path.string()));
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return config_from_json(j, path.parent_path());
}

ValidationReport validate_config(const RunConfig& cfg) {
    ValidationReport r;
    const auto err = [&](std::string m) { r.errors.push_back(std::move(m)); };
    if (cfg.datasets.empty()) err("no datasets configured");
    std::set<std::string> names;
    for (const auto& d : cfg.datasets) {
        if (d.name.empty()) err(fmt::format("dataset {} has an empty name", d.path.string()));
        if (!names.insert(d.name).second) err(fmt::format("dataset name '{}' used twice", d.name));
        if (!fs::is_regular_file(d.path)) err(fmt::format("dataset file not found: {}", d.path.string()));
        if (d.scores && !fs::is_regular_file(*d.scores))
            err(fmt::format("score file not found: {}", d.scores->string()));
    }
    for (const auto& [what, p] : {std::pair{"lexicon", cfg.lexicon}, {"stopword list", cfg.stopwords},
                                  {"interpretability table", cfg.table}})
        if (!fs::is_regular_file(p)) err(fmt::format("{} not found: {}", what, p.string()));
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        err(fmt::format("split.test_fraction must be in (0, 1), got {}", cfg.test_fraction));
    if (cfg.jobs < 1) err("jobs must be >= 1");
    if (cfg.min_df < 1) err("embedding.min_df must be >= 1");
    if (cfg.word2vec.dim < 1 || cfg.word2vec.window < 1 || cfg.word2vec.epochs < 1)
        err("embedding.word2vec dim, window and epochs must be >= 1");

    std::vector<ci::PipelineSpec> pipelines;
    std::set<std::string> seen;
    for (const auto& name : cfg.pipelines) {
        try {
            const auto p = ci::PipelineSpec::parse(name);
            if (!seen.insert(p.name()).second) r.warnings.push_back(fmt::format("pipeline {} listed twice", name));
        } catch (const Error& e) {
            err(fmt::format("pipeline '{}': {}", name, e.what()));
        }
    }
    try {
        pipelines = cfg.selected_pipelines();
    } catch (const Error&) {
    }
    if (!cfg.pipelines.empty() && pipelines.empty() && r.errors.empty()) err("pipeline filter selects nothing");

    std::vector<std::string> needs;
    for (const auto& p : pipelines)
        if (p.needs_external_scores()) needs.push_back(p.name());
    if (!needs.empty())
        for (const auto& d : cfg.datasets)
            if (!d.scores)
                err(fmt::format("dataset '{}' has no score file but {} need external scores", d.name,
                                fmt::join(needs, ", ")));

    for (classify::Family f :
         {classify::Family::logistic, classify::Family::naive_bayes, classify::Family::svm, classify::Family::mlp}) {
        try {
            classify::ModelSpec spec;
            spec.family = f;
            spec.apply_overrides(cfg.overrides);
            spec.validate();
        } catch (const Error& e) {
            err(fmt::format("overrides: {}", e.what()));
            break;
        }
    }
    if (fs::is_regular_file(cfg.table)) {
        try {
            const auto t = ci::load_table(cfg.table);
            for (const auto& p : pipelines) ci::composite_ci(p, t, cfg.ci_mode);
        } catch (const Error& e) {
            err(fmt::format("interpretability table: {}", e.what()));
        }
    }
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (cfg.jobs > hw) r.warnings.push_back(fmt::format("jobs = {} exceeds the {} available hardware threads", cfg.jobs, hw));
    return r;
}

namespace {

struct Split {
    corpus::Dataset train;
    corpus::Dataset test;
    std::vector<int> train_y;
    std::vector<int> test_y;
};

struct Prepared {
    const DatasetConfig* cfg = nullptr;
    corpus::Dataset full;
    corpus::SplitIndex split;
    Split parts;
    std::size_t skipped = 0;
    std::string hash;  // cleaned dataset + split
    std::vector<sentiment::SentimentScore> vader_test;
    std::optional<sentiment::ExternalScoreFile> external_file;
    std::string scores_hash;
    std::vector<sentiment::SentimentScore> external_train;
    std::vector<sentiment::SentimentScore> external_test;
    std::map<ci::Embedding, std::pair<embed::DocMatrix, embed::DocMatrix>> embeddings;
    std::map<ci::Embedding, std::string> embedding_keys;
};

std::vector<std::string> clean_docs(const corpus::Dataset& ds) {
    std::vector<std::string> out;
    out.reserve(ds.size());
    for (const auto& r : ds.reviews) out.push_back(r.clean);
    return out;
}

std::vector<std::string> ids_of(const corpus::Dataset& ds) {
    std::vector<std::string> out;
    out.reserve(ds.size());
    for (const auto& r : ds.reviews) out.push_back(r.id);
    return out;
}

std::vector<int> labels_of(const corpus::Dataset& ds) {
    std::vector<int> out;
    out.reserve(ds.size());
    for (const auto& r : ds.reviews) out.push_back(r.rating);
    return out;
}

json doc_matrix_json(const embed::DocMatrix& m) {
    const auto& v = m.values;
    return {{"row_ids", m.row_ids},
            {"cols", v.cols()},
            {"row_ptr", std::vector<std::size_t>(v.row_ptr().begin(), v.row_ptr().end())},
            {"col_idx", std::vector<std::uint32_t>(v.col_idx().begin(), v.col_idx().end())},
            {"values", std::vector<double>(v.values().begin(), v.values().end())}};
}

embed::DocMatrix doc_matrix_from(const json& j) {
    embed::DocMatrix m;
    m.row_ids = j.at("row_ids").get<std::vector<std::string>>();
    m.values = CsrMatrix(j.at("cols").get<std::size_t>());
    const auto ptr = j.at("row_ptr").get<std::vector<std::size_t>>();
    const auto cols = j.at("col_idx").get<std::vector<std::uint32_t>>();
    const auto vals = j.at("values").get<std::vector<double>>();
    if (ptr.size() != m.row_ids.size() + 1 || ptr.back() != cols.size() || cols.size() != vals.size())
        throw FormatError("malformed cached matrix");
    for (std::size_t r = 0; r + 1 < ptr.size(); ++r)
        m.values.push_row(std::span(cols).subspan(ptr[r], ptr[r + 1] - ptr[r]),
                          std::span(vals).subspan(ptr[r], ptr[r + 1] - ptr[r]));
    return m;
}

std::optional<json> read_cbor(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::from_cbor(bytes);
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void write_atomic(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    const fs::path tmp = path.string() + fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError(fmt::format("cannot write {}", tmp.string()));
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError(fmt::format("failed writing {}", tmp.string()));
    }
    fs::rename(tmp, path);
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json embedding_params(const RunConfig& cfg, ci::Embedding e) {
    if (e == ci::Embedding::w2v) return word2vec_json(cfg.word2vec);
    return {{"min_df", cfg.min_df}, {"max_features", cfg.max_features}};
}

}  // namespace

std::pair<embed::DocMatrix, embed::DocMatrix> embed_split(const corpus::Dataset& train, const corpus::Dataset& test,
                                                          ci::Embedding kind, const RunConfig& cfg) {
    const auto train_docs = clean_docs(train);
    const auto test_docs = clean_docs(test);
    const auto train_ids = ids_of(train);
    const auto test_ids = ids_of(test);
    if (kind == ci::Embedding::w2v) {
        const auto wv = embed::train_word2vec(train_docs, cfg.word2vec);
        return {embed::doc_embed_matrix(train_docs, train_ids, wv), embed::doc_embed_matrix(test_docs, test_ids, wv)};
    }
    const auto vocab = embed::fit_vocabulary(train_docs, cfg.min_df, cfg.max_features);
    if (kind == ci::Embedding::count)
        return {embed::count_transform(train_docs, train_ids, vocab), embed::count_transform(test_docs, test_ids, vocab)};
    return {embed::tfidf_transform(train_docs, train_ids, vocab), embed::tfidf_transform(test_docs, test_ids, vocab)};
}

classify::ModelSpec model_spec(const ci::PipelineSpec& p, const RunConfig& cfg) {
    p.validate();
    if (!p.embedding) throw ArgumentError(fmt::format("{} is not a trainable pipeline", p.name()));
    classify::ModelSpec spec;
    spec.family = family_of(p.head);
    spec.seed = cfg.seed;
    spec.bayes.minmax_scale = *p.embedding != ci::Embedding::count;
    spec.apply_overrides(cfg.overrides);
    return spec;
}

namespace {

Prepared prepare(const RunConfig& cfg, const DatasetConfig& dc, const corpus::StopwordSet& stopwords,
                 const sentiment::SentimentLexicon& lexicon, const std::set<ci::Embedding>& embeddings,
                 const fs::path& cache_dir, const ProgressFn& progress) {
    Prepared p;
    p.cfg = &dc;
    auto loaded = corpus::load_reviews(dc.path, 0);
    p.skipped = loaded.skipped;
    p.full = cfg.per_class > 0 ? corpus::balanced_sample(loaded.dataset, cfg.per_class, cfg.split_seed)
                               : std::move(loaded.dataset);
    p.full.name = dc.name;
    corpus::clean_dataset(p.full, stopwords);
    p.split = corpus::stratified_split(p.full, cfg.test_fraction, cfg.split_seed);
    auto [train, test] = corpus::apply_split(p.full, p.split);
    p.parts.train = std::move(train);
    p.parts.test = std::move(test);
    p.parts.train_y = labels_of(p.parts.train);
    p.parts.test_y = labels_of(p.parts.test);
    p.hash = hex(fnv1a(corpus::serialize_split(p.split), fnv1a(corpus::serialize_dataset(p.full))));
    if (progress)
        progress(fmt::format("[{}] {} reviews ({} skipped), {} train / {} test", dc.name, p.full.size(), p.skipped,
                             p.parts.train.size(), p.parts.test.size()));

    for (const auto& r : p.parts.test.reviews) p.vader_test.push_back(sentiment::score_review(r, lexicon));
    if (dc.scores) {
        p.external_file = sentiment::load_external_scores(*dc.scores);
        p.scores_hash = hex(fnv1a(read_bytes(*dc.scores)));
        p.external_train = sentiment::join_scores(p.parts.train, *p.external_file);
        p.external_test = sentiment::join_scores(p.parts.test, *p.external_file);
    }

    for (ci::Embedding e : embeddings) {
        const json key_doc = {{"v", kCacheVersion},
                              {"kind", "embedding"},
                              {"data", p.hash},
                              {"embedding", ci::embedding_name(e)},
                              {"params", embedding_params(cfg, e)}};
        const std::string key = hex(fnv1a(key_doc.dump()));
        p.embedding_keys[e] = key;
        const fs::path file = cache_dir / fmt::format("embed-{}.cbor", key);
        if (auto cached = read_cbor(file)) {
            try {
                p.embeddings[e] = {doc_matrix_from(cached->at("train")), doc_matrix_from(cached->at("test"))};
                continue;
            } catch (const std::exception&) {
            }
        }
        auto m = embed_split(p.parts.train, p.parts.test, e, cfg);
        write_atomic(file, json::to_cbor(json{{"train", doc_matrix_json(m.first)}, {"test", doc_matrix_json(m.second)}}));
        if (progress)
            progress(fmt::format("[{}] {} embedding: {} features", dc.name, ci::embedding_name(e), m.first.cols()));
        p.embeddings[e] = std::move(m);
    }
    return p;
}

struct CellOutput {
    CellRecord record;
    eval::ConfusionMatrix confusion;
    std::string error;
};

CellOutput run_cell(const RunConfig& cfg, const Prepared& data, const ci::PipelineSpec& p,
                    const ci::InterpretabilityTable& table, const fs::path& cache_dir) {
    const auto start = std::chrono::steady_clock::now();
    CellOutput out;
    auto& rec = out.record;
    rec.dataset = data.cfg->name;
    rec.pipeline = p.name();
    rec.ci = ci::composite_ci(p, table, cfg.ci_mode).ci;
    rec.n_train = data.parts.train.size();
    rec.n_test = data.parts.test.size();

    std::vector<int> pred;
    if (p.head == ci::Head::vader) {
        for (const auto& s : data.vader_test) pred.push_back(sentiment::star_class(s.stars_real));
        rec.n_train = 0;
    } else if (p.head == ci::Head::bert) {
        for (const auto& s : data.external_test) pred.push_back(sentiment::star_class(s.stars_real));
        rec.n_train = 0;
    } else {
        const auto spec = model_spec(p, cfg);
        const auto& [train_m, test_m] = data.embeddings.at(*p.embedding);
        std::optional<std::span<const sentiment::SentimentScore>> train_s, test_s;
        if (p.sentiment_feature) {
            train_s = std::span<const sentiment::SentimentScore>(data.external_train);
            test_s = std::span<const sentiment::SentimentScore>(data.external_test);
        }
        const auto xtrain = classify::assemble_features(train_m, train_s);
        const auto xtest = classify::assemble_features(test_m, test_s);

        const json key_doc = {{"v", kCacheVersion},
                              {"kind", "model"},
                              {"embedding", data.embedding_keys.at(*p.embedding)},
                              {"pipeline", rec.pipeline},
                              {"hyperparameters", spec.hyperparameters()},
                              {"seed", spec.seed},
                              {"scores", p.sentiment_feature ? data.scores_hash : ""}};
        rec.cache_key = hex(fnv1a(key_doc.dump()));
        const fs::path file = cache_dir / fmt::format("model-{}.cbor", rec.cache_key);
        std::optional<classify::FittedModel> model;
        if (fs::is_regular_file(file)) {
            try {
                model = classify::load_model(file);
                rec.cache_hit = true;
            } catch (const Error&) {
            }
        }
        if (!model) {
            model = classify::train(spec, xtrain, data.parts.train_y);
            const fs::path tmp = file.string() + fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
            classify::save_model(*model, tmp);
            fs::rename(tmp, file);
        }
        pred = classify::predict(*model, xtest.matrix());
        rec.parameter_count = classify::parameter_count(*model);
    }
    rec.accuracy = eval::accuracy(pred, data.parts.test_y);
    out.confusion = eval::confusion(pred, data.parts.test_y);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

void sentiment_summaries(const Prepared& data, const sentiment::SentimentLexicon& lexicon,
                         std::vector<eval::SentimentSummary>& out) {
    const auto summarize = [&](const std::string& source, const std::string& scope,
                               const std::vector<sentiment::SentimentScore>& scores, const std::vector<int>& truth) {
        eval::SentimentSummary s;
        s.dataset = data.cfg->name;
        s.source = source;
        s.scope = scope;
        s.n = scores.size();
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            x.push_back(scores[i].stars_real);
            y.push_back(truth[i]);
        }
        if (x.size() >= 2) {
            try {
                s.pearson = eval::pearson(x, y);
            } catch (const DataError&) {
            }
        }
        if (!x.empty()) s.box = eval::box_stats_by_star(x, truth);
        out.push_back(std::move(s));
    };
    std::vector<sentiment::SentimentScore> vader_full;
    for (const auto& r : data.full.reviews) vader_full.push_back(sentiment::score_review(r, lexicon));
    const auto full_y = labels_of(data.full);
    summarize("VADER", "full", vader_full, full_y);
    summarize("VADER", "test", data.vader_test, data.parts.test_y);
    if (data.external_file) {
        const std::string tag = "BERT";
        summarize(tag, "full", sentiment::join_scores(data.full, *data.external_file), full_y);
        summarize(tag, "test", data.external_test, data.parts.test_y);
    }
}

fs::path pick_cache_dir(const RunConfig& cfg) {
    if (cfg.cache_dir) return *cfg.cache_dir;
    if (const char* env = std::getenv("RATEBENCH_CACHE_DIR"); env && *env) return env;
    return cfg.output / "cache";
}

json defining_config(const RunConfig& cfg) {
    json j = cfg.to_json();
    // execution settings do not change results
    j.erase("output");
    j.erase("cache_dir");
    j.erase("jobs");
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const ProgressFn& progress) {
    const auto report = validate_config(cfg);
    if (!report.ok()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : report.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto pipelines = cfg.selected_pipelines();
    const auto table = ci::load_table(cfg.table);
    const auto stopwords = corpus::load_stopwords(cfg.stopwords);
    const auto lexicon = sentiment::SentimentLexicon::load(cfg.lexicon);
    RunResult result;
    result.cache_dir = pick_cache_dir(cfg);
    fs::create_directories(result.cache_dir);
    fs::create_directories(cfg.output);

    std::set<ci::Embedding> needed;
    for (const auto& p : pipelines)
        if (p.embedding) needed.insert(*p.embedding);

    std::vector<Prepared> prepared;
    prepared.reserve(cfg.datasets.size());
    for (const auto& d : cfg.datasets)
        prepared.push_back(prepare(cfg, d, stopwords, lexicon, needed, result.cache_dir, progress));

    struct Task {
        std::size_t dataset;
        std::size_t pipeline;
    };
    std::vector<Task> tasks;
    for (std::size_t d = 0; d < prepared.size(); ++d)
        for (std::size_t p = 0; p < pipelines.size(); ++p) tasks.push_back({d, p});
    std::vector<CellOutput> outputs(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    const std::size_t workers = std::min(cfg.jobs, std::max<std::size_t>(1, tasks.size()));
    const int omp_threads = std::max(1, omp_get_max_threads() / static_cast<int>(workers));
    const auto work = [&] {
        omp_set_num_threads(omp_threads);
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& t = tasks[i];
            auto& out = outputs[i];
            try {
                out = run_cell(cfg, prepared[t.dataset], pipelines[t.pipeline], table, result.cache_dir);
            } catch (const std::exception& e) {
                out.record.dataset = prepared[t.dataset].cfg->name;
                out.record.pipeline = pipelines[t.pipeline].name();
                out.error = e.what();
            }
            if (progress) {
                std::lock_guard lock(log_mutex);
                const auto& r = out.record;
                if (out.error.empty())
                    progress(fmt::format("[{}] {:<12} ci {:.2f}  accuracy {:.4f}  {:.2f}s{}", r.dataset, r.pipeline,
                                         r.ci, r.accuracy, r.wall_seconds, r.cache_hit ? " (cached)" : ""));
                else
                    progress(fmt::format("[{}] {} failed: {}", r.dataset, r.pipeline, out.error));
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    std::string failures;
    for (const auto& o : outputs)
        if (!o.error.empty()) failures += fmt::format("\n  {} / {}: {}", o.record.dataset, o.record.pipeline, o.error);
    if (!failures.empty()) throw Error("pipeline cells failed:" + failures);

    for (auto& o : outputs) {
        result.report.outcomes.push_back({{o.record.dataset, o.record.pipeline, o.record.ci, o.record.accuracy}, o.confusion});
        result.cells.push_back(o.record);
    }
    for (const auto& p : prepared) sentiment_summaries(p, lexicon, result.report.sentiment);
    result.files = eval::emit_report(result.report, cfg.output);

    const json defining = defining_config(cfg);
    json manifest = {{"format", "ratebench-manifest"},
                     {"version", 1},
                     {"config", defining},
                     {"config_hash", hex(fnv1a(defining.dump()))},
                     {"seeds", {{"split", cfg.split_seed}, {"model", cfg.seed}, {"word2vec", cfg.word2vec.seed}}}};
    json datasets = json::array();
    for (const auto& p : prepared)
        datasets.push_back({{"name", p.cfg->name},
                            {"reviews", p.full.size()},
                            {"skipped", p.skipped},
                            {"train", p.parts.train.size()},
                            {"test", p.parts.test.size()},
                            {"data_hash", p.hash},
                            {"scores_hash", p.scores_hash}});
    manifest["datasets"] = datasets;
    json cells = json::array();
    json log_cells = json::array();
    for (const auto& c : result.cells) {
        cells.push_back({{"dataset", c.dataset},
                         {"pipeline", c.pipeline},
                         {"ci", c.ci},
                         {"accuracy", c.accuracy},
                         {"n_train", c.n_train},
                         {"n_test", c.n_test},
                         {"parameter_count", c.parameter_count ? json(*c.parameter_count) : json(nullptr)},
                         {"cache_key", c.cache_key}});
        log_cells.push_back({{"dataset", c.dataset},
                             {"pipeline", c.pipeline},
                             {"cache_hit", c.cache_hit},
                             {"wall_seconds", c.wall_seconds}});
    }
    manifest["cells"] = cells;
    auto files = result.files;
    files.push_back("manifest.json");
    files.push_back("run_log.json");
    std::sort(files.begin(), files.end());
    json file_list = json::array();
    for (const auto& f : files) file_list.push_back(f.generic_string());
    manifest["files"] = file_list;
    write_text(cfg.output / "manifest.json", manifest.dump(2) + "\n");

    const json run_log = {{"cells", log_cells},
                          {"jobs", workers},
                          {"omp_threads_per_job", omp_threads},
                          {"cache_dir", result.cache_dir.string()},
                          {"total_seconds",
                           std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    write_text(cfg.output / "run_log.json", run_log.dump(2) + "\n");
    result.files = files;
    return result;
}

}  // namespace ratebench::experiment
