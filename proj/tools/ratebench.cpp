// ratebench command line: corpus preparation, embeddings, sentiment scoring,
// training, evaluation, interpretability scores and full experiment runs.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ratebench/ciscore.hpp"
#include "ratebench/classify.hpp"
#include "ratebench/corpus.hpp"
#include "ratebench/embed.hpp"
#include "ratebench/error.hpp"
#include "ratebench/experiment.hpp"
#include "ratebench/report.hpp"
#include "ratebench/sentiment.hpp"
#include "ratebench/stats.hpp"

namespace fs = std::filesystem;
using namespace ratebench;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct ValidationFailure : Error {
    using Error::Error;
};

void progress(std::string_view line) { fmt::print(stderr, "{}\n", line); }

struct PipelineArgs {
    std::string dataset;
    std::string split;
    std::string pipeline;
    std::string scores;
    std::uint64_t seed = 1;
    std::string overrides;
    std::size_t min_df = 2;
    std::size_t max_features = 0;
};

void add_pipeline_args(CLI::App* cmd, PipelineArgs& a) {
    cmd->add_option("--dataset", a.dataset, "Canonical dataset JSONL written by ingest")->required();
    cmd->add_option("--split", a.split, "Split JSON written by split")->required();
    cmd->add_option("--pipeline", a.pipeline, "Pipeline name, e.g. TFIDF+LR or W2V+NN-BS")->required();
    cmd->add_option("--scores", a.scores, "External score CSV (required for -BS pipelines)");
    cmd->add_option("--seed", a.seed, "Model and Word2Vec seed");
    cmd->add_option("--overrides", a.overrides, "Hyperparameter overrides as JSON, e.g. '{\"NN\":{\"epochs\":5}}'");
    cmd->add_option("--min-df", a.min_df, "Minimum document frequency for Count/TFIDF");
    cmd->add_option("--max-features", a.max_features, "Vocabulary cap, 0 for none");
}

experiment::RunConfig pipeline_config(const PipelineArgs& a) {
    auto cfg = experiment::default_config();
    cfg.seed = a.seed;
    cfg.word2vec.seed = a.seed;
    cfg.min_df = a.min_df;
    cfg.max_features = a.max_features;
    if (!a.overrides.empty()) {
        try {
            cfg.overrides = nlohmann::json::parse(a.overrides);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(fmt::format("--overrides: {}", e.what()));
        }
    }
    return cfg;
}

struct Features {
    classify::CompositeFeatures train;
    classify::CompositeFeatures test;
    std::vector<int> train_y;
    std::vector<int> test_y;
};

std::vector<int> labels_of(const corpus::Dataset& ds) {
    std::vector<int> y;
    for (const auto& r : ds.reviews) y.push_back(r.rating);
    return y;
}

Features build_features(const PipelineArgs& a, const ci::PipelineSpec& p, const experiment::RunConfig& cfg) {
    if (!p.is_classifier()) throw ArgumentError(fmt::format("{} has no trainable model", p.name()));
    if (p.sentiment_feature && a.scores.empty()) throw ConfigError(fmt::format("{} needs --scores", p.name()));
    const auto ds = corpus::read_dataset(a.dataset);
    const auto split = corpus::read_split(a.split);
    auto [train, test] = corpus::apply_split(ds, split);
    auto [xtr, xte] = experiment::embed_split(train, test, *p.embedding, cfg);
    std::optional<std::vector<sentiment::SentimentScore>> str, ste;
    if (p.sentiment_feature) {
        const auto file = sentiment::load_external_scores(a.scores);
        str = sentiment::join_scores(train, file);
        ste = sentiment::join_scores(test, file);
    }
    using Span = std::optional<std::span<const sentiment::SentimentScore>>;
    return {classify::assemble_features(std::move(xtr), str ? Span(*str) : std::nullopt),
            classify::assemble_features(std::move(xte), ste ? Span(*ste) : std::nullopt), labels_of(train),
            labels_of(test)};
}

void write_confusion(const eval::ConfusionMatrix& m, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << "true\\pred,1,2,3,4,5\n";
    for (std::size_t t = 0; t < 5; ++t) {
        out << t + 1;
        for (std::size_t v : m.counts[t]) out << ',' << v;
        out << '\n';
    }
}

void print_validation(const experiment::ValidationReport& r) {
    for (const auto& e : r.errors) fmt::print(stderr, "error: {}\n", e);
    for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rating prediction workbench: interpretability versus accuracy"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load an Amazon-style JSONL dump, sample and clean it");
    std::string in_path, out_path, stopwords_path = (experiment::default_data_dir() / "stopwords_en.txt").string();
    std::size_t per_class = 0, limit = 0;
    std::uint64_t seed = 42;
    ingest->add_option("--input", in_path, "Raw JSONL with reviewText and overall")->required();
    ingest->add_option("--out", out_path, "Canonical dataset JSONL")->required();
    ingest->add_option("--per-class", per_class, "Balanced sample size per star, 0 for all");
    ingest->add_option("--limit-per-class", limit, "Stop reading a star once it has this many reviews, 0 for no cap");
    ingest->add_option("--seed", seed, "Sampling seed");
    ingest->add_option("--stopwords", stopwords_path, "Stopword list");

    // split
    auto* split = app.add_subcommand("split", "Stratified train/test split");
    std::string dataset_path;
    double test_fraction = 0.3;
    split->add_option("--dataset", dataset_path, "Canonical dataset JSONL")->required();
    split->add_option("--test-fraction", test_fraction, "Held-out fraction per class");
    split->add_option("--seed", seed, "Split seed");
    split->add_option("--out", out_path, "Split JSON")->required();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Fit an embedding on the train half and write both halves as CSV");
    std::string split_path, kind, out_train, out_test;
    std::size_t min_df = 2, max_features = 0;
    std::uint64_t w2v_seed = 1;
    embed_cmd->add_option("--dataset", dataset_path, "Canonical dataset JSONL")->required();
    embed_cmd->add_option("--split", split_path, "Split JSON")->required();
    embed_cmd->add_option("--kind", kind, "Count, TFIDF or W2V")->required();
    embed_cmd->add_option("--out-train", out_train, "Train matrix CSV")->required();
    embed_cmd->add_option("--out-test", out_test, "Test matrix CSV")->required();
    embed_cmd->add_option("--min-df", min_df, "Minimum document frequency");
    embed_cmd->add_option("--max-features", max_features, "Vocabulary cap, 0 for none");
    embed_cmd->add_option("--seed", w2v_seed, "Word2Vec seed");

    // sentiment score
    auto* sent = app.add_subcommand("sentiment", "Lexicon sentiment scores");
    auto* sent_score = sent->add_subcommand("score", "Score every review of a dataset");
    sent->require_subcommand(1);
    std::string lexicon_path = (experiment::default_data_dir() / "vader_lexicon.tsv").string();
    sent_score->add_option("--dataset", dataset_path, "Canonical dataset JSONL")->required();
    sent_score->add_option("--lexicon", lexicon_path, "Lexicon TSV");
    sent_score->add_option("--out", out_path, "CSV review_id,compound,stars_real,stars")->required();

    // train / eval
    auto* train_cmd = app.add_subcommand("train", "Train one pipeline's classifier on the train half");
    PipelineArgs train_args;
    add_pipeline_args(train_cmd, train_args);
    train_cmd->add_option("--out", out_path, "Model file (.json for text, otherwise CBOR)")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate one pipeline on the test half");
    PipelineArgs eval_args;
    std::string model_path, confusion_path;
    add_pipeline_args(eval_cmd, eval_args);
    eval_cmd->add_option("--model", model_path, "Model from train; trained on the fly when omitted");
    eval_cmd->add_option("--confusion", confusion_path, "Write the confusion matrix CSV here");

    // ci
    auto* ci_cmd = app.add_subcommand("ci", "Interpretability scores");
    ci_cmd->require_subcommand(1);
    std::string table_path = (experiment::default_data_dir() / "interpretability_table.json").string();
    bool recompute = false;
    std::string survey_path;
    auto* ci_score = ci_cmd->add_subcommand("score", "Per-model scores, printed and recomputed");
    ci_score->add_option("--table", table_path, "Interpretability table JSON");
    ci_score->add_flag("--recompute", recompute, "Use recomputed scores in the score column");
    ci_score->add_option("--survey", survey_path, "Expert survey CSV replacing the table's ranks");
    auto* ci_enum = ci_cmd->add_subcommand("enumerate", "All 26 pipelines sorted by composite score");
    ci_enum->add_option("--table", table_path, "Interpretability table JSON");
    ci_enum->add_flag("--recompute", recompute, "Use recomputed model scores");
    ci_enum->add_option("--out", out_path, "CSV output (stdout when omitted)");

    // run / validate
    std::string config_path, out_dir;
    std::optional<std::uint64_t> run_seed;
    std::optional<std::size_t> jobs;
    auto* run = app.add_subcommand("run", "Run the experiment grid described by a config file");
    run->add_option("--config", config_path, "Run config JSON")->required();
    run->add_option("--seed", run_seed, "Override the model seed");
    run->add_option("--jobs", jobs, "Concurrent pipeline cells");
    run->add_option("--out", out_dir, "Override the output directory");
    auto* validate = app.add_subcommand("validate", "Check a run config without running it");
    validate->add_option("--config", config_path, "Run config JSON")->required();

    // report
    auto* report = app.add_subcommand("report", "Refit and replot a trade-off CSV");
    std::string tradeoff_path;
    report->add_option("--tradeoff", tradeoff_path, "tradeoff.csv from a run")->required();
    report->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*ingest) {
            const auto stop = corpus::load_stopwords(stopwords_path);
            auto loaded = corpus::load_reviews(in_path, limit);
            auto ds = per_class > 0 ? corpus::balanced_sample(loaded.dataset, per_class, seed) : std::move(loaded.dataset);
            ds.name = fs::path(in_path).stem().string();
            corpus::clean_dataset(ds, stop);
            corpus::write_dataset(ds, out_path);
            const auto c = ds.class_counts();
            fmt::print("{} reviews ({} skipped, {} over limit); per star: {} {} {} {} {}\n", ds.size(), loaded.skipped,
                       loaded.over_limit, c[0], c[1], c[2], c[3], c[4]);
        } else if (*split) {
            const auto ds = corpus::read_dataset(dataset_path);
            const auto s = corpus::stratified_split(ds, test_fraction, seed);
            corpus::write_split(s, out_path);
            fmt::print("{} train / {} test\n", s.train_ids.size(), s.test_ids.size());
        } else if (*embed_cmd) {
            auto cfg = experiment::default_config();
            cfg.min_df = min_df;
            cfg.max_features = max_features;
            cfg.word2vec.seed = w2v_seed;
            const auto ds = corpus::read_dataset(dataset_path);
            const auto [train, test] = corpus::apply_split(ds, corpus::read_split(split_path));
            const auto [xtr, xte] = experiment::embed_split(train, test, ci::parse_embedding(kind), cfg);
            embed::write_doc_matrix_csv(xtr, out_train);
            embed::write_doc_matrix_csv(xte, out_test);
            fmt::print("{} features; {} train rows, {} test rows\n", xtr.cols(), xtr.rows(), xte.rows());
        } else if (*sent_score) {
            const auto lex = sentiment::SentimentLexicon::load(lexicon_path);
            const auto ds = corpus::read_dataset(dataset_path);
            std::ofstream out(out_path);
            if (!out) throw IoError(fmt::format("cannot write {}", out_path));
            out << "review_id,compound,stars_real,stars\n";
            for (const auto& r : ds.reviews) {
                const auto s = sentiment::score_review(r, lex);
                out << fmt::format("{},{:.4f},{:.4f},{}\n", r.id, s.compound, s.stars_real,
                                   sentiment::star_class(s.stars_real));
            }
            fmt::print("scored {} reviews\n", ds.size());
        } else if (*train_cmd) {
            const auto p = ci::PipelineSpec::parse(train_args.pipeline);
            const auto cfg = pipeline_config(train_args);
            const auto f = build_features(train_args, p, cfg);
            const auto m = classify::train(experiment::model_spec(p, cfg), f.train, f.train_y);
            classify::save_model(m, out_path);
            fmt::print("{}: {} parameters, train accuracy {:.4f}\n", p.name(), classify::parameter_count(m),
                       eval::accuracy(classify::predict(m, f.train.matrix()), f.train_y));
        } else if (*eval_cmd) {
            const auto p = ci::PipelineSpec::parse(eval_args.pipeline);
            const auto cfg = pipeline_config(eval_args);
            const auto f = build_features(eval_args, p, cfg);
            const auto m = model_path.empty() ? classify::train(experiment::model_spec(p, cfg), f.train, f.train_y)
                                              : classify::load_model(model_path);
            const auto pred = classify::predict(m, f.test.matrix());
            const auto cm = eval::confusion(pred, f.test_y);
            fmt::print("{}: test accuracy {:.4f} on {} reviews\n", p.name(), eval::accuracy(pred, f.test_y), pred.size());
            if (!confusion_path.empty()) write_confusion(cm, confusion_path);
        } else if (*ci_score) {
            auto table = ci::load_table(table_path);
            if (!survey_path.empty()) {
                const auto survey = ci::load_survey(survey_path);
                table = ci::apply_rankings(table, ci::aggregate_rankings(survey));
            }
            fmt::print("model,printed,recomputed,score\n");
            for (const auto& m : table.models) {
                const double rec = ci::interpretability_score(m.name, table);
                const double used = ci::model_score(m.name, table, recompute ? ci::ScoreMode::recomputed : ci::ScoreMode::printed);
                fmt::print("{},{},{:.4f},{:.4f}\n", m.name, m.printed_score ? fmt::format("{:.2f}", *m.printed_score) : "",
                           rec, used);
            }
        } else if (*ci_enum) {
            const auto table = ci::load_table(table_path);
            const auto rs = ci::enumerate_pipelines(table, recompute ? ci::ScoreMode::recomputed : ci::ScoreMode::printed);
            if (out_path.empty()) {
                for (std::size_t i = 0; i < rs.size(); ++i)
                    fmt::print("{:>2}  {:<12} {:.2f}\n", i + 1, rs[i].pipeline.name(), rs[i].ci);
            } else {
                ci::write_enumeration_csv(rs, out_path);
                fmt::print("{} pipelines written to {}\n", rs.size(), out_path);
            }
        } else if (*validate) {
            const auto cfg = experiment::load_config(config_path);
            const auto r = experiment::validate_config(cfg);
            print_validation(r);
            if (!r.ok()) return kExitValidation;
            fmt::print("config OK: {} dataset(s) x {} pipeline(s)\n", cfg.datasets.size(), cfg.selected_pipelines().size());
        } else if (*run) {
            auto cfg = experiment::load_config(config_path);
            if (run_seed) {
                cfg.seed = *run_seed;
                cfg.word2vec.seed = *run_seed;
            }
            if (jobs) cfg.jobs = *jobs;
            if (!out_dir.empty()) cfg.output = out_dir;
            const auto r = experiment::validate_config(cfg);
            print_validation(r);
            if (!r.ok()) return kExitValidation;
            const auto result = experiment::run_experiment(cfg, progress);
            fmt::print("{} cells; report in {}\n", result.cells.size(), cfg.output.string());
        } else if (*report) {
            const auto rows = eval::read_tradeoff_csv(tradeoff_path);
            const auto files = eval::emit_tradeoff(rows, out_dir);
            for (const auto& f : files) fmt::print("{}\n", (fs::path(out_dir) / f).string());
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitValidation;
    } catch (const ArgumentError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
