#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ratebench/ciscore.hpp"
#include "ratebench/classify.hpp"
#include "ratebench/corpus.hpp"
#include "ratebench/embed.hpp"
#include "ratebench/report.hpp"

namespace ratebench::experiment {

struct DatasetConfig {
    std::string name;
    std::filesystem::path path;
    std::optional<std::filesystem::path> scores;  // external score CSV
};

/// Declarative description of a run. Relative paths in a config file are
/// resolved against the file's directory.
struct RunConfig {
    std::vector<DatasetConfig> datasets;
    std::size_t per_class = 0;  // balanced sample size per star; 0 keeps every review
    double test_fraction = 0.3;
    std::uint64_t split_seed = 42;
    std::uint64_t seed = 1;  // model initialization and Word2Vec
    std::vector<std::string> pipelines;  // empty: all 26
    nlohmann::json overrides = nlohmann::json::object();
    std::size_t min_df = 2;
    std::size_t max_features = 0;
    embed::Word2VecConfig word2vec;
    std::filesystem::path lexicon;
    std::filesystem::path stopwords;
    std::filesystem::path table;
    ci::ScoreMode ci_mode = ci::ScoreMode::printed;
    std::filesystem::path output = "out";
    std::optional<std::filesystem::path> cache_dir;  // unset: $RATEBENCH_CACHE_DIR, then <output>/cache
    std::size_t jobs = 1;

    /// Pipelines selected by the filter, in enumeration order. Throws ArgumentError on unknown names.
    std::vector<ci::PipelineSpec> selected_pipelines() const;
    /// Canonical form; paths printed as given.
    nlohmann::json to_json() const;
};

/// Bundled lexicon, stopwords and interpretability table directory.
std::filesystem::path default_data_dir();
/// Defaults with bundled resources filled in.
RunConfig default_config();
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};

/// Every problem found, without touching the output directory.
ValidationReport validate_config(const RunConfig& cfg);

struct CellRecord {
    std::string dataset;
    std::string pipeline;
    double ci = 0.0;
    double accuracy = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::optional<std::size_t> parameter_count;  // learned pipelines only
    std::string cache_key;                       // empty for untrained pipelines
    bool cache_hit = false;
    double wall_seconds = 0.0;
};

struct RunResult {
    eval::ReportData report;
    std::vector<CellRecord> cells;  // dataset then enumeration order
    std::vector<std::filesystem::path> files;  // written under cfg.output, relative
    std::filesystem::path cache_dir;
};

using ProgressFn = std::function<void(std::string_view)>;

/// Validates, prepares every dataset, runs all (dataset, pipeline) cells on up
/// to cfg.jobs threads and writes the report plus manifest.json (deterministic)
/// and run_log.json (timings and cache hits). Throws ConfigError on an invalid
/// config before any training.
RunResult run_experiment(const RunConfig& cfg, const ProgressFn& progress = {});

/// Embedding fitted on the train half and applied to both halves.
std::pair<embed::DocMatrix, embed::DocMatrix> embed_split(const corpus::Dataset& train, const corpus::Dataset& test,
                                                          ci::Embedding kind, const RunConfig& cfg);
/// Classifier spec for a learned pipeline: run seed, NB min-max scaling for
/// real-valued embeddings, then the configured overrides.
classify::ModelSpec model_spec(const ci::PipelineSpec& p, const RunConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace ratebench::experiment
