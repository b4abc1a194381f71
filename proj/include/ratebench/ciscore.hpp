#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ratebench::ci {

inline constexpr std::array<std::string_view, 3> kCriteria{"simplicity", "transparency", "explainability"};

struct ModelEntry {
    std::string name;
    std::array<double, 3> ranks{};  // mean expert rank per criterion, 1 = most interpretable
    double params = 0.0;
    std::optional<double> printed_score;
};

/// Expert rankings, parameter counts and weights behind the per-model scores.
struct InterpretabilityTable {
    std::vector<ModelEntry> models;
    std::array<double, 3> criterion_weights{0.2, 0.2, 0.2};
    double param_weight = 0.4;
    std::optional<double> param_max;  // unset: largest model count

    /// Throws ConfigError on weights not summing to 1, negative counts,
    /// non-positive ranks, duplicate names or a zero parameter maximum.
    void validate() const;
    const ModelEntry& model(std::string_view name) const;
    bool contains(std::string_view name) const;
    double rank_max(std::size_t criterion) const;
    double param_max_value() const;

    /// The six reference models with their published ranks and scores.
    static InterpretabilityTable defaults();
};

nlohmann::json to_json(const InterpretabilityTable& t);
InterpretabilityTable table_from_json(const nlohmann::json& j);
InterpretabilityTable load_table(const std::filesystem::path& path);
void save_table(const InterpretabilityTable& t, const std::filesystem::path& path);

enum class ScoreMode {
    printed,     // published score when the table carries one
    recomputed,  // always the weighted rank/parameter formula
};

/// sum_c R_mc / R_max,c * w_c + P_m / P_max * w_parm, accumulated in criterion order.
double interpretability_score(std::string_view model, const InterpretabilityTable& t);
double model_score(std::string_view model, const InterpretabilityTable& t, ScoreMode mode);

enum class Embedding { count, tfidf, w2v };
enum class Head { vader, bert, lr, nb, svm, nn };

std::string_view embedding_name(Embedding e);  // "Count", "TFIDF", "W2V"
Embedding parse_embedding(std::string_view name);
/// 0.25 / 0.50 / 0.75
double embedding_score(Embedding e);
std::string_view head_name(Head h);  // "VADER", "BERT", "LR", "NB", "SVM", "NN"
Head parse_head(std::string_view name);

struct PipelineSpec {
    std::optional<Embedding> embedding;
    bool sentiment_feature = false;  // external transformer scores appended (the -BS suffix)
    Head head = Head::vader;

    /// Throws ArgumentError when a lexicon/transformer head carries features
    /// or a classifier head lacks an embedding.
    void validate() const;
    /// "VADER", "BERT", "TFIDF+LR", "W2V+NN-BS"
    std::string name() const;
    static PipelineSpec parse(std::string_view name);
    bool is_classifier() const { return embedding.has_value(); }
    bool needs_external_scores() const { return sentiment_feature || head == Head::bert; }

    friend bool operator==(const PipelineSpec&, const PipelineSpec&) = default;
};

struct Constituent {
    std::string name;
    double score = 0.0;
};

struct CiResult {
    PipelineSpec pipeline;
    double ci = 0.0;  // constituents summed in order
    std::vector<Constituent> constituents;
};

/// Sum of embedding, sentiment-feature and head scores, in that order.
CiResult composite_ci(const PipelineSpec& p, const InterpretabilityTable& t, ScoreMode mode = ScoreMode::printed);

/// VADER, BERT and every embedding x classifier pair with and without the sentiment feature.
std::vector<PipelineSpec> all_pipelines();
/// All pipelines sorted by ascending CI, ties by name.
std::vector<CiResult> enumerate_pipelines(const InterpretabilityTable& t, ScoreMode mode = ScoreMode::printed);
void write_enumeration_csv(std::span<const CiResult> results, const std::filesystem::path& path);

struct SurveyResponse {
    std::string expert;
    std::string model;
    std::size_t criterion = 0;  // index into kCriteria
    int rank = 0;
};

/// CSV with header expert_id,model,criterion,rank.
std::vector<SurveyResponse> load_survey(const std::filesystem::path& path);

struct MeanRanks {
    std::string model;
    std::array<double, 3> ranks{};
};

/// Mean rank per (model, criterion), models in first-appearance order.
/// Throws DataError naming the first (model, criterion) without responses.
std::vector<MeanRanks> aggregate_rankings(std::span<const SurveyResponse> survey);
/// Replaces the ranks of the surveyed models, keeping counts and weights.
InterpretabilityTable apply_rankings(InterpretabilityTable t, std::span<const MeanRanks> means);

}  // namespace ratebench::ci
