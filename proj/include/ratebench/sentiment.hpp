#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ratebench/corpus.hpp"

namespace ratebench::sentiment {

/// Rule constants of the lexicon engine.
struct RuleConstants {
    double booster_increment = 0.293;
    double caps_increment = 0.733;
    double negation_scalar = -0.74;
    double exclamation_increment = 0.292;
    std::size_t max_exclamations = 4;
    double question_increment = 0.18;
    double question_cap = 0.96;
    double but_before_weight = 0.5;
    double but_after_weight = 1.5;
    double never_so_weight = 1.25;
    double alpha = 15.0;
};

class SentimentLexicon {
public:
    /// Valences from `path`; boosters, negations and phrase tables use the built-in English lists.
    static SentimentLexicon load(const std::filesystem::path& path);
    static SentimentLexicon from_valences(std::unordered_map<std::string, double> valences);

    std::optional<double> valence(std::string_view lower_term) const;
    bool contains(std::string_view lower_term) const { return valence(lower_term).has_value(); }
    std::optional<double> booster(std::string_view lower_term) const;
    bool is_negation(std::string_view lower_term) const;
    std::optional<double> special_phrase(std::string_view lower_phrase) const;

    std::size_t size() const { return valences_.size(); }
    RuleConstants rules;

private:
    std::unordered_map<std::string, double> valences_;
    std::unordered_map<std::string, double> boosters_;
    std::unordered_set<std::string> negations_;
    std::unordered_map<std::string, double> special_phrases_;

    void install_default_tables();
};

enum class ScoreSource { rule_based, external };

struct SentimentScore {
    std::string review_id;
    double compound = 0.0;    // [-1, 1]
    double stars_real = 3.0;  // [1, 5]
    ScoreSource source = ScoreSource::rule_based;
};

/// Normalized valence in [-1, 1] of raw (uncleaned) text.
double compound_score(std::string_view text, const SentimentLexicon& lexicon);

/// Affine map [-1, 1] -> [1, 5]. Throws ArgumentError outside [-1, 1].
double rescale_to_stars(double compound);
/// round-half-up then clamp to [1, 5].
int star_class(double stars_real);

SentimentScore score_review(const corpus::Review& review, const SentimentLexicon& lexicon);

struct ExternalScoreFile {
    std::unordered_map<std::string, int> stars;
    std::vector<std::string> order;  // ids in file order
    std::string model_tag;
};

/// CSV `review_id,stars[,confidence]` with a header row.
ExternalScoreFile load_external_scores(const std::filesystem::path& path);

/// Per-review scores aligned with dataset order. Every id must be covered.
std::vector<SentimentScore> join_scores(const corpus::Dataset& ds, const ExternalScoreFile& scores);

}  // namespace ratebench::sentiment
