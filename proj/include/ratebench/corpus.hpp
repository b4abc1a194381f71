#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace ratebench::corpus {

inline constexpr int kMinStars = 1;
inline constexpr int kMaxStars = 5;
inline constexpr int kNumClasses = kMaxStars - kMinStars + 1;

struct Review {
    std::string id;
    std::string text;   // raw text as ingested; sentiment rules read this
    std::string clean;  // preprocess(text); embeddings read this
    int rating = 0;

    friend bool operator==(const Review&, const Review&) = default;
};

struct Dataset {
    std::string name;
    std::vector<Review> reviews;

    std::size_t size() const { return reviews.size(); }
    bool empty() const { return reviews.empty(); }
    /// Number of reviews per star, index 0 holding one-star reviews.
    std::array<std::size_t, kNumClasses> class_counts() const;
};

struct LoadResult {
    Dataset dataset;
    std::size_t skipped = 0;       // missing text, bad or out-of-range rating, malformed JSON
    std::size_t over_limit = 0;    // valid records dropped by the per-class cap
};

using StopwordSet = std::unordered_set<std::string>;

/// Parses an Amazon-style JSONL dump (`reviewText`, `overall`). Ids come from an
/// `id` field when present, otherwise `<asin>#<line>` or `#<line>`.
/// limit_per_class == 0 means no cap.
LoadResult load_reviews(const std::filesystem::path& path, std::size_t limit_per_class);

/// Unicode lowercase, drop everything but letters, digits and whitespace,
/// remove stopword tokens and join with single spaces.
std::string preprocess(std::string_view text, const StopwordSet& stopwords);

/// One word per line; entries go through the same character filter as preprocess.
StopwordSet load_stopwords(const std::filesystem::path& path);

/// Fills Review::clean for every review.
void clean_dataset(Dataset& ds, const StopwordSet& stopwords);

/// Exactly per_class reviews per star chosen by a seeded shuffle; output keeps input order.
Dataset balanced_sample(const Dataset& ds, std::size_t per_class, std::uint64_t seed);

struct SplitIndex {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;

    friend bool operator==(const SplitIndex&, const SplitIndex&) = default;
};

/// Per-class stratified split; each class contributes round(n_c * test_fraction) test items.
/// Both id lists follow dataset order.
SplitIndex stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Splits the dataset into its train and test halves, in dataset order.
std::pair<Dataset, Dataset> apply_split(const Dataset& ds, const SplitIndex& split);

// Canonical files: JSONL of reviews and a JSON split document.
void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& ds);
void write_split(const SplitIndex& split, const std::filesystem::path& path);
SplitIndex read_split(const std::filesystem::path& path);
std::string serialize_split(const SplitIndex& split);

/// Whitespace tokenization of already-cleaned text.
std::vector<std::string_view> tokens(std::string_view clean_text);

}  // namespace ratebench::corpus
