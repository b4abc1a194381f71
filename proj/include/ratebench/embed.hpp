#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ratebench/matrix.hpp"

namespace ratebench::embed {

/// Term index over a fitted corpus. Terms are stored in lexicographic (byte) order.
class Vocabulary {
public:
    Vocabulary() = default;

    std::size_t size() const { return terms_.size(); }
    std::size_t n_docs() const { return n_docs_; }
    const std::vector<std::string>& terms() const { return terms_; }
    std::span<const std::size_t> document_frequency() const { return df_; }
    std::optional<std::uint32_t> index_of(std::string_view term) const;

    /// Smoothed idf: ln((1 + n_docs) / (1 + df)) + 1.
    double idf(std::size_t index) const;

    static Vocabulary from_parts(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs);

private:
    std::vector<std::string> terms_;
    std::vector<std::size_t> df_;
    std::size_t n_docs_ = 0;
    std::unordered_map<std::string, std::uint32_t> index_;
};

/// Vocabulary of whitespace tokens occurring in at least min_df documents.
/// max_features > 0 keeps only the most frequent terms (ties broken lexicographically).
Vocabulary fit_vocabulary(std::span<const std::string> docs, std::size_t min_df, std::size_t max_features = 0);

/// Document-by-feature matrix with the review id of every row.
struct DocMatrix {
    std::vector<std::string> row_ids;
    CsrMatrix values;

    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
};

DocMatrix count_transform(std::span<const std::string> docs, std::span<const std::string> ids, const Vocabulary& vocab);
/// tf * idf per entry, then every nonzero row scaled to unit L2 norm.
DocMatrix tfidf_transform(std::span<const std::string> docs, std::span<const std::string> ids, const Vocabulary& vocab);

/// CSV with an id column followed by one column per feature index.
void write_doc_matrix_csv(const DocMatrix& m, const std::filesystem::path& path);

struct Word2VecConfig {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025;
    std::size_t min_count = 2;
    std::uint64_t seed = 1;

    friend bool operator==(const Word2VecConfig&, const Word2VecConfig&) = default;
};

/// Word vectors keyed by term; rows of `vectors` follow `terms`.
class WordVectors {
public:
    WordVectors() = default;
    WordVectors(std::vector<std::string> terms, Matrix vectors, Word2VecConfig config);

    std::size_t dimension() const { return vectors_.cols(); }
    std::size_t size() const { return terms_.size(); }
    const std::vector<std::string>& terms() const { return terms_; }
    const Matrix& vectors() const { return vectors_; }
    const Word2VecConfig& config() const { return config_; }
    std::optional<std::span<const double>> find(std::string_view term) const;

    /// Mean skip-gram loss per (center, context) pair for each training epoch.
    std::vector<double> epoch_loss;

private:
    std::vector<std::string> terms_;
    Matrix vectors_;
    Word2VecConfig config_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Skip-gram with negative sampling over whitespace-tokenized docs. Single-threaded and
/// deterministic for a fixed config.seed.
WordVectors train_word2vec(std::span<const std::string> docs, const Word2VecConfig& config);

/// Mean of the vectors of in-vocabulary tokens; zero vector when none are known.
std::vector<double> doc_embed(std::string_view doc, const WordVectors& wv);
DocMatrix doc_embed_matrix(std::span<const std::string> docs, std::span<const std::string> ids, const WordVectors& wv);

/// Text format: "V dim" header, then "term v1 ... vdim" per line.
void save_word_vectors(const WordVectors& wv, const std::filesystem::path& path);
WordVectors load_word_vectors(const std::filesystem::path& path);

}  // namespace ratebench::embed
