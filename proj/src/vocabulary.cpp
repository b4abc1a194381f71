#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/core.h>

#include "ratebench/corpus.hpp"
#include "ratebench/embed.hpp"
#include "ratebench/error.hpp"

namespace ratebench::embed {

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view term) const {
    const auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double Vocabulary::idf(std::size_t index) const {
    return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df_.at(index)))) + 1.0;
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs) {
    if (terms.size() != df.size()) throw ArgumentError("vocabulary: terms and df differ in length");
    Vocabulary v;
    v.terms_ = std::move(terms);
    v.df_ = std::move(df);
    v.n_docs_ = n_docs;
    for (std::size_t i = 0; i < v.terms_.size(); ++i) {
        if (v.df_[i] > n_docs) throw ArgumentError("vocabulary: df exceeds document count for " + v.terms_[i]);
        if (!v.index_.emplace(v.terms_[i], static_cast<std::uint32_t>(i)).second)
            throw ArgumentError("vocabulary: duplicate term " + v.terms_[i]);
    }
    return v;
}

Vocabulary fit_vocabulary(std::span<const std::string> docs, std::size_t min_df, std::size_t max_features) {
    if (docs.empty()) throw DataError("cannot fit a vocabulary on an empty corpus");
    std::map<std::string, std::size_t, std::less<>> df;
    std::vector<std::string_view> seen;
    for (const auto& doc : docs) {
        seen = corpus::tokens(doc);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto tok : seen) {
            auto it = df.find(tok);
            if (it == df.end()) it = df.emplace(std::string(tok), 0).first;
            ++it->second;
        }
    }

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [term, count] : df)
        if (count >= std::max<std::size_t>(min_df, 1)) kept.emplace_back(term, count);

    if (max_features > 0 && kept.size() > max_features) {
        std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        kept.resize(max_features);
        std::sort(kept.begin(), kept.end());
    }

    std::vector<std::string> terms;
    std::vector<std::size_t> counts;
    terms.reserve(kept.size());
    counts.reserve(kept.size());
    for (auto& [term, count] : kept) {
        terms.push_back(std::move(term));
        counts.push_back(count);
    }
    return Vocabulary::from_parts(std::move(terms), std::move(counts), docs.size());
}

namespace {

// Sorted (index, count) pairs of in-vocabulary tokens.
void count_row(std::string_view doc, const Vocabulary& vocab, std::vector<std::uint32_t>& cols,
               std::vector<double>& values) {
    std::vector<std::uint32_t> hits;
    for (auto tok : corpus::tokens(doc))
        if (auto idx = vocab.index_of(tok)) hits.push_back(*idx);
    std::sort(hits.begin(), hits.end());
    cols.clear();
    values.clear();
    for (std::size_t k = 0; k < hits.size();) {
        std::size_t e = k;
        while (e < hits.size() && hits[e] == hits[k]) ++e;
        cols.push_back(hits[k]);
        values.push_back(static_cast<double>(e - k));
        k = e;
    }
}

void check_ids(std::span<const std::string> docs, std::span<const std::string> ids) {
    if (docs.size() != ids.size()) throw ArgumentError("documents and ids differ in length");
}

}  // namespace

DocMatrix count_transform(std::span<const std::string> docs, std::span<const std::string> ids,
                          const Vocabulary& vocab) {
    check_ids(docs, ids);
    DocMatrix out{{ids.begin(), ids.end()}, CsrMatrix(vocab.size())};
    std::vector<std::uint32_t> cols;
    std::vector<double> values;
    for (const auto& doc : docs) {
        count_row(doc, vocab, cols, values);
        out.values.push_row(cols, values);
    }
    return out;
}

DocMatrix tfidf_transform(std::span<const std::string> docs, std::span<const std::string> ids,
                          const Vocabulary& vocab) {
    check_ids(docs, ids);
    std::vector<double> idf(vocab.size());
    for (std::size_t t = 0; t < idf.size(); ++t) idf[t] = vocab.idf(t);

    DocMatrix out{{ids.begin(), ids.end()}, CsrMatrix(vocab.size())};
    std::vector<std::uint32_t> cols;
    std::vector<double> values;
    for (const auto& doc : docs) {
        count_row(doc, vocab, cols, values);
        double sq = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            values[k] *= idf[cols[k]];
            sq += values[k] * values[k];
        }
        if (sq > 0.0) {
            const double norm = std::sqrt(sq);
            for (double& v : values) v /= norm;
        }
        out.values.push_row(cols, values);
    }
    return out;
}

void write_doc_matrix_csv(const DocMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "id";
    for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << c;
    out << '\n';
    std::vector<double> dense(m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::fill(dense.begin(), dense.end(), 0.0);
        const auto rv = m.values.row(r);
        for (std::size_t k = 0; k < rv.size(); ++k) dense[rv.cols[k]] = rv.values[k];
        out << m.row_ids[r];
        for (double v : dense) out << ',' << fmt::format("{}", v);
        out << '\n';
    }
    if (!out) throw IoError("error while writing " + path.string());
}

}  // namespace ratebench::embed
