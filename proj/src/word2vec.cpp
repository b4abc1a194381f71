#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>

#include "ratebench/corpus.hpp"
#include "ratebench/embed.hpp"
#include "ratebench/error.hpp"
#include "ratebench/random.hpp"

namespace ratebench::embed {

WordVectors::WordVectors(std::vector<std::string> terms, Matrix vectors, Word2VecConfig config)
    : terms_(std::move(terms)), vectors_(std::move(vectors)), config_(config) {
    if (terms_.size() != vectors_.rows()) throw ArgumentError("word vectors: term count does not match rows");
    config_.dim = vectors_.cols();
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!index_.emplace(terms_[i], i).second) throw FormatError("word vectors: duplicate term " + terms_[i]);
        for (double v : vectors_.row(i))
            if (!std::isfinite(v)) throw FormatError("word vectors: non-finite entry for " + terms_[i]);
    }
}

std::optional<std::span<const double>> WordVectors::find(std::string_view term) const {
    const auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return vectors_.row(it->second);
}

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow
double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

// Draws term indices with probability proportional to count^0.75.
class NoiseDistribution {
public:
    explicit NoiseDistribution(std::span<const std::size_t> counts) {
        cumulative_.reserve(counts.size());
        double total = 0.0;
        for (auto c : counts) {
            total += std::pow(static_cast<double>(c), 0.75);
            cumulative_.push_back(total);
        }
    }

    std::size_t draw(Rng& rng) const {
        const double u = rng.uniform01() * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
    }

private:
    std::vector<double> cumulative_;
};

}  // namespace

WordVectors train_word2vec(std::span<const std::string> docs, const Word2VecConfig& config) {
    if (config.dim == 0 || config.window == 0 || config.epochs == 0 || !(config.learning_rate > 0.0))
        throw ArgumentError("word2vec: dim, window, epochs and learning rate must be positive");
    if (docs.empty()) throw DataError("word2vec: empty corpus");

    std::map<std::string, std::size_t, std::less<>> counts;
    std::size_t total_tokens = 0;
    for (const auto& doc : docs) {
        for (auto tok : corpus::tokens(doc)) {
            auto it = counts.find(tok);
            if (it == counts.end()) it = counts.emplace(std::string(tok), 0).first;
            ++it->second;
            ++total_tokens;
        }
    }
    if (total_tokens == 0) throw DataError("word2vec: corpus has no tokens");
    if (total_tokens < config.window) throw DataError("word2vec: corpus has fewer tokens than the window size");

    std::vector<std::string> terms;
    std::vector<std::size_t> term_counts;
    std::unordered_map<std::string_view, std::uint32_t> index;
    for (const auto& [term, count] : counts) {
        if (count < std::max<std::size_t>(config.min_count, 1)) continue;
        terms.push_back(term);
        term_counts.push_back(count);
    }
    if (terms.empty()) throw DataError("word2vec: no term reaches min_count");
    for (std::size_t i = 0; i < terms.size(); ++i) index.emplace(terms[i], static_cast<std::uint32_t>(i));

    std::vector<std::vector<std::uint32_t>> sentences;
    sentences.reserve(docs.size());
    std::size_t stream_length = 0;
    for (const auto& doc : docs) {
        std::vector<std::uint32_t> ids;
        for (auto tok : corpus::tokens(doc))
            if (auto it = index.find(tok); it != index.end()) ids.push_back(it->second);
        stream_length += ids.size();
        sentences.push_back(std::move(ids));
    }

    const std::size_t dim = config.dim;
    Rng rng(config.seed);
    Matrix input(terms.size(), dim);
    for (double& v : input.values()) v = (rng.uniform01() - 0.5) / static_cast<double>(dim);
    Matrix output(terms.size(), dim);
    const NoiseDistribution noise(term_counts);

    const double total_steps = static_cast<double>(config.epochs * std::max<std::size_t>(stream_length, 1));
    double steps_done = 0.0;
    std::vector<double> grad_center(dim);
    std::vector<double> epoch_loss;
    const auto window = static_cast<std::ptrdiff_t>(config.window);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::size_t pairs = 0;
        for (const auto& sent : sentences) {
            const auto len = static_cast<std::ptrdiff_t>(sent.size());
            for (std::ptrdiff_t t = 0; t < len; ++t) {
                const double lr = config.learning_rate * std::max(1e-4, 1.0 - steps_done / total_steps);
                steps_done += 1.0;
                const std::uint32_t center = sent[static_cast<std::size_t>(t)];
                auto v_center = input.row(center);
                for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(0, t - window);
                     c <= std::min<std::ptrdiff_t>(len - 1, t + window); ++c) {
                    if (c == t) continue;
                    const std::uint32_t context = sent[static_cast<std::size_t>(c)];
                    std::fill(grad_center.begin(), grad_center.end(), 0.0);
                    double pair_loss = 0.0;
                    for (std::size_t k = 0; k <= config.negatives; ++k) {
                        std::size_t target = context;
                        double label = 1.0;
                        if (k > 0) {
                            target = noise.draw(rng);
                            if (target == context) continue;
                            label = 0.0;
                        }
                        auto u = output.row(target);
                        double dot = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) dot += v_center[d] * u[d];
                        pair_loss -= label > 0.0 ? log_sigmoid(dot) : log_sigmoid(-dot);
                        const double g = (label - sigmoid(dot)) * lr;
                        for (std::size_t d = 0; d < dim; ++d) {
                            grad_center[d] += g * u[d];
                            u[d] += g * v_center[d];
                        }
                    }
                    for (std::size_t d = 0; d < dim; ++d) v_center[d] += grad_center[d];
                    loss_sum += pair_loss;
                    ++pairs;
                }
            }
        }
        epoch_loss.push_back(pairs ? loss_sum / static_cast<double>(pairs) : 0.0);
    }

    WordVectors wv(std::move(terms), std::move(input), config);
    wv.epoch_loss = std::move(epoch_loss);
    return wv;
}

std::vector<double> doc_embed(std::string_view doc, const WordVectors& wv) {
    std::vector<double> mean(wv.dimension(), 0.0);
    std::size_t known = 0;
    for (auto tok : corpus::tokens(doc)) {
        const auto vec = wv.find(tok);
        if (!vec) continue;
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += (*vec)[d];
        ++known;
    }
    if (known > 0)
        for (double& v : mean) v /= static_cast<double>(known);
    return mean;
}

DocMatrix doc_embed_matrix(std::span<const std::string> docs, std::span<const std::string> ids,
                           const WordVectors& wv) {
    if (docs.size() != ids.size()) throw ArgumentError("documents and ids differ in length");
    DocMatrix out{{ids.begin(), ids.end()}, CsrMatrix(wv.dimension())};
    for (const auto& doc : docs) out.values.push_dense_row(doc_embed(doc, wv));
    return out;
}

void save_word_vectors(const WordVectors& wv, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << wv.size() << ' ' << wv.dimension() << '\n';
    for (std::size_t i = 0; i < wv.size(); ++i) {
        out << wv.terms()[i];
        for (double v : wv.vectors().row(i)) out << ' ' << fmt::format("{}", v);
        out << '\n';
    }
    if (!out) throw IoError("error while writing " + path.string());
}

WordVectors load_word_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word vectors " + path.string());
    std::size_t n = 0;
    std::size_t dim = 0;
    std::string header;
    if (!std::getline(in, header)) throw FormatError(path.string() + ": missing header");
    {
        std::istringstream hs(header);
        if (!(hs >> n >> dim) || dim == 0) throw FormatError(path.string() + ": header must be \"V dim\"");
    }
    std::vector<std::string> terms;
    Matrix vectors(n, dim);
    std::string line;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw FormatError(fmt::format("{}: expected {} vectors, got {}", path.string(), n, i));
        std::istringstream ls(line);
        std::string term;
        ls >> term;
        for (std::size_t d = 0; d < dim; ++d) {
            std::string tok;
            if (!(ls >> tok)) throw FormatError(fmt::format("{}:{}: too few values", path.string(), i + 2));
            try {
                vectors(i, d) = std::stod(tok);
            } catch (const std::exception&) {
                throw FormatError(fmt::format("{}:{}: bad number '{}'", path.string(), i + 2, tok));
            }
        }
        terms.push_back(std::move(term));
    }
    Word2VecConfig cfg;
    cfg.dim = dim;
    return WordVectors(std::move(terms), std::move(vectors), cfg);
}

}  // namespace ratebench::embed
