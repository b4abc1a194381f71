#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ratebench/embed.hpp"
#include "ratebench/matrix.hpp"
#include "ratebench/sentiment.hpp"

namespace ratebench::classify {

enum class Family { logistic, naive_bayes, svm, mlp };

/// "LR", "NB", "SVM", "NN"
std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// Multinomial softmax regression, full-batch gradient descent with backtracking.
struct LogisticParams {
    double l2 = 1e-4;
    double tol = 1e-6;  // stop once the gradient norm falls below this
    std::size_t max_iters = 5000;
};

struct NaiveBayesParams {
    double alpha = 1.0;         // Laplace smoothing
    bool minmax_scale = false;  // rescale each feature to [0, 1] before counting
};

/// One-vs-rest RBF SVM trained with SMO.
struct SvmParams {
    double c = 1.0;
    std::optional<double> gamma;  // unset: 1 / (d * Var(X))
    double tol = 1e-3;
    std::size_t max_iters = 10000;
    std::size_t cache_mb = 256;
};

/// Fully connected ReLU network with a softmax head, trained with Adam.
struct MlpParams {
    std::vector<std::size_t> hidden{512, 128};
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
};

struct ModelSpec {
    Family family = Family::logistic;
    LogisticParams logistic;
    NaiveBayesParams bayes;
    SvmParams svm;
    MlpParams mlp;
    std::uint64_t seed = 0;

    /// Throws ArgumentError when the active family's hyperparameters are out of range.
    void validate() const;
    /// Hyperparameters of the active family only.
    nlohmann::json hyperparameters() const;
    /// Overrides keyed by family name, e.g. {"NN": {"epochs": 5}}.
    void apply_overrides(const nlohmann::json& overrides);
};

/// Embedding rows with an optional appended sentiment column (the *-BS models).
class CompositeFeatures {
public:
    CompositeFeatures(embed::DocMatrix base, std::optional<std::vector<double>> sentiment);

    const embed::DocMatrix& base() const { return base_; }
    const std::optional<std::vector<double>>& sentiment() const { return sentiment_; }
    const CsrMatrix& matrix() const { return matrix_; }
    std::size_t rows() const { return matrix_.rows(); }
    std::size_t cols() const { return matrix_.cols(); }

private:
    embed::DocMatrix base_;
    std::optional<std::vector<double>> sentiment_;
    CsrMatrix matrix_;
};

/// Appends the raw star value of each score; ids must match row order.
CompositeFeatures assemble_features(embed::DocMatrix base,
                                    std::optional<std::span<const sentiment::SentimentScore>> scores);

struct LogisticModel {
    Matrix weights;  // d x K
    std::vector<double> bias;
};

struct NaiveBayesModel {
    std::vector<double> class_log_prior;  // K
    Matrix feature_log_prob;              // K x d
    // min-max scaling, empty when disabled
    std::vector<double> feature_min;
    std::vector<double> feature_range;
};

struct SvmModel {
    double gamma = 1.0;
    CsrMatrix support_vectors;  // union over the one-vs-rest problems
    struct Binary {
        std::vector<std::uint32_t> sv;  // rows of support_vectors
        std::vector<double> coef;       // alpha_i * y_i
        double rho = 0.0;
    };
    std::vector<Binary> binaries;  // one per class
};

struct MlpModel {
    std::vector<Matrix> weights;  // in x out per layer
    std::vector<std::vector<double>> biases;
};

struct TrainingReport {
    std::vector<double> loss_history;  // LR: per iteration; NN: at init then per epoch
    std::size_t iterations = 0;
    bool converged = true;
    double final_measure = 0.0;  // LR gradient norm, SVM worst KKT gap
};

class FittedModel {
public:
    using Params = std::variant<LogisticModel, NaiveBayesModel, SvmModel, MlpModel>;

    FittedModel(ModelSpec spec, std::vector<int> classes, std::size_t feature_dim, Params params,
                TrainingReport report = {});

    Family family() const { return spec_.family; }
    const ModelSpec& spec() const { return spec_; }
    const std::vector<int>& classes() const { return classes_; }
    std::size_t feature_dimension() const { return feature_dim_; }
    const Params& params() const { return params_; }
    const TrainingReport& report() const { return report_; }

    template <typename T>
    const T& as() const {
        return std::get<T>(params_);
    }

private:
    ModelSpec spec_;
    std::vector<int> classes_;
    std::size_t feature_dim_ = 0;
    Params params_;
    TrainingReport report_;
};

FittedModel train(const ModelSpec& spec, const CsrMatrix& x, std::span<const int> y);
FittedModel train(const ModelSpec& spec, const CompositeFeatures& x, std::span<const int> y);

/// Per-class scores whose row-wise argmax is the prediction (probabilities,
/// except SVM where they are one-vs-rest margins).
Matrix decision_scores(const FittedModel& m, const CsrMatrix& x);
/// Argmax label per row; ties go to the lowest class label.
std::vector<int> predict(const FittedModel& m, const CsrMatrix& x);
/// Row-stochastic class probabilities (SVM: softmax of the margins).
Matrix predict_proba(const FittedModel& m, const CsrMatrix& x);
/// Learned scalar count of the fitted model.
std::size_t parameter_count(const FittedModel& m);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> row);

nlohmann::json to_json(const FittedModel& m);
FittedModel from_json(const nlohmann::json& doc);
/// ".json" writes text JSON; any other extension writes CBOR.
void save_model(const FittedModel& m, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace ratebench::classify
