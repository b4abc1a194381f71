#include "ratebench/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "ratebench/classify_detail.hpp"
#include "ratebench/error.hpp"

namespace ratebench::classify {

using nlohmann::json;

std::string_view family_name(Family f) {
    switch (f) {
        case Family::logistic: return "LR";
        case Family::naive_bayes: return "NB";
        case Family::svm: return "SVM";
        case Family::mlp: return "NN";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::logistic, Family::naive_bayes, Family::svm, Family::mlp})
        if (family_name(f) == name) return f;
    throw ArgumentError(fmt::format("unknown model family '{}' (expected LR, NB, SVM or NN)", name));
}

void ModelSpec::validate() const {
    const auto require = [&](bool ok, std::string_view what) {
        if (!ok) throw ArgumentError(fmt::format("{}: {}", family_name(family), what));
    };
    switch (family) {
        case Family::logistic:
            require(logistic.l2 >= 0.0, "l2 must be >= 0");
            require(logistic.tol > 0.0, "tol must be > 0");
            require(logistic.max_iters >= 1, "max_iters must be >= 1");
            break;
        case Family::naive_bayes:
            require(bayes.alpha > 0.0, "alpha must be > 0");
            break;
        case Family::svm:
            require(svm.c > 0.0, "C must be > 0");
            require(!svm.gamma || *svm.gamma > 0.0, "gamma must be > 0");
            require(svm.tol > 0.0, "tol must be > 0");
            require(svm.cache_mb >= 1, "cache_mb must be >= 1");
            break;
        case Family::mlp:
            require(mlp.learning_rate > 0.0, "learning_rate must be > 0");
            require(mlp.beta1 >= 0.0 && mlp.beta1 < 1.0, "beta1 must be in [0, 1)");
            require(mlp.beta2 >= 0.0 && mlp.beta2 < 1.0, "beta2 must be in [0, 1)");
            require(mlp.epsilon > 0.0, "epsilon must be > 0");
            require(mlp.batch_size >= 1, "batch_size must be >= 1");
            for (std::size_t h : mlp.hidden) require(h >= 1, "layer sizes must be >= 1");
            break;
    }
}

json ModelSpec::hyperparameters() const {
    switch (family) {
        case Family::logistic:
            return {{"l2", logistic.l2}, {"tol", logistic.tol}, {"max_iters", logistic.max_iters}};
        case Family::naive_bayes:
            return {{"alpha", bayes.alpha}, {"minmax_scale", bayes.minmax_scale}};
        case Family::svm:
            return {{"c", svm.c},
                    {"gamma", svm.gamma ? json(*svm.gamma) : json(nullptr)},
                    {"tol", svm.tol},
                    {"max_iters", svm.max_iters},
                    {"cache_mb", svm.cache_mb}};
        case Family::mlp:
            return {{"hidden", mlp.hidden},         {"learning_rate", mlp.learning_rate},
                    {"beta1", mlp.beta1},           {"beta2", mlp.beta2},
                    {"epsilon", mlp.epsilon},       {"epochs", mlp.epochs},
                    {"batch_size", mlp.batch_size}};
    }
    return json::object();
}

namespace {

template <typename T>
void read_field(const json& obj, std::string_view family, const std::string& key, T& out) {
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("{}.{}: {}", family, key, e.what()));
    }
}

void set_hyperparameters(ModelSpec& spec, Family f, const json& hp) {
    if (!hp.is_object()) throw ConfigError(fmt::format("{}: hyperparameters must be an object", family_name(f)));
    const auto name = family_name(f);
    for (const auto& [key, value] : hp.items()) {
        switch (f) {
            case Family::logistic:
                if (key == "l2") read_field(hp, name, key, spec.logistic.l2);
                else if (key == "tol") read_field(hp, name, key, spec.logistic.tol);
                else if (key == "max_iters") read_field(hp, name, key, spec.logistic.max_iters);
                else throw ConfigError(fmt::format("{}: unknown hyperparameter '{}'", name, key));
                break;
            case Family::naive_bayes:
                if (key == "alpha") read_field(hp, name, key, spec.bayes.alpha);
                else if (key == "minmax_scale") read_field(hp, name, key, spec.bayes.minmax_scale);
                else throw ConfigError(fmt::format("{}: unknown hyperparameter '{}'", name, key));
                break;
            case Family::svm:
                if (key == "c") read_field(hp, name, key, spec.svm.c);
                else if (key == "gamma") {
                    if (value.is_null()) spec.svm.gamma.reset();
                    else {
                        double g = 0.0;
                        read_field(hp, name, key, g);
                        spec.svm.gamma = g;
                    }
                } else if (key == "tol") read_field(hp, name, key, spec.svm.tol);
                else if (key == "max_iters") read_field(hp, name, key, spec.svm.max_iters);
                else if (key == "cache_mb") read_field(hp, name, key, spec.svm.cache_mb);
                else throw ConfigError(fmt::format("{}: unknown hyperparameter '{}'", name, key));
                break;
            case Family::mlp:
                if (key == "hidden") read_field(hp, name, key, spec.mlp.hidden);
                else if (key == "learning_rate") read_field(hp, name, key, spec.mlp.learning_rate);
                else if (key == "beta1") read_field(hp, name, key, spec.mlp.beta1);
                else if (key == "beta2") read_field(hp, name, key, spec.mlp.beta2);
                else if (key == "epsilon") read_field(hp, name, key, spec.mlp.epsilon);
                else if (key == "epochs") read_field(hp, name, key, spec.mlp.epochs);
                else if (key == "batch_size") read_field(hp, name, key, spec.mlp.batch_size);
                else throw ConfigError(fmt::format("{}: unknown hyperparameter '{}'", name, key));
                break;
        }
    }
}

}  // namespace

void ModelSpec::apply_overrides(const json& overrides) {
    if (overrides.is_null()) return;
    if (!overrides.is_object()) throw ConfigError("hyperparameter overrides must be an object keyed by family");
    for (const auto& [key, value] : overrides.items()) {
        Family f;
        try {
            f = parse_family(key);
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what());
        }
        set_hyperparameters(*this, f, value);
    }
}

CompositeFeatures::CompositeFeatures(embed::DocMatrix base, std::optional<std::vector<double>> sentiment)
    : base_(std::move(base)), sentiment_(std::move(sentiment)) {
    if (sentiment_) {
        if (sentiment_->size() != base_.rows())
            throw DataError(fmt::format("sentiment column has {} values for {} rows", sentiment_->size(), base_.rows()));
        matrix_ = base_.values.append_column(*sentiment_);
    } else {
        matrix_ = base_.values;
    }
}

CompositeFeatures assemble_features(embed::DocMatrix base,
                                    std::optional<std::span<const sentiment::SentimentScore>> scores) {
    if (!scores) return CompositeFeatures(std::move(base), std::nullopt);
    if (scores->size() != base.rows())
        throw DataError(fmt::format("{} sentiment scores for {} feature rows", scores->size(), base.rows()));
    std::vector<double> column;
    column.reserve(scores->size());
    for (std::size_t r = 0; r < scores->size(); ++r) {
        const auto& s = (*scores)[r];
        if (s.review_id != base.row_ids[r])
            throw DataError(fmt::format("row {}: feature id '{}' but sentiment id '{}'", r, base.row_ids[r], s.review_id));
        column.push_back(s.stars_real);
    }
    return CompositeFeatures(std::move(base), std::move(column));
}

namespace detail {

LabelIndex index_labels(std::span<const int> y) {
    LabelIndex li;
    for (int v : y)
        if (v < 1 || v > 5) throw DataError(fmt::format("label {} outside 1..5", v));
    li.classes.assign(y.begin(), y.end());
    std::sort(li.classes.begin(), li.classes.end());
    li.classes.erase(std::unique(li.classes.begin(), li.classes.end()), li.classes.end());
    if (li.classes.size() < 2) throw DataError("training labels contain fewer than two classes");
    li.index.reserve(y.size());
    for (int v : y)
        li.index.push_back(static_cast<std::size_t>(
            std::lower_bound(li.classes.begin(), li.classes.end(), v) - li.classes.begin()));
    return li;
}

}  // namespace detail

FittedModel::FittedModel(ModelSpec spec, std::vector<int> classes, std::size_t feature_dim, Params params,
                         TrainingReport report)
    : spec_(std::move(spec)),
      classes_(std::move(classes)),
      feature_dim_(feature_dim),
      params_(std::move(params)),
      report_(std::move(report)) {}

namespace {

void check_finite(const CsrMatrix& x) {
    for (double v : x.values())
        if (!std::isfinite(v)) throw DataError("features contain NaN or infinite values");
}

SvmModel fit_svm(const CsrMatrix& x, std::span<const std::size_t> y, std::size_t n_classes, const SvmParams& p,
                 TrainingReport& report) {
    SvmModel model;
    model.gamma = p.gamma ? *p.gamma : detail::default_gamma(x);
    detail::KernelCache cache(x, model.gamma, p.cache_mb * 1024 * 1024);
    std::vector<detail::SmoResult> results;
    std::vector<std::int8_t> yb(x.rows());
    report = {};
    report.converged = true;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t r = 0; r < x.rows(); ++r) yb[r] = y[r] == c ? 1 : -1;
        results.push_back(detail::solve_smo(cache, yb, p.c, p.tol, p.max_iters));
        const auto& res = results.back();
        report.iterations += res.iterations;
        report.converged = report.converged && res.converged;
        report.final_measure = std::max(report.final_measure, res.gap);
    }
    std::vector<std::int64_t> pool_index(x.rows(), -1);
    std::vector<std::size_t> pool_rows;
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (const auto& res : results)
            if (res.alpha[r] > 0.0) {
                pool_index[r] = static_cast<std::int64_t>(pool_rows.size());
                pool_rows.push_back(r);
                break;
            }
    model.support_vectors = x.select_rows(pool_rows);
    for (std::size_t c = 0; c < n_classes; ++c) {
        SvmModel::Binary b;
        b.rho = results[c].rho;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double a = results[c].alpha[r];
            if (a > 0.0) {
                b.sv.push_back(static_cast<std::uint32_t>(pool_index[r]));
                b.coef.push_back(y[r] == c ? a : -a);
            }
        }
        model.binaries.push_back(std::move(b));
    }
    return model;
}

}  // namespace

FittedModel train(const ModelSpec& spec, const CsrMatrix& x, std::span<const int> y) {
    spec.validate();
    if (x.rows() != y.size())
        throw DataError(fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
    check_finite(x);
    const auto labels = detail::index_labels(y);
    const std::size_t k = labels.classes.size();
    TrainingReport report;
    FittedModel::Params params;
    switch (spec.family) {
        case Family::logistic:
            params = detail::fit_logistic(x, labels.index, k, spec.logistic, report);
            break;
        case Family::naive_bayes:
            params = detail::fit_naive_bayes(x, labels.index, k, spec.bayes);
            break;
        case Family::svm:
            params = fit_svm(x, labels.index, k, spec.svm, report);
            break;
        case Family::mlp:
            params = detail::fit_mlp(x, labels.index, k, spec.mlp, spec.seed, report);
            break;
    }
    return FittedModel(spec, labels.classes, x.cols(), std::move(params), std::move(report));
}

FittedModel train(const ModelSpec& spec, const CompositeFeatures& x, std::span<const int> y) {
    return train(spec, x.matrix(), y);
}

Matrix decision_scores(const FittedModel& m, const CsrMatrix& x) {
    if (x.cols() != m.feature_dimension())
        throw ArgumentError(
            fmt::format("model expects {} features but input has {}", m.feature_dimension(), x.cols()));
    check_finite(x);
    switch (m.family()) {
        case Family::logistic: return detail::logistic_proba(m.as<LogisticModel>(), x);
        case Family::naive_bayes: {
            Matrix p = detail::naive_bayes_log_posterior(m.as<NaiveBayesModel>(), x);
            for (double& v : p.values()) v = std::exp(v);
            return p;
        }
        case Family::svm: return detail::svm_margins(m.as<SvmModel>(), x);
        case Family::mlp: return detail::mlp_proba(m.as<MlpModel>(), x);
    }
    return {};
}

std::size_t argmax(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
        if (row[k] > row[best]) best = k;
    return best;
}

std::vector<int> predict(const FittedModel& m, const CsrMatrix& x) {
    const Matrix s = decision_scores(m, x);
    std::vector<int> out;
    out.reserve(s.rows());
    for (std::size_t r = 0; r < s.rows(); ++r) out.push_back(m.classes()[argmax(s.row(r))]);
    return out;
}

Matrix predict_proba(const FittedModel& m, const CsrMatrix& x) {
    Matrix s = decision_scores(m, x);
    if (m.family() == Family::svm) detail::softmax_rows(s);
    return s;
}

std::size_t parameter_count(const FittedModel& m) {
    const std::size_t d = m.feature_dimension();
    const std::size_t k = m.classes().size();
    switch (m.family()) {
        case Family::logistic:
        case Family::naive_bayes: return d * k + k;
        case Family::svm: {
            std::size_t n = 0;
            for (const auto& b : m.as<SvmModel>().binaries) n += b.sv.size() * (d + 1);
            return n + m.as<SvmModel>().binaries.size();
        }
        case Family::mlp: {
            std::size_t n = 0;
            const auto& net = m.as<MlpModel>();
            for (std::size_t l = 0; l < net.weights.size(); ++l)
                n += net.weights[l].rows() * net.weights[l].cols() + net.biases[l].size();
            return n;
        }
    }
    return 0;
}

namespace {

constexpr int kFormatVersion = 1;

json matrix_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.values().size()) throw FormatError("matrix data length does not match its shape");
    std::copy(data.begin(), data.end(), m.values().begin());
    return m;
}

json csr_json(const CsrMatrix& m) {
    return {{"cols", m.cols()},
            {"row_ptr", std::vector<std::size_t>(m.row_ptr().begin(), m.row_ptr().end())},
            {"col_idx", std::vector<std::uint32_t>(m.col_idx().begin(), m.col_idx().end())},
            {"values", std::vector<double>(m.values().begin(), m.values().end())}};
}

CsrMatrix csr_from(const json& j) {
    CsrMatrix m(j.at("cols").get<std::size_t>());
    const auto ptr = j.at("row_ptr").get<std::vector<std::size_t>>();
    const auto cols = j.at("col_idx").get<std::vector<std::uint32_t>>();
    const auto vals = j.at("values").get<std::vector<double>>();
    if (ptr.empty() || ptr.front() != 0 || ptr.back() != cols.size() || cols.size() != vals.size())
        throw FormatError("malformed sparse matrix");
    for (std::size_t r = 0; r + 1 < ptr.size(); ++r) {
        if (ptr[r + 1] < ptr[r]) throw FormatError("malformed sparse matrix");
        m.push_row(std::span(cols).subspan(ptr[r], ptr[r + 1] - ptr[r]),
                   std::span(vals).subspan(ptr[r], ptr[r + 1] - ptr[r]));
    }
    return m;
}

json params_json(const FittedModel& m) {
    switch (m.family()) {
        case Family::logistic: {
            const auto& p = m.as<LogisticModel>();
            return {{"weights", matrix_json(p.weights)}, {"bias", p.bias}};
        }
        case Family::naive_bayes: {
            const auto& p = m.as<NaiveBayesModel>();
            return {{"class_log_prior", p.class_log_prior},
                    {"feature_log_prob", matrix_json(p.feature_log_prob)},
                    {"feature_min", p.feature_min},
                    {"feature_range", p.feature_range}};
        }
        case Family::svm: {
            const auto& p = m.as<SvmModel>();
            json bins = json::array();
            for (const auto& b : p.binaries) bins.push_back({{"sv", b.sv}, {"coef", b.coef}, {"rho", b.rho}});
            return {{"gamma", p.gamma}, {"support_vectors", csr_json(p.support_vectors)}, {"binaries", bins}};
        }
        case Family::mlp: {
            const auto& p = m.as<MlpModel>();
            json layers = json::array();
            for (std::size_t l = 0; l < p.weights.size(); ++l)
                layers.push_back({{"weights", matrix_json(p.weights[l])}, {"bias", p.biases[l]}});
            return {{"layers", layers}};
        }
    }
    return {};
}

FittedModel::Params params_from(Family f, const json& j) {
    switch (f) {
        case Family::logistic:
            return LogisticModel{matrix_from(j.at("weights")), j.at("bias").get<std::vector<double>>()};
        case Family::naive_bayes:
            return NaiveBayesModel{j.at("class_log_prior").get<std::vector<double>>(),
                                   matrix_from(j.at("feature_log_prob")),
                                   j.at("feature_min").get<std::vector<double>>(),
                                   j.at("feature_range").get<std::vector<double>>()};
        case Family::svm: {
            SvmModel p;
            p.gamma = j.at("gamma").get<double>();
            p.support_vectors = csr_from(j.at("support_vectors"));
            for (const auto& b : j.at("binaries"))
                p.binaries.push_back({b.at("sv").get<std::vector<std::uint32_t>>(),
                                      b.at("coef").get<std::vector<double>>(), b.at("rho").get<double>()});
            return p;
        }
        case Family::mlp: {
            MlpModel p;
            for (const auto& layer : j.at("layers")) {
                p.weights.push_back(matrix_from(layer.at("weights")));
                p.biases.push_back(layer.at("bias").get<std::vector<double>>());
            }
            return p;
        }
    }
    throw FormatError("unknown family");
}

}  // namespace

json to_json(const FittedModel& m) {
    const auto& r = m.report();
    return {{"format", "ratebench-model"},
            {"version", kFormatVersion},
            {"family", family_name(m.family())},
            {"seed", m.spec().seed},
            {"hyperparameters", m.spec().hyperparameters()},
            {"classes", m.classes()},
            {"feature_dim", m.feature_dimension()},
            {"params", params_json(m)},
            {"training",
             {{"loss_history", r.loss_history},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"final_measure", r.final_measure}}}};
}

FittedModel from_json(const json& doc) {
    try {
        if (doc.at("format") != "ratebench-model") throw FormatError("not a ratebench model document");
        if (doc.at("version") != kFormatVersion)
            throw FormatError(fmt::format("unsupported model version {}", doc.at("version").dump()));
        ModelSpec spec;
        spec.family = parse_family(doc.at("family").get<std::string>());
        spec.seed = doc.at("seed").get<std::uint64_t>();
        set_hyperparameters(spec, spec.family, doc.at("hyperparameters"));
        TrainingReport report;
        const auto& t = doc.at("training");
        report.loss_history = t.at("loss_history").get<std::vector<double>>();
        report.iterations = t.at("iterations").get<std::size_t>();
        report.converged = t.at("converged").get<bool>();
        report.final_measure = t.at("final_measure").get<double>();
        return FittedModel(spec, doc.at("classes").get<std::vector<int>>(), doc.at("feature_dim").get<std::size_t>(),
                           params_from(spec.family, doc.at("params")), std::move(report));
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("model document: {}", e.what()));
    } catch (const ArgumentError& e) {
        throw FormatError(fmt::format("model document: {}", e.what()));
    } catch (const ConfigError& e) {
        throw FormatError(fmt::format("model document: {}", e.what()));
    }
}

void save_model(const FittedModel& m, const std::filesystem::path& path) {
    const json doc = to_json(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    if (path.extension() == ".json") {
        out << doc.dump() << '\n';
    } else {
        const auto bytes = json::to_cbor(doc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

FittedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        const json doc = path.extension() == ".json" ? json::parse(bytes) : json::from_cbor(bytes);
        return from_json(doc);
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

}  // namespace ratebench::classify
