#include <algorithm>
#include <cmath>

#include "ratebench/classify_detail.hpp"
#include "ratebench/error.hpp"

namespace ratebench::classify::detail {

namespace {

// Applies the stored min-max transform, clipping to [0, 1] so unseen
// extremes never produce negative pseudo-counts.
CsrMatrix scale_features(const NaiveBayesModel& m, const CsrMatrix& x) {
    if (m.feature_min.empty()) return x;
    const std::size_t d = x.cols();
    std::vector<std::uint32_t> offset_cols;  // columns whose zero maps to a nonzero value
    for (std::size_t j = 0; j < d; ++j)
        if (m.feature_min[j] != 0.0 && m.feature_range[j] > 0.0) offset_cols.push_back(static_cast<std::uint32_t>(j));

    const auto scaled = [&](std::size_t j, double v) {
        if (m.feature_range[j] <= 0.0) return 0.0;
        return std::clamp((v - m.feature_min[j]) / m.feature_range[j], 0.0, 1.0);
    };

    CsrMatrix out(d);
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto rv = x.row(r);
        cols.clear();
        vals.clear();
        std::size_t k = 0;
        std::size_t o = 0;
        while (k < rv.size() || o < offset_cols.size()) {
            const std::uint32_t ck = k < rv.size() ? rv.cols[k] : UINT32_MAX;
            const std::uint32_t co = o < offset_cols.size() ? offset_cols[o] : UINT32_MAX;
            if (ck <= co) {
                cols.push_back(ck);
                vals.push_back(scaled(ck, rv.values[k]));
                ++k;
                if (ck == co) ++o;
            } else {
                cols.push_back(co);
                vals.push_back(scaled(co, 0.0));
                ++o;
            }
        }
        out.push_row(cols, vals);
    }
    return out;
}

}  // namespace

NaiveBayesModel fit_naive_bayes(const CsrMatrix& x_raw, std::span<const std::size_t> y, std::size_t n_classes,
                                const NaiveBayesParams& p) {
    const std::size_t n = x_raw.rows();
    const std::size_t d = x_raw.cols();
    NaiveBayesModel model;

    if (p.minmax_scale) {
        model.feature_min.assign(d, 0.0);
        std::vector<double> mx(d, 0.0);
        std::vector<std::size_t> nnz(d, 0);
        std::vector<bool> seen(d, false);
        for (std::size_t r = 0; r < n; ++r) {
            const auto rv = x_raw.row(r);
            for (std::size_t k = 0; k < rv.size(); ++k) {
                const auto j = rv.cols[k];
                if (!seen[j]) {
                    model.feature_min[j] = mx[j] = rv.values[k];
                    seen[j] = true;
                } else {
                    model.feature_min[j] = std::min(model.feature_min[j], rv.values[k]);
                    mx[j] = std::max(mx[j], rv.values[k]);
                }
                ++nnz[j];
            }
        }
        model.feature_range.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            if (nnz[j] < n) {  // implicit zeros take part in the extremes
                model.feature_min[j] = std::min(model.feature_min[j], 0.0);
                mx[j] = std::max(mx[j], 0.0);
            }
            model.feature_range[j] = mx[j] - model.feature_min[j];
        }
    }
    const CsrMatrix x = scale_features(model, x_raw);
    for (double v : x.values())
        if (v < 0.0) throw DataError("multinomial naive Bayes needs non-negative features");

    Matrix counts(n_classes, d);
    std::vector<double> class_docs(n_classes, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto rv = x.row(r);
        class_docs[y[r]] += 1.0;
        auto crow = counts.row(y[r]);
        for (std::size_t k = 0; k < rv.size(); ++k) crow[rv.cols[k]] += rv.values[k];
    }

    model.class_log_prior.resize(n_classes);
    model.feature_log_prob = Matrix(n_classes, d);
    const double alpha_total = p.alpha * static_cast<double>(d);
    for (std::size_t c = 0; c < n_classes; ++c) {
        model.class_log_prior[c] = std::log(class_docs[c] / static_cast<double>(n));
        double total = 0.0;
        for (double v : counts.row(c)) total += v;
        for (std::size_t j = 0; j < d; ++j)
            model.feature_log_prob(c, j) = std::log((counts(c, j) + p.alpha) / (total + alpha_total));
    }
    return model;
}

Matrix naive_bayes_joint_log_likelihood(const NaiveBayesModel& m, const CsrMatrix& x_raw) {
    const CsrMatrix x = scale_features(m, x_raw);
    const std::size_t k_classes = m.class_log_prior.size();
    Matrix jll(x.rows(), k_classes);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto rv = x.row(r);
        for (std::size_t c = 0; c < k_classes; ++c) {
            double s = m.class_log_prior[c];
            const auto lp = m.feature_log_prob.row(c);
            for (std::size_t k = 0; k < rv.size(); ++k) s += rv.values[k] * lp[rv.cols[k]];
            jll(r, c) = s;
        }
    }
    return jll;
}

Matrix naive_bayes_log_posterior(const NaiveBayesModel& m, const CsrMatrix& x) {
    Matrix jll = naive_bayes_joint_log_likelihood(m, x);
    for (std::size_t r = 0; r < jll.rows(); ++r) {
        auto row = jll.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - mx);
        const double lse = mx + std::log(sum);
        for (double& v : row) v -= lse;
    }
    return jll;
}

}  // namespace ratebench::classify::detail
