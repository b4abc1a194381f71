#include <algorithm>
#include <cmath>
#include <limits>

#include "ratebench/classify_detail.hpp"
#include "ratebench/error.hpp"
#include "ratebench/kernels.hpp"

namespace ratebench::classify::detail {

void softmax_rows(Matrix& z) {
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

namespace {

Matrix logits(const LogisticModel& m, const CsrMatrix& x) {
    Matrix z;
    kernels::spmm(x, m.weights, z);
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t k = 0; k < z.cols(); ++k) z(r, k) += m.bias[k];
    return z;
}

double squared_norm(const LogisticModel& g) {
    double s = 0.0;
    for (double v : g.weights.values()) s += v * v;
    for (double v : g.bias) s += v * v;
    return s;
}

}  // namespace

Matrix logistic_proba(const LogisticModel& m, const CsrMatrix& x) {
    Matrix p = logits(m, x);
    softmax_rows(p);
    return p;
}

double logistic_objective(const CsrMatrix& x, const CsrMatrix& xt, std::span<const std::size_t> y,
                          const LogisticModel& params, double l2, LogisticModel* grad) {
    const std::size_t n = x.rows();
    Matrix p = logits(params, x);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        auto row = p.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - mx);
        const double log_norm = mx + std::log(sum);
        loss -= row[y[r]] - log_norm;
        for (double& v : row) v = std::exp(v - log_norm);
    }
    loss /= static_cast<double>(n);
    double reg = 0.0;
    for (double w : params.weights.values()) reg += w * w;
    loss += 0.5 * l2 * reg;

    if (grad) {
        // p becomes (P - Y) / n
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            p(r, y[r]) -= 1.0;
            for (double& v : p.row(r)) v *= inv_n;
        }
        kernels::spmm(xt, p, grad->weights);
        auto gw = grad->weights.values();
        const auto w = params.weights.values();
        for (std::size_t k = 0; k < gw.size(); ++k) gw[k] += l2 * w[k];
        grad->bias.assign(p.cols(), 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t k = 0; k < p.cols(); ++k) grad->bias[k] += p(r, k);
    }
    return loss;
}

LogisticModel fit_logistic(const CsrMatrix& x, std::span<const std::size_t> y, std::size_t n_classes,
                           const LogisticParams& p, TrainingReport& report) {
    const CsrMatrix xt = x.transpose();
    LogisticModel model{Matrix(x.cols(), n_classes), std::vector<double>(n_classes, 0.0)};
    LogisticModel grad;
    LogisticModel trial{Matrix(x.cols(), n_classes), std::vector<double>(n_classes, 0.0)};

    constexpr double kArmijo = 1e-4;
    constexpr int kMaxHalvings = 60;
    double step = 1.0;
    double loss = logistic_objective(x, xt, y, model, p.l2, &grad);
    report = {};
    report.loss_history.push_back(loss);
    report.converged = false;

    for (std::size_t iter = 0; iter < p.max_iters; ++iter) {
        const double gnorm2 = squared_norm(grad);
        report.final_measure = std::sqrt(gnorm2);
        if (report.final_measure < p.tol) {
            report.converged = true;
            break;
        }
        // backtracking keeps every accepted step a strict decrease
        bool accepted = false;
        double trial_loss = loss;
        for (int h = 0; h < kMaxHalvings; ++h) {
            const auto w = model.weights.values();
            const auto gw = grad.weights.values();
            auto tw = trial.weights.values();
            for (std::size_t k = 0; k < tw.size(); ++k) tw[k] = w[k] - step * gw[k];
            for (std::size_t k = 0; k < n_classes; ++k) trial.bias[k] = model.bias[k] - step * grad.bias[k];
            trial_loss = logistic_objective(x, xt, y, trial, p.l2, nullptr);
            if (trial_loss <= loss - kArmijo * step * gnorm2) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        report.iterations = iter + 1;
        if (!accepted) break;  // step underflow: no further progress possible in double precision
        std::swap(model, trial);
        loss = logistic_objective(x, xt, y, model, p.l2, &grad);
        report.loss_history.push_back(loss);
        step = std::min(step * 2.0, 1e6);
    }
    if (!report.converged) report.final_measure = std::sqrt(squared_norm(grad));
    if (report.final_measure < p.tol) report.converged = true;
    return model;
}

}  // namespace ratebench::classify::detail
