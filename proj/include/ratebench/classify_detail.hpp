#pragma once

// Training internals exposed for gradient checks, KKT checks and oracles.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ratebench/classify.hpp"
#include "ratebench/random.hpp"

namespace ratebench::classify::detail {

/// Sorted distinct labels and the class position of every sample.
struct LabelIndex {
    std::vector<int> classes;
    std::vector<std::size_t> index;
};
LabelIndex index_labels(std::span<const int> y);

/// Row-wise softmax in place.
void softmax_rows(Matrix& z);

/// Mean cross-entropy + (l2 / 2) |W|^2. Fills the gradients when given.
double logistic_objective(const CsrMatrix& x, const CsrMatrix& xt, std::span<const std::size_t> y,
                          const LogisticModel& params, double l2, LogisticModel* grad);
LogisticModel fit_logistic(const CsrMatrix& x, std::span<const std::size_t> y, std::size_t n_classes,
                           const LogisticParams& p, TrainingReport& report);
Matrix logistic_proba(const LogisticModel& m, const CsrMatrix& x);

NaiveBayesModel fit_naive_bayes(const CsrMatrix& x, std::span<const std::size_t> y, std::size_t n_classes,
                                const NaiveBayesParams& p);
/// Joint log-likelihood log P(c) + sum_j x_j log P(j | c).
Matrix naive_bayes_joint_log_likelihood(const NaiveBayesModel& m, const CsrMatrix& x);
/// Log-posterior: joint log-likelihood minus its row log-sum-exp.
Matrix naive_bayes_log_posterior(const NaiveBayesModel& m, const CsrMatrix& x);

/// RBF kernel rows over a fixed sample set with a bounded LRU cache.
class KernelCache {
public:
    KernelCache(const CsrMatrix& x, double gamma, std::size_t max_bytes);
    ~KernelCache();
    KernelCache(const KernelCache&) = delete;
    KernelCache& operator=(const KernelCache&) = delete;

    std::shared_ptr<const std::vector<double>> row(std::size_t i);
    std::size_t size() const;
    double gamma() const;
    std::span<const double> sq_norms() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct SmoResult {
    std::vector<double> alpha;
    double rho = 0.0;
    double gap = 0.0;  // m(alpha) - M(alpha) at exit
    std::size_t iterations = 0;
    bool converged = false;
};

/// Binary C-SVC dual, labels in {-1, +1}. Decision value f(x) = sum alpha_i y_i K(x_i, x) - rho.
SmoResult solve_smo(KernelCache& kernel, std::span<const std::int8_t> y, double c, double tol,
                    std::size_t max_iters);
double default_gamma(const CsrMatrix& x);
Matrix svm_margins(const SvmModel& m, const CsrMatrix& x);

MlpModel init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t n_classes, Rng& rng);
/// Mean cross-entropy of the network on (x, y); fills the gradient when given.
double mlp_objective(const MlpModel& net, const CsrMatrix& x, std::span<const std::size_t> y, MlpModel* grad);
Matrix mlp_proba(const MlpModel& net, const CsrMatrix& x);
MlpModel fit_mlp(const CsrMatrix& x, std::span<const std::size_t> y, std::size_t n_classes, const MlpParams& p,
                 std::uint64_t seed, TrainingReport& report);

}  // namespace ratebench::classify::detail
