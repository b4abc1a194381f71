#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ratebench/error.hpp"
#include "ratebench/kernels.hpp"

namespace ratebench::kernels {

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace omp {

namespace {

// below this many multiply-adds the fork/join costs more than it saves
constexpr std::size_t kParallelThreshold = 1 << 14;

inline double sparse_dot_dense(const CsrMatrix::RowView& row, const double* dense) {
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) s += row.values[k] * dense[row.cols[k]];
    return s;
}

inline double rbf_value(double gamma, double norm_a, double norm_b, double dot) {
    const double dist = std::max(0.0, norm_a + norm_b - 2.0 * dot);
    return std::exp(-gamma * dist);
}

}  // namespace

void spmm(const CsrMatrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows()) throw ArgumentError("spmm: inner dimension mismatch");
    c = Matrix(a.rows(), b.cols());
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
    const std::size_t m = b.cols();
#pragma omp parallel for schedule(dynamic, 16) if (a.nnz() * m > kParallelThreshold)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const auto rv = a.row(static_cast<std::size_t>(r));
        double* out = c.row(static_cast<std::size_t>(r)).data();
        for (std::size_t k = 0; k < rv.size(); ++k) {
            const double v = rv.values[k];
            const double* brow = b.row(rv.cols[k]).data();
#pragma omp simd
            for (std::size_t j = 0; j < m; ++j) out[j] += v * brow[j];
        }
    }
}

void gemm(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows()) throw ArgumentError("gemm: inner dimension mismatch");
    c = Matrix(a.rows(), b.cols());
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
    const std::size_t inner = a.cols();
    const std::size_t m = b.cols();
#pragma omp parallel for schedule(static) if (a.rows() * inner * m > kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        double* out = c.row(static_cast<std::size_t>(i)).data();
        const double* arow = a.row(static_cast<std::size_t>(i)).data();
        for (std::size_t k = 0; k < inner; ++k) {
            const double v = arow[k];
            const double* brow = b.row(k).data();
#pragma omp simd
            for (std::size_t j = 0; j < m; ++j) out[j] += v * brow[j];
        }
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() != b.rows()) throw ArgumentError("gemm_tn: inner dimension mismatch");
    c = Matrix(a.cols(), b.cols());
    const auto out_rows = static_cast<std::ptrdiff_t>(a.cols());
    const std::size_t inner = a.rows();
    const std::size_t m = b.cols();
#pragma omp parallel for schedule(static) if (a.cols() * inner * m > kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < out_rows; ++i) {
        double* out = c.row(static_cast<std::size_t>(i)).data();
        for (std::size_t r = 0; r < inner; ++r) {
            const double v = a(r, static_cast<std::size_t>(i));
            const double* brow = b.row(r).data();
#pragma omp simd
            for (std::size_t j = 0; j < m; ++j) out[j] += v * brow[j];
        }
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.cols()) throw ArgumentError("gemm_nt: inner dimension mismatch");
    c = Matrix(a.rows(), b.rows());
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
    const std::size_t inner = a.cols();
#pragma omp parallel for schedule(static) if (a.rows() * b.rows() * inner > kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const double* arow = a.row(static_cast<std::size_t>(i)).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j).data();
            double s = 0.0;
            for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
            c(static_cast<std::size_t>(i), j) = s;
        }
    }
}

void row_sq_norms(const CsrMatrix& x, std::span<double> out) {
    if (out.size() != x.rows()) throw ArgumentError("row_sq_norms: output size mismatch");
    const auto rows = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static) if (x.nnz() > kParallelThreshold)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (double v : x.row(static_cast<std::size_t>(r)).values) s += v * v;
        out[static_cast<std::size_t>(r)] = s;
    }
}

void rbf_row(const CsrMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
             std::span<double> out) {
    if (out.size() != x.rows() || sq_norms.size() != x.rows()) throw ArgumentError("rbf_row: size mismatch");
    std::vector<double> dense(x.cols(), 0.0);
    const auto xi = x.row(i);
    for (std::size_t k = 0; k < xi.size(); ++k) dense[xi.cols[k]] = xi.values[k];
    const auto rows = static_cast<std::ptrdiff_t>(x.rows());
    const double norm_i = sq_norms[i];
#pragma omp parallel for schedule(static) if (x.nnz() > kParallelThreshold)
    for (std::ptrdiff_t j = 0; j < rows; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        out[ju] = rbf_value(gamma, norm_i, sq_norms[ju], sparse_dot_dense(x.row(ju), dense.data()));
    }
}

void rbf_cross(const CsrMatrix& queries, std::span<const double> query_norms, const CsrMatrix& support,
               std::span<const double> support_norms, double gamma, Matrix& out) {
    if (queries.cols() != support.cols()) throw ArgumentError("rbf_cross: feature dimension mismatch");
    out = Matrix(queries.rows(), support.rows());
    const auto rows = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel if (queries.rows() * support.nnz() > kParallelThreshold)
    {
        std::vector<double> dense(queries.cols(), 0.0);
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            const auto ru = static_cast<std::size_t>(r);
            const auto q = queries.row(ru);
            for (std::size_t k = 0; k < q.size(); ++k) dense[q.cols[k]] = q.values[k];
            for (std::size_t s = 0; s < support.rows(); ++s)
                out(ru, s) = rbf_value(gamma, query_norms[ru], support_norms[s],
                                       sparse_dot_dense(support.row(s), dense.data()));
            for (std::size_t k = 0; k < q.size(); ++k) dense[q.cols[k]] = 0.0;
        }
    }
}

void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 double learning_rate, double beta1, double beta2, double epsilon, double correction1,
                 double correction2) {
    if (grad.size() != params.size() || m.size() != params.size() || v.size() != params.size())
        throw ArgumentError("adam_update: size mismatch");
    const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static) if (params.size() > kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        const double m_hat = m[k] / correction1;
        const double v_hat = v[k] / correction2;
        params[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

}  // namespace omp
}  // namespace ratebench::kernels
