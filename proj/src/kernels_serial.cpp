#include <cmath>
#include <vector>

#include "ratebench/error.hpp"
#include "ratebench/kernels.hpp"

namespace ratebench::kernels::serial {

void spmm(const CsrMatrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows()) throw ArgumentError("spmm: inner dimension mismatch");
    c = Matrix(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto rv = a.row(r);
        auto out = c.row(r);
        for (std::size_t k = 0; k < rv.size(); ++k) {
            const double v = rv.values[k];
            const auto brow = b.row(rv.cols[k]);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += v * brow[j];
        }
    }
}

void gemm(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows()) throw ArgumentError("gemm: inner dimension mismatch");
    c = Matrix(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows() != b.rows()) throw ArgumentError("gemm_tn: inner dimension mismatch");
    c = Matrix(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t i = 0; i < a.cols(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(r, i) * b(r, j);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.cols()) throw ArgumentError("gemm_nt: inner dimension mismatch");
    c = Matrix(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
}

void row_sq_norms(const CsrMatrix& x, std::span<double> out) {
    if (out.size() != x.rows()) throw ArgumentError("row_sq_norms: output size mismatch");
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double s = 0.0;
        for (double v : x.row(r).values) s += v * v;
        out[r] = s;
    }
}

namespace {

double sparse_dot_dense(const CsrMatrix::RowView& row, std::span<const double> dense) {
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) s += row.values[k] * dense[row.cols[k]];
    return s;
}

double rbf_value(double gamma, double norm_a, double norm_b, double dot) {
    const double dist = std::max(0.0, norm_a + norm_b - 2.0 * dot);
    return std::exp(-gamma * dist);
}

}  // namespace

void rbf_row(const CsrMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
             std::span<double> out) {
    if (out.size() != x.rows() || sq_norms.size() != x.rows()) throw ArgumentError("rbf_row: size mismatch");
    std::vector<double> dense(x.cols(), 0.0);
    const auto xi = x.row(i);
    for (std::size_t k = 0; k < xi.size(); ++k) dense[xi.cols[k]] = xi.values[k];
    for (std::size_t j = 0; j < x.rows(); ++j)
        out[j] = rbf_value(gamma, sq_norms[i], sq_norms[j], sparse_dot_dense(x.row(j), dense));
}

void rbf_cross(const CsrMatrix& queries, std::span<const double> query_norms, const CsrMatrix& support,
               std::span<const double> support_norms, double gamma, Matrix& out) {
    if (queries.cols() != support.cols()) throw ArgumentError("rbf_cross: feature dimension mismatch");
    out = Matrix(queries.rows(), support.rows());
    std::vector<double> dense(queries.cols(), 0.0);
    for (std::size_t r = 0; r < queries.rows(); ++r) {
        const auto q = queries.row(r);
        for (std::size_t k = 0; k < q.size(); ++k) dense[q.cols[k]] = q.values[k];
        for (std::size_t s = 0; s < support.rows(); ++s)
            out(r, s) = rbf_value(gamma, query_norms[r], support_norms[s], sparse_dot_dense(support.row(s), dense));
        for (std::size_t k = 0; k < q.size(); ++k) dense[q.cols[k]] = 0.0;
    }
}

void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 double learning_rate, double beta1, double beta2, double epsilon, double correction1,
                 double correction2) {
    if (grad.size() != params.size() || m.size() != params.size() || v.size() != params.size())
        throw ArgumentError("adam_update: size mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        const double m_hat = m[k] / correction1;
        const double v_hat = v[k] / correction2;
        params[k] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

}  // namespace ratebench::kernels::serial
