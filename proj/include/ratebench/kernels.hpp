#pragma once

// Hot loops shared by the classifiers and embeddings.
//
// Every kernel exists twice: a plain serial version kept as the reference
// and an OpenMP version used by default. Each output element is accumulated
// by exactly one thread in the same order as the serial loop, so the two
// agree bit for bit and results do not depend on the thread count.

#include <cstddef>
#include <span>

#include "ratebench/matrix.hpp"

namespace ratebench::kernels {

namespace serial {
// c = a * b
void spmm(const CsrMatrix& a, const Matrix& b, Matrix& c);
// c = a * b
void gemm(const Matrix& a, const Matrix& b, Matrix& c);
// c = a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
// c = a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
// out[j] = exp(-gamma * |x_i - x_j|^2) for every row j of x
void rbf_row(const CsrMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
             std::span<double> out);
// out(r, s) = exp(-gamma * |q_r - s_s|^2)
void rbf_cross(const CsrMatrix& queries, std::span<const double> query_norms, const CsrMatrix& support,
               std::span<const double> support_norms, double gamma, Matrix& out);
// out[r] = |row r|^2
void row_sq_norms(const CsrMatrix& x, std::span<double> out);
// One Adam step in place; correction1/2 are 1 - beta1^t and 1 - beta2^t
void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 double learning_rate, double beta1, double beta2, double epsilon, double correction1,
                 double correction2);
}  // namespace serial

namespace omp {
// c = a * b
void spmm(const CsrMatrix& a, const Matrix& b, Matrix& c);
// c = a * b
void gemm(const Matrix& a, const Matrix& b, Matrix& c);
// c = a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
// c = a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
// out[j] = exp(-gamma * |x_i - x_j|^2) for every row j of x
void rbf_row(const CsrMatrix& x, std::span<const double> sq_norms, std::size_t i, double gamma,
             std::span<double> out);
// out(r, s) = exp(-gamma * |q_r - s_s|^2)
void rbf_cross(const CsrMatrix& queries, std::span<const double> query_norms, const CsrMatrix& support,
               std::span<const double> support_norms, double gamma, Matrix& out);
// out[r] = |row r|^2
void row_sq_norms(const CsrMatrix& x, std::span<double> out);
// One Adam step in place; correction1/2 are 1 - beta1^t and 1 - beta2^t
void adam_update(std::span<double> params, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 double learning_rate, double beta1, double beta2, double epsilon, double correction1,
                 double correction2);
}  // namespace omp

/// Whether the OpenMP variants were compiled with OpenMP enabled.
bool openmp_enabled();
/// Threads an OpenMP kernel would use right now.
int max_threads();

using omp::adam_update;
using omp::gemm;
using omp::gemm_nt;
using omp::gemm_tn;
using omp::rbf_cross;
using omp::rbf_row;
using omp::row_sq_norms;
using omp::spmm;

}  // namespace ratebench::kernels
