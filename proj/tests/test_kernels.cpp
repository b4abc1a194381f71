#include <omp.h>

#include "doctest.h"
#include "oracles.hpp"
#include "ratebench/error.hpp"
#include "ratebench/kernels.hpp"

using namespace ratebench;
using ratebench::testing::random_csr;

namespace {

Matrix random_dense(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

struct ThreadScope {
    explicit ThreadScope(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
    ~ThreadScope() { omp_set_num_threads(saved); }
    int saved;
};

}  // namespace

TEST_CASE("OpenMP kernels match the serial reference bit for bit") {
    ThreadScope threads(4);
    Rng rng(7);
    for (int round = 0; round < 3; ++round) {
        const auto a = random_csr(rng, 300, 120, 0.2);
        const auto b = random_dense(rng, 120, 70);
        Matrix s, o;
        kernels::serial::spmm(a, b, s);
        kernels::omp::spmm(a, b, o);
        CHECK(s == o);

        const auto d1 = random_dense(rng, 150, 90);
        const auto d2 = random_dense(rng, 90, 80);
        kernels::serial::gemm(d1, d2, s);
        kernels::omp::gemm(d1, d2, o);
        CHECK(s == o);

        const auto d3 = random_dense(rng, 150, 60);
        kernels::serial::gemm_tn(d1, d3, s);
        kernels::omp::gemm_tn(d1, d3, o);
        CHECK(s == o);

        const auto d4 = random_dense(rng, 200, 90);
        kernels::serial::gemm_nt(d1, d4, s);
        kernels::omp::gemm_nt(d1, d4, o);
        CHECK(s == o);

        std::vector<double> ns(a.rows()), no(a.rows());
        kernels::serial::row_sq_norms(a, ns);
        kernels::omp::row_sq_norms(a, no);
        CHECK(ns == no);

        std::vector<double> rs(a.rows()), ro(a.rows());
        kernels::serial::rbf_row(a, ns, 17, 0.3, rs);
        kernels::omp::rbf_row(a, ns, 17, 0.3, ro);
        CHECK(rs == ro);

        const auto q = random_csr(rng, 120, 120, 0.3);
        std::vector<double> qn(q.rows());
        kernels::serial::row_sq_norms(q, qn);
        kernels::serial::rbf_cross(q, qn, a, ns, 0.3, s);
        kernels::omp::rbf_cross(q, qn, a, ns, 0.3, o);
        CHECK(s == o);

        std::vector<double> p1(40000), g(40000), m1(40000), v1(40000);
        for (std::size_t i = 0; i < p1.size(); ++i) {
            p1[i] = rng.uniform(-1, 1);
            g[i] = rng.uniform(-1, 1);
        }
        auto p2 = p1, m2 = m1, v2 = v1;
        kernels::serial::adam_update(p1, g, m1, v1, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001);
        kernels::omp::adam_update(p2, g, m2, v2, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001);
        CHECK(p1 == p2);
        CHECK(m1 == m2);
        CHECK(v1 == v2);
    }
}

TEST_CASE("kernels agree with dense arithmetic") {
    Rng rng(3);
    const auto a = random_csr(rng, 20, 10, 0.5);
    const auto b = random_dense(rng, 10, 4);
    Matrix c;
    kernels::spmm(a, b, c);
    const Matrix ad = a.to_dense();
    Matrix ref;
    kernels::serial::gemm(ad, b, ref);
    for (std::size_t i = 0; i < c.values().size(); ++i) CHECK(c.values()[i] == doctest::Approx(ref.values()[i]).epsilon(1e-12));

    std::vector<double> norms(a.rows());
    kernels::row_sq_norms(a, norms);
    std::vector<double> row(a.rows());
    kernels::rbf_row(a, norms, 3, 0.5, row);
    for (std::size_t j = 0; j < a.rows(); ++j) {
        double d2 = 0.0;
        for (std::size_t t = 0; t < ad.cols(); ++t) d2 += (ad(3, t) - ad(j, t)) * (ad(3, t) - ad(j, t));
        CHECK(row[j] == doctest::Approx(std::exp(-0.5 * d2)).epsilon(1e-12));
    }
    CHECK(row[3] == 1.0);
}

TEST_CASE("kernel shape errors") {
    Matrix c;
    CHECK_THROWS_AS(kernels::gemm(Matrix(2, 3), Matrix(2, 3), c), ArgumentError);
    CHECK_THROWS_AS(kernels::spmm(CsrMatrix(3), Matrix(2, 2), c), ArgumentError);
    std::vector<double> out(1);
    CHECK_THROWS_AS(kernels::row_sq_norms(CsrMatrix(3), std::span<double>(out)), ArgumentError);
}
