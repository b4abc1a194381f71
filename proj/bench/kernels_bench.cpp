// Serial reference versus OpenMP kernels on representative shapes.
//
// Usage: ratebench-bench [--threads N] [--repeat R]

#include <algorithm>
#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "ratebench/kernels.hpp"
#include "ratebench/random.hpp"

using namespace ratebench;
namespace k = ratebench::kernels;

namespace {

Matrix random_dense(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

CsrMatrix random_sparse(Rng& rng, std::size_t r, std::size_t c, double density) {
    Matrix m(r, c);
    for (double& v : m.values())
        if (rng.uniform01() < density) v = rng.uniform(0.0, 1.0);
    return CsrMatrix::from_dense(m);
}

double best_of(int repeat, const std::function<void()>& f) {
    double best = 1e300;
    for (int i = 0; i < repeat; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        best = std::min(best, dt.count());
    }
    return best;
}

void row(const std::string& name, int repeat, const std::function<void()>& serial, const std::function<void()>& omp) {
    const double s = best_of(repeat, serial);
    const double o = best_of(repeat, omp);
    fmt::print("{:<34} {:>10.3f} {:>10.3f} {:>8.2f}x\n", name, s * 1e3, o * 1e3, s / o);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ratebench kernel benchmark"};
    int threads = omp_get_max_threads();
    int repeat = 5;
    app.add_option("--threads", threads, "OpenMP threads");
    app.add_option("--repeat", repeat, "Repetitions; the best time is reported");
    CLI11_PARSE(app, argc, argv);
    omp_set_num_threads(threads);

    Rng rng(2024);
    const auto docs = random_sparse(rng, 3000, 5000, 0.01);
    const auto w = random_dense(rng, 5000, 5);
    const auto a = random_dense(rng, 700, 100);
    const auto b = random_dense(rng, 100, 128);
    const auto g = random_dense(rng, 700, 128);
    const auto h = random_dense(rng, 128, 128);
    std::vector<double> norms(docs.rows()), kernel_row(docs.rows());
    k::serial::row_sq_norms(docs, norms);
    const auto queries = random_sparse(rng, 300, 5000, 0.01);
    std::vector<double> qnorms(queries.rows());
    k::serial::row_sq_norms(queries, qnorms);
    std::vector<double> params(200000), grad(200000), m1(200000), m2(200000);
    for (double& v : grad) v = rng.uniform(-1.0, 1.0);

    fmt::print("openmp {} with {} thread(s), best of {}\n", k::openmp_enabled() ? "on" : "off", threads, repeat);
    fmt::print("{:<34} {:>10} {:>10} {:>9}\n", "kernel", "serial ms", "omp ms", "speedup");
    Matrix c;
    row("spmm 3000x5000 (1%) * 5000x5", repeat, [&] { k::serial::spmm(docs, w, c); }, [&] { k::omp::spmm(docs, w, c); });
    row("gemm 700x100 * 100x128", repeat, [&] { k::serial::gemm(a, b, c); }, [&] { k::omp::gemm(a, b, c); });
    row("gemm_tn 700x128' * 700x128", repeat, [&] { k::serial::gemm_tn(g, g, c); }, [&] { k::omp::gemm_tn(g, g, c); });
    row("gemm_nt 700x128 * 128x128'", repeat, [&] { k::serial::gemm_nt(g, h, c); }, [&] { k::omp::gemm_nt(g, h, c); });
    row("rbf_row n=3000", repeat, [&] { k::serial::rbf_row(docs, norms, 17, 0.01, kernel_row); },
        [&] { k::omp::rbf_row(docs, norms, 17, 0.01, kernel_row); });
    row("rbf_cross 300x3000", repeat, [&] { k::serial::rbf_cross(queries, qnorms, docs, norms, 0.01, c); },
        [&] { k::omp::rbf_cross(queries, qnorms, docs, norms, 0.01, c); });
    row("row_sq_norms n=3000", repeat, [&] { k::serial::row_sq_norms(docs, norms); },
        [&] { k::omp::row_sq_norms(docs, norms); });
    row("adam_update 200k", repeat,
        [&] { k::serial::adam_update(params, grad, m1, m2, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001); },
        [&] { k::omp::adam_update(params, grad, m1, m2, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001); });
    return 0;
}
