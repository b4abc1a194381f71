#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "ratebench/classify_detail.hpp"
#include "ratebench/error.hpp"
#include "ratebench/kernels.hpp"

namespace ratebench::classify::detail {

struct KernelCache::Impl {
    const CsrMatrix& x;
    double gamma;
    std::vector<double> norms;
    std::size_t max_rows;
    std::list<std::size_t> lru;  // front = most recent
    struct Entry {
        std::shared_ptr<const std::vector<double>> row;
        std::list<std::size_t>::iterator pos;
    };
    std::unordered_map<std::size_t, Entry> rows;

    Impl(const CsrMatrix& m, double g, std::size_t max_bytes) : x(m), gamma(g), norms(m.rows()) {
        kernels::row_sq_norms(x, norms);
        const std::size_t row_bytes = std::max<std::size_t>(1, x.rows()) * sizeof(double);
        max_rows = std::max<std::size_t>(2, max_bytes / row_bytes);
    }
};

KernelCache::KernelCache(const CsrMatrix& x, double gamma, std::size_t max_bytes)
    : impl_(std::make_unique<Impl>(x, gamma, max_bytes)) {}

KernelCache::~KernelCache() = default;

std::shared_ptr<const std::vector<double>> KernelCache::row(std::size_t i) {
    auto& im = *impl_;
    if (auto it = im.rows.find(i); it != im.rows.end()) {
        im.lru.splice(im.lru.begin(), im.lru, it->second.pos);
        return it->second.row;
    }
    auto data = std::make_shared<std::vector<double>>(im.x.rows());
    kernels::rbf_row(im.x, im.norms, i, im.gamma, *data);
    if (im.rows.size() >= im.max_rows) {
        im.rows.erase(im.lru.back());
        im.lru.pop_back();
    }
    im.lru.push_front(i);
    im.rows.emplace(i, Impl::Entry{data, im.lru.begin()});
    return data;
}

std::size_t KernelCache::size() const { return impl_->x.rows(); }
double KernelCache::gamma() const { return impl_->gamma; }
std::span<const double> KernelCache::sq_norms() const { return impl_->norms; }

namespace {

constexpr double kTau = 1e-12;

}  // namespace

SmoResult solve_smo(KernelCache& kernel, std::span<const std::int8_t> y, double c, double tol,
                    std::size_t max_iters) {
    const std::size_t n = kernel.size();
    if (y.size() != n) throw ArgumentError("solve_smo: label count does not match the kernel");
    SmoResult res;
    res.alpha.assign(n, 0.0);
    std::vector<double> g(n, -1.0);  // gradient of 0.5 a'Qa - e'a
    auto& a = res.alpha;
    const auto upper = [&](std::size_t t) { return a[t] >= c; };
    const auto lower = [&](std::size_t t) { return a[t] <= 0.0; };
    constexpr double qd = 1.0;  // RBF diagonal

    const double inf = std::numeric_limits<double>::infinity();
    for (;;) {
        // second-order working set selection
        double gmax = -inf;
        std::ptrdiff_t i_sel = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] == 1) {
                if (!upper(t) && -g[t] >= gmax) {
                    gmax = -g[t];
                    i_sel = static_cast<std::ptrdiff_t>(t);
                }
            } else if (!lower(t) && g[t] >= gmax) {
                gmax = g[t];
                i_sel = static_cast<std::ptrdiff_t>(t);
            }
        }
        double gmax2 = -inf;
        std::ptrdiff_t j_sel = -1;
        double obj_min = inf;
        std::shared_ptr<const std::vector<double>> ki;
        if (i_sel >= 0) ki = kernel.row(static_cast<std::size_t>(i_sel));
        for (std::size_t t = 0; t < n && i_sel >= 0; ++t) {
            const double kit = (*ki)[t];
            const auto i = static_cast<std::size_t>(i_sel);
            if (y[t] == 1) {
                if (lower(t)) continue;
                const double diff = gmax + g[t];
                gmax2 = std::max(gmax2, g[t]);
                if (diff > 0.0) {
                    const double quad = qd + qd - 2.0 * y[i] * kit;
                    const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
                    if (obj <= obj_min) {
                        j_sel = static_cast<std::ptrdiff_t>(t);
                        obj_min = obj;
                    }
                }
            } else {
                if (upper(t)) continue;
                const double diff = gmax - g[t];
                gmax2 = std::max(gmax2, -g[t]);
                if (diff > 0.0) {
                    const double quad = qd + qd + 2.0 * y[i] * kit;
                    const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
                    if (obj <= obj_min) {
                        j_sel = static_cast<std::ptrdiff_t>(t);
                        obj_min = obj;
                    }
                }
            }
        }
        res.gap = gmax + gmax2;
        if (i_sel < 0 || j_sel < 0 || res.gap < tol) {
            res.converged = true;
            if (i_sel < 0 || j_sel < 0) res.gap = std::max(0.0, res.gap);
            break;
        }
        if (res.iterations >= max_iters) break;
        ++res.iterations;

        const auto i = static_cast<std::size_t>(i_sel);
        const auto j = static_cast<std::size_t>(j_sel);
        const auto kj = kernel.row(j);
        const double qij = y[i] * y[j] * (*ki)[j];
        const double old_ai = a[i];
        const double old_aj = a[j];
        if (y[i] != y[j]) {
            double quad = qd + qd + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-g[i] - g[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0.0) {
                if (a[j] < 0.0) {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if (a[i] < 0.0) {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if (diff > 0.0) {
                if (a[i] > c) {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if (a[j] > c) {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            double quad = qd + qd - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (g[i] - g[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > c) {
                if (a[i] > c) {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if (a[j] < 0.0) {
                a[j] = 0.0;
                a[i] = sum;
            }
            if (sum > c) {
                if (a[j] > c) {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if (a[i] < 0.0) {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        const double dai = a[i] - old_ai;
        const double daj = a[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t)
            g[t] += y[t] * (y[i] * (*ki)[t] * dai + y[j] * (*kj)[t] * daj);
    }

    double ub = inf;
    double lb = -inf;
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * g[t];
        if (upper(t)) {
            if (y[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    res.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    return res;
}

double default_gamma(const CsrMatrix& x) {
    const double total = static_cast<double>(x.rows()) * static_cast<double>(x.cols());
    if (total == 0.0) return 1.0;
    double sum = 0.0;
    for (double v : x.values()) sum += v;
    const double mean = sum / total;
    double ss = 0.0;
    for (double v : x.values()) ss += (v - mean) * (v - mean);
    ss += (total - static_cast<double>(x.nnz())) * mean * mean;
    const double var = ss / total;
    if (!(var > 0.0)) return 1.0;
    return 1.0 / (static_cast<double>(x.cols()) * var);
}

Matrix svm_margins(const SvmModel& m, const CsrMatrix& x) {
    std::vector<double> qn(x.rows());
    std::vector<double> sn(m.support_vectors.rows());
    kernels::row_sq_norms(x, qn);
    kernels::row_sq_norms(m.support_vectors, sn);
    Matrix k;
    kernels::rbf_cross(x, qn, m.support_vectors, sn, m.gamma, k);
    Matrix out(x.rows(), m.binaries.size());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto krow = k.row(r);
        for (std::size_t b = 0; b < m.binaries.size(); ++b) {
            const auto& bin = m.binaries[b];
            double s = 0.0;
            for (std::size_t t = 0; t < bin.sv.size(); ++t) s += bin.coef[t] * krow[bin.sv[t]];
            out(r, b) = s - bin.rho;
        }
    }
    return out;
}

}  // namespace ratebench::classify::detail
