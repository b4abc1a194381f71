#include <algorithm>
#include <cmath>
#include <numeric>

#include "ratebench/classify_detail.hpp"
#include "ratebench/error.hpp"
#include "ratebench/kernels.hpp"

namespace ratebench::classify::detail {

namespace {

struct Forward {
    std::vector<Matrix> pre;   // pre-activations per layer
    std::vector<Matrix> post;  // ReLU outputs of the hidden layers
    Matrix proba;
};

void add_bias(Matrix& z, const std::vector<double>& b) {
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t k = 0; k < z.cols(); ++k) z(r, k) += b[k];
}

Forward forward(const MlpModel& net, const CsrMatrix& x) {
    Forward f;
    const std::size_t layers = net.weights.size();
    f.pre.resize(layers);
    f.post.resize(layers - 1);
    kernels::spmm(x, net.weights[0], f.pre[0]);
    add_bias(f.pre[0], net.biases[0]);
    for (std::size_t l = 1; l < layers; ++l) {
        Matrix& a = f.post[l - 1];
        a = f.pre[l - 1];
        for (double& v : a.values()) v = std::max(v, 0.0);
        kernels::gemm(a, net.weights[l], f.pre[l]);
        add_bias(f.pre[l], net.biases[l]);
    }
    f.proba = f.pre.back();
    softmax_rows(f.proba);
    return f;
}

void column_sums(const Matrix& m, std::vector<double>& out) {
    out.assign(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t k = 0; k < m.cols(); ++k) out[k] += m(r, k);
}

double cross_entropy(const Matrix& logits, std::span<const std::size_t> y) {
    double loss = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double v : row) sum += std::exp(v - mx);
        loss -= row[y[r]] - mx - std::log(sum);
    }
    return loss / static_cast<double>(logits.rows());
}

}  // namespace

MlpModel init_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t n_classes, Rng& rng) {
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(n_classes);
    MlpModel net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t in = sizes[l];
        const std::size_t out = sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        Matrix w(in, out);
        for (double& v : w.values()) v = rng.uniform(-limit, limit);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(out, 0.0);
    }
    return net;
}

Matrix mlp_proba(const MlpModel& net, const CsrMatrix& x) { return forward(net, x).proba; }

double mlp_objective(const MlpModel& net, const CsrMatrix& x, std::span<const std::size_t> y, MlpModel* grad) {
    Forward f = forward(net, x);
    const double loss = cross_entropy(f.pre.back(), y);
    if (!grad) return loss;

    const std::size_t layers = net.weights.size();
    grad->weights.resize(layers);
    grad->biases.resize(layers);
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    Matrix dz = std::move(f.proba);
    for (std::size_t r = 0; r < dz.rows(); ++r) {
        dz(r, y[r]) -= 1.0;
        for (double& v : dz.row(r)) v *= inv_n;
    }
    for (std::size_t l = layers; l-- > 1;) {
        kernels::gemm_tn(f.post[l - 1], dz, grad->weights[l]);
        column_sums(dz, grad->biases[l]);
        Matrix da;
        kernels::gemm_nt(dz, net.weights[l], da);
        const auto pre = f.pre[l - 1].values();
        auto dav = da.values();
        for (std::size_t k = 0; k < dav.size(); ++k)
            if (!(pre[k] > 0.0)) dav[k] = 0.0;
        dz = std::move(da);
    }
    kernels::spmm(x.transpose(), dz, grad->weights[0]);
    column_sums(dz, grad->biases[0]);
    return loss;
}

MlpModel fit_mlp(const CsrMatrix& x, std::span<const std::size_t> y, std::size_t n_classes, const MlpParams& p,
                 std::uint64_t seed, TrainingReport& report) {
    Rng rng(seed);
    MlpModel net = init_mlp(x.cols(), p.hidden, n_classes, rng);
    MlpModel m1 = net;
    MlpModel m2 = net;
    for (auto* s : {&m1, &m2}) {
        for (auto& w : s->weights) w.fill(0.0);
        for (auto& b : s->biases) std::fill(b.begin(), b.end(), 0.0);
    }

    report = {};
    report.loss_history.push_back(mlp_objective(net, x, y, nullptr));
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> batch_rows;
    std::vector<std::size_t> batch_y;
    MlpModel grad;
    double c1 = 1.0;
    double c2 = 1.0;
    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += p.batch_size) {
            const std::size_t end = std::min(order.size(), start + p.batch_size);
            batch_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
            batch_y.clear();
            for (std::size_t r : batch_rows) batch_y.push_back(y[r]);
            const CsrMatrix xb = x.select_rows(batch_rows);
            mlp_objective(net, xb, batch_y, &grad);
            c1 *= p.beta1;
            c2 *= p.beta2;
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                kernels::adam_update(net.weights[l].values(), grad.weights[l].values(), m1.weights[l].values(),
                                     m2.weights[l].values(), p.learning_rate, p.beta1, p.beta2, p.epsilon, 1.0 - c1,
                                     1.0 - c2);
                kernels::adam_update(net.biases[l], grad.biases[l], m1.biases[l], m2.biases[l], p.learning_rate,
                                     p.beta1, p.beta2, p.epsilon, 1.0 - c1, 1.0 - c2);
            }
            ++report.iterations;
        }
        report.loss_history.push_back(mlp_objective(net, x, y, nullptr));
    }
    report.final_measure = report.loss_history.back();
    return net;
}

}  // namespace ratebench::classify::detail
