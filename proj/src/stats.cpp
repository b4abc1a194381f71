#include "ratebench/stats.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ratebench/error.hpp"

namespace ratebench::eval {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ArgumentError(fmt::format("{}: lengths differ ({} vs {})", what, a, b));
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double accuracy(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred.size(), truth.size(), "accuracy");
    if (pred.empty()) throw ArgumentError("accuracy: no predictions");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

std::size_t ConfusionMatrix::total() const {
    std::size_t s = 0;
    for (const auto& row : counts)
        for (std::size_t v : row) s += v;
    return s;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < 5; ++i) s += counts[i][i];
    return s;
}

std::size_t ConfusionMatrix::row_sum(int star) const {
    std::size_t s = 0;
    for (std::size_t v : counts.at(static_cast<std::size_t>(star - 1))) s += v;
    return s;
}

double ConfusionMatrix::accuracy() const {
    const std::size_t n = total();
    if (n == 0) throw ArgumentError("accuracy of an empty confusion matrix");
    return static_cast<double>(trace()) / static_cast<double>(n);
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred.size(), truth.size(), "confusion");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (int v : {pred[i], truth[i]})
            if (v < 1 || v > 5) throw DataError(fmt::format("label {} outside 1..5", v));
        ++m.counts[static_cast<std::size_t>(truth[i] - 1)][static_cast<std::size_t>(pred[i] - 1)];
    }
    return m;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    check_lengths(x.size(), y.size(), "pearson");
    if (x.size() < 2) throw ArgumentError("pearson: need at least 2 points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("correlation undefined for a constant sequence");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DataError("quantile of an empty sequence");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
    if (values.empty()) throw DataError("box statistics of an empty group");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    BoxStats b;
    b.n = s.size();
    b.q1 = quantile(s, 0.25);
    b.median = quantile(s, 0.5);
    b.q3 = quantile(s, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_low = b.q1;
    b.whisker_high = b.q3;
    bool low_set = false;
    for (double v : s) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
            continue;
        }
        if (!low_set) {
            b.whisker_low = std::min(v, b.q1);
            low_set = true;
        }
        b.whisker_high = std::max(v, b.q3);
    }
    return b;
}

std::vector<BoxStats> box_stats_by_star(std::span<const double> values, std::span<const int> stars) {
    check_lengths(values.size(), stars.size(), "box_stats_by_star");
    std::vector<BoxStats> out;
    for (int star = 1; star <= 5; ++star) {
        std::vector<double> group;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (stars[i] == star) group.push_back(values[i]);
        if (group.empty()) continue;
        out.push_back(box_stats(group));
        out.back().star = star;
    }
    return out;
}

LineFit ols_fit(std::span<const double> x, std::span<const double> y) {
    check_lengths(x.size(), y.size(), "ols_fit");
    if (x.empty()) throw DataError("ols_fit: no points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DataError("ols_fit: all x values are equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

}  // namespace ratebench::eval
