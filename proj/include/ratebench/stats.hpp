#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace ratebench::eval {

/// Fraction of positions where pred equals truth. Throws ArgumentError on empty or mismatched input.
double accuracy(std::span<const int> pred, std::span<const int> truth);

/// 5x5 counts, rows = true star, cols = predicted star.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 5>, 5> counts{};

    std::size_t total() const;
    std::size_t trace() const;
    std::size_t row_sum(int star) const;
    double accuracy() const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws DataError for labels outside 1..5, ArgumentError on length mismatch.
ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth);

/// Population Pearson correlation, clamped to [-1, 1]. Throws DataError when
/// either sequence is constant, ArgumentError on fewer than 2 points or length mismatch.
double pearson(std::span<const double> x, std::span<const double> y);

/// Quantile of sorted data by linear interpolation between order statistics.
double quantile(std::span<const double> sorted, double p);

struct BoxStats {
    int star = 0;
    std::size_t n = 0;
    double whisker_low = 0.0;  // smallest value within Q1 - 1.5 IQR, capped at Q1
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_high = 0.0;  // largest value within Q3 + 1.5 IQR, at least Q3
    std::vector<double> outliers;  // ascending
};

/// Throws DataError on an empty group.
BoxStats box_stats(std::span<const double> values);
/// One summary per star present in `stars`, ascending.
std::vector<BoxStats> box_stats_by_star(std::span<const double> values, std::span<const int> stars);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares line y = slope * x + intercept. Throws DataError when all x are equal.
LineFit ols_fit(std::span<const double> x, std::span<const double> y);

}  // namespace ratebench::eval
