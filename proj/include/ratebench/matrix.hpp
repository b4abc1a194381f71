#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ratebench {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Compressed sparse row matrix. Column indices are strictly increasing within a row.
class CsrMatrix {
public:
    struct RowView {
        std::span<const std::uint32_t> cols;
        std::span<const double> values;
        std::size_t size() const { return cols.size(); }
    };

    CsrMatrix() : row_ptr_{0} {}
    explicit CsrMatrix(std::size_t cols) : cols_(cols), row_ptr_{0} {}

    std::size_t rows() const { return row_ptr_.size() - 1; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    /// Appends a row given as (column, value) pairs sorted by column; zero values are dropped.
    void push_row(std::span<const std::uint32_t> cols, std::span<const double> values);
    /// Appends a dense row, storing only nonzeros.
    void push_dense_row(std::span<const double> values);

    RowView row(std::size_t r) const {
        const auto b = row_ptr_[r];
        const auto e = row_ptr_[r + 1];
        return {{col_idx_.data() + b, e - b}, {values_.data() + b, e - b}};
    }

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::uint32_t> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }
    std::span<double> mutable_values() { return values_; }

    Matrix to_dense() const;
    static CsrMatrix from_dense(const Matrix& dense);

    CsrMatrix transpose() const;
    CsrMatrix select_rows(std::span<const std::size_t> rows) const;
    /// Returns a copy with one more column holding `column` (one value per row).
    CsrMatrix append_column(std::span<const double> column) const;

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;

private:
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> values_;
};

}  // namespace ratebench
