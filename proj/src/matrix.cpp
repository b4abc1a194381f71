#include "ratebench/matrix.hpp"

#include <algorithm>
#include <stdexcept>

#include "ratebench/error.hpp"

namespace ratebench {

void CsrMatrix::push_row(std::span<const std::uint32_t> cols, std::span<const double> values) {
    if (cols.size() != values.size()) throw ArgumentError("push_row: column/value size mismatch");
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] >= cols_) throw ArgumentError("push_row: column index out of range");
        if (k > 0 && cols[k] <= cols[k - 1]) throw ArgumentError("push_row: columns must be strictly increasing");
        if (values[k] == 0.0) continue;
        col_idx_.push_back(cols[k]);
        values_.push_back(values[k]);
    }
    row_ptr_.push_back(values_.size());
}

void CsrMatrix::push_dense_row(std::span<const double> values) {
    if (values.size() != cols_) throw ArgumentError("push_dense_row: width mismatch");
    for (std::size_t c = 0; c < values.size(); ++c) {
        if (values[c] == 0.0) continue;
        col_idx_.push_back(static_cast<std::uint32_t>(c));
        values_.push_back(values[c]);
    }
    row_ptr_.push_back(values_.size());
}

Matrix CsrMatrix::to_dense() const {
    Matrix out(rows(), cols_);
    for (std::size_t r = 0; r < rows(); ++r) {
        const auto rv = row(r);
        for (std::size_t k = 0; k < rv.size(); ++k) out(r, rv.cols[k]) = rv.values[k];
    }
    return out;
}

CsrMatrix CsrMatrix::from_dense(const Matrix& dense) {
    CsrMatrix out(dense.cols());
    for (std::size_t r = 0; r < dense.rows(); ++r) out.push_dense_row(dense.row(r));
    return out;
}

CsrMatrix CsrMatrix::transpose() const {
    CsrMatrix out(rows());
    out.row_ptr_.assign(cols_ + 1, 0);
    for (auto c : col_idx_) ++out.row_ptr_[c + 1];
    for (std::size_t c = 0; c < cols_; ++c) out.row_ptr_[c + 1] += out.row_ptr_[c];
    out.col_idx_.resize(nnz());
    out.values_.resize(nnz());
    std::vector<std::size_t> cursor(out.row_ptr_.begin(), out.row_ptr_.end() - 1);
    // visiting rows in order keeps each transposed row sorted
    for (std::size_t r = 0; r < rows(); ++r) {
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const auto dst = cursor[col_idx_[k]]++;
            out.col_idx_[dst] = static_cast<std::uint32_t>(r);
            out.values_[dst] = values_[k];
        }
    }
    return out;
}

CsrMatrix CsrMatrix::select_rows(std::span<const std::size_t> rows_to_keep) const {
    CsrMatrix out(cols_);
    for (auto r : rows_to_keep) {
        if (r >= rows()) throw ArgumentError("select_rows: row index out of range");
        const auto rv = row(r);
        out.col_idx_.insert(out.col_idx_.end(), rv.cols.begin(), rv.cols.end());
        out.values_.insert(out.values_.end(), rv.values.begin(), rv.values.end());
        out.row_ptr_.push_back(out.values_.size());
    }
    return out;
}

CsrMatrix CsrMatrix::append_column(std::span<const double> column) const {
    if (column.size() != rows()) throw ArgumentError("append_column: length does not match row count");
    CsrMatrix out(cols_ + 1);
    out.col_idx_.reserve(nnz() + rows());
    out.values_.reserve(nnz() + rows());
    for (std::size_t r = 0; r < rows(); ++r) {
        const auto rv = row(r);
        out.col_idx_.insert(out.col_idx_.end(), rv.cols.begin(), rv.cols.end());
        out.values_.insert(out.values_.end(), rv.values.begin(), rv.values.end());
        if (column[r] != 0.0) {
            out.col_idx_.push_back(static_cast<std::uint32_t>(cols_));
            out.values_.push_back(column[r]);
        }
        out.row_ptr_.push_back(out.values_.size());
    }
    return out;
}

}  // namespace ratebench
