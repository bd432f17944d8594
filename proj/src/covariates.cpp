#include "lsps/covariates.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace lsps {

CovariateMatrix::Builder::Builder(std::size_t rows) : rows_(rows) {
    if (rows > std::numeric_limits<std::uint32_t>::max())
        throw std::length_error("covariate matrix supports at most 2^32-1 rows");
}

void CovariateMatrix::Builder::add_column(std::span<const std::uint32_t> rows,
                                          std::span<const double> values) {
    if (rows.size() != values.size())
        throw std::invalid_argument("column rows and values differ in length");
    bool binary = true;
    std::int64_t previous = -1;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] >= rows_ || static_cast<std::int64_t>(rows[k]) <= previous)
            throw std::invalid_argument("column row indices must be ascending and in range");
        previous = rows[k];
        if (values[k] == 0.0) continue;
        row_index_.push_back(rows[k]);
        if (values[k] != 1.0) binary = false;
    }
    if (binary) {
        value_start_.push_back(kBinary);
    } else {
        value_start_.push_back(values_.size());
        for (std::size_t k = 0; k < rows.size(); ++k)
            if (values[k] != 0.0) values_.push_back(values[k]);
    }
    col_start_.push_back(row_index_.size());
}

void CovariateMatrix::Builder::add_binary_column(std::span<const std::uint32_t> rows) {
    std::int64_t previous = -1;
    for (std::uint32_t r : rows) {
        if (r >= rows_ || static_cast<std::int64_t>(r) <= previous)
            throw std::invalid_argument("column row indices must be ascending and in range");
        previous = r;
    }
    row_index_.insert(row_index_.end(), rows.begin(), rows.end());
    value_start_.push_back(kBinary);
    col_start_.push_back(row_index_.size());
}

void CovariateMatrix::Builder::add_dense_column(std::span<const double> values) {
    if (values.size() != rows_) throw std::invalid_argument("dense column has wrong length");
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0.0) {
            idx.push_back(static_cast<std::uint32_t>(i));
            val.push_back(values[i]);
        }
    }
    add_column(idx, val);
}

CovariateMatrix CovariateMatrix::Builder::build() && {
    CovariateMatrix m;
    m.rows_ = rows_;
    m.col_start_ = std::move(col_start_);
    m.value_start_ = std::move(value_start_);
    m.row_index_ = std::move(row_index_);
    m.values_ = std::move(values_);
    m.row_index_.shrink_to_fit();
    m.values_.shrink_to_fit();
    return m;
}

double CovariateMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols()) throw std::out_of_range("covariate index out of range");
    const Column c = column(j);
    auto it = std::lower_bound(c.rows.begin(), c.rows.end(), static_cast<std::uint32_t>(i));
    if (it == c.rows.end() || *it != i) return 0.0;
    return c.value(static_cast<std::size_t>(it - c.rows.begin()));
}

std::vector<double> CovariateMatrix::dense_column(std::size_t j) const {
    std::vector<double> out(rows_, 0.0);
    const Column c = column(j);
    for (std::size_t k = 0; k < c.size(); ++k) out[c.rows[k]] = c.value(k);
    return out;
}

void CovariateMatrix::multiply(std::span<const double> coef, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < cols(); ++j)
        if (coef[j] != 0.0) axpy(j, coef[j], out);
}

void CovariateMatrix::transpose_multiply(std::span<const double> v, std::span<double> out) const {
    for (std::size_t j = 0; j < cols(); ++j) out[j] = dot(j, v);
}

CovariateMatrix CovariateMatrix::select_columns(std::span<const std::size_t> columns) const {
    Builder b(rows_);
    for (std::size_t j : columns) {
        if (j >= cols()) throw std::out_of_range("column " + std::to_string(j) + " out of range");
        const Column c = column(j);
        if (c.binary())
            b.add_binary_column(c.rows);
        else
            b.add_column(c.rows, c.values);
    }
    return std::move(b).build();
}

CovariateMatrix CovariateMatrix::with_appended_column(std::span<const double> dense) const {
    if (dense.size() != rows_) throw std::invalid_argument("appended column has wrong length");
    CovariateMatrix m = *this;
    std::size_t nonbinary_start = m.values_.size();
    bool binary = true;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (dense[i] == 0.0) continue;
        m.row_index_.push_back(static_cast<std::uint32_t>(i));
        if (dense[i] != 1.0) binary = false;
    }
    if (binary) {
        m.value_start_.push_back(kBinary);
    } else {
        m.value_start_.push_back(nonbinary_start);
        for (double v : dense)
            if (v != 0.0) m.values_.push_back(v);
    }
    m.col_start_.push_back(m.row_index_.size());
    return m;
}

bool operator==(const CovariateMatrix& a, const CovariateMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const auto ca = a.column(j);
        const auto cb = b.column(j);
        if (ca.size() != cb.size()) return false;
        for (std::size_t k = 0; k < ca.size(); ++k)
            if (ca.rows[k] != cb.rows[k] || ca.value(k) != cb.value(k)) return false;
    }
    return true;
}

}  // namespace lsps
