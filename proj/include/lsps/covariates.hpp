#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lsps {

// Column-major sparse covariate matrix. Each column keeps its nonzero row
// indices in ascending order; columns whose nonzeros are all exactly 1 are
// stored as index lists only.
class CovariateMatrix {
public:
    struct Column {
        std::span<const std::uint32_t> rows;
        std::span<const double> values;  // empty: every listed entry is 1

        bool binary() const noexcept { return values.empty(); }
        std::size_t size() const noexcept { return rows.size(); }
        double value(std::size_t k) const noexcept { return values.empty() ? 1.0 : values[k]; }
    };

    class Builder {
    public:
        explicit Builder(std::size_t rows);

        // Entries must be sorted by row; zeros are dropped.
        void add_column(std::span<const std::uint32_t> rows, std::span<const double> values);
        void add_binary_column(std::span<const std::uint32_t> rows);
        void add_dense_column(std::span<const double> values);

        std::size_t rows() const noexcept { return rows_; }
        CovariateMatrix build() &&;

    private:
        std::size_t rows_;
        std::vector<std::size_t> col_start_{0};
        std::vector<std::size_t> value_start_;
        std::vector<std::uint32_t> row_index_;
        std::vector<double> values_;
    };

    CovariateMatrix() = default;

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return value_start_.size(); }
    std::size_t nonzeros() const noexcept { return row_index_.size(); }

    Column column(std::size_t j) const noexcept {
        const std::size_t b = col_start_[j];
        const std::size_t n = col_start_[j + 1] - b;
        Column c{{row_index_.data() + b, n}, {}};
        if (value_start_[j] != kBinary) c.values = {values_.data() + value_start_[j], n};
        return c;
    }

    double at(std::size_t i, std::size_t j) const;
    std::vector<double> dense_column(std::size_t j) const;
    bool column_is_binary(std::size_t j) const noexcept { return value_start_[j] == kBinary; }

    // x_j . v
    double dot(std::size_t j, std::span<const double> v) const noexcept {
        const Column c = column(j);
        double s = 0.0;
        if (c.binary()) {
            for (std::uint32_t i : c.rows) s += v[i];
        } else {
            for (std::size_t k = 0; k < c.rows.size(); ++k) s += c.values[k] * v[c.rows[k]];
        }
        return s;
    }

    // out += a * x_j
    void axpy(std::size_t j, double a, std::span<double> out) const noexcept {
        const Column c = column(j);
        if (c.binary()) {
            for (std::uint32_t i : c.rows) out[i] += a;
        } else {
            for (std::size_t k = 0; k < c.rows.size(); ++k) out[c.rows[k]] += a * c.values[k];
        }
    }

    // out = X coef
    void multiply(std::span<const double> coef, std::span<double> out) const;
    // out_j = x_j . v for every column
    void transpose_multiply(std::span<const double> v, std::span<double> out) const;

    CovariateMatrix select_columns(std::span<const std::size_t> columns) const;
    CovariateMatrix with_appended_column(std::span<const double> dense) const;

    friend bool operator==(const CovariateMatrix&, const CovariateMatrix&);

private:
    static constexpr std::size_t kBinary = static_cast<std::size_t>(-1);

    std::size_t rows_ = 0;
    std::vector<std::size_t> col_start_{0};
    std::vector<std::size_t> value_start_;
    std::vector<std::uint32_t> row_index_;
    std::vector<double> values_;
};

}  // namespace lsps
