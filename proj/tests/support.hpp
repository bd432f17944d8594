#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "lsps/covariates.hpp"
#include "lsps/rng.hpp"

namespace lsps::test {

inline CovariateMatrix from_columns(const std::vector<std::vector<double>>& cols, std::size_t rows) {
    CovariateMatrix::Builder b(rows);
    for (const auto& c : cols) b.add_dense_column(c);
    return std::move(b).build();
}

inline CovariateMatrix random_binary(std::size_t n, std::size_t m, double density, Rng& rng) {
    CovariateMatrix::Builder b(n);
    std::vector<std::uint32_t> rows;
    for (std::size_t j = 0; j < m; ++j) {
        rows.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (rng.bernoulli(density)) rows.push_back(static_cast<std::uint32_t>(i));
        b.add_binary_column(rows);
    }
    return std::move(b).build();
}

inline CovariateMatrix random_gaussian(std::size_t n, std::size_t m, Rng& rng) {
    CovariateMatrix::Builder b(n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < m; ++j) {
        for (auto& v : col) v = rng.normal();
        b.add_dense_column(col);
    }
    return std::move(b).build();
}

inline std::vector<std::vector<double>> to_dense(const CovariateMatrix& x) {
    std::vector<std::vector<double>> out;
    for (std::size_t j = 0; j < x.cols(); ++j) out.push_back(x.dense_column(j));
    return out;
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("lsps_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name, const std::string& contents) const {
        const auto p = path_ / name;
        std::ofstream(p) << contents;
        return p;
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace lsps::test
