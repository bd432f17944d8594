#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lsps/covariates.hpp"
#include "lsps/dataset.hpp"
#include "lsps/propensity.hpp"

namespace lsps {

struct StratumWeights {
    // 1 / (subjects sharing the stratum and treatment group). Zero for trimmed
    // subjects and for every subject of a degenerate stratum.
    std::vector<double> w;
    std::vector<int> degenerate_strata;  // strata lacking a treated or a control subject
    std::vector<std::string> warnings;
};

StratumWeights stratum_weights(const Stratification& strat, std::span<const std::uint8_t> treatment);

// Weighted SMD with the frequency-weight variance
//   s_t^2 = W / (W^2 - sum w^2) * sum w (x - xbar)^2.
// Rows with zero weight are ignored. Zero pooled variance gives 0 for equal
// means and +-infinity otherwise.
double weighted_smd(std::span<const double> column, std::span<const std::uint8_t> treatment,
                    std::span<const double> weights);

struct BalanceRow {
    std::size_t covariate = 0;
    std::string name;
    double smd_before = 0.0;
    double smd_after = 0.0;
    // The covariate is nonzero for some subject of a degenerate stratum, so
    // the adjusted value does not cover that stratum.
    bool not_evaluable_in_degenerate = false;
};

struct BalanceReport {
    static constexpr double kThreshold = 0.1;

    std::vector<BalanceRow> rows;  // by covariate index
    double max_abs_unadjusted_smd = 0.0;
    double max_abs_adjusted_smd = 0.0;
    bool pass = true;
    std::vector<int> degenerate_strata;
    std::vector<std::string> warnings;
};

BalanceReport balance_report(const CovariateMatrix& x, std::span<const std::string> names,
                             std::span<const std::uint8_t> treatment, const Stratification& strat,
                             int threads = 1);
BalanceReport balance_report(const CohortDataset& data, const Stratification& strat, int threads = 1);

// covariate,name,smd_before,smd_after
void write_balance_csv(const BalanceReport& report, const std::filesystem::path& path);

}  // namespace lsps
