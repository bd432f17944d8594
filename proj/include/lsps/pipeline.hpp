#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lsps/balance.hpp"
#include "lsps/dataset.hpp"
#include "lsps/effect.hpp"
#include "lsps/logistic.hpp"
#include "lsps/propensity.hpp"

namespace lsps {

struct PipelineConfig {
    int strata = 10;
    int cv_folds = 10;
    int lambda_count = 20;
    double lambda_min_ratio = 1e-4;
    std::vector<double> lambda_grid;  // overrides the default grid when set
    int cv_patience = 3;              // 0 scores every grid point
    bool trim = false;
    double instrument_treatment_threshold = 0.5;
    double instrument_outcome_threshold = 0.1;
    std::uint64_t seed = 20240601;
    int threads = 1;
    LogisticConfig logistic;
};

void validate(const PipelineConfig& config);

struct PropensityStage {
    PropensityModel model;
    std::vector<double> linear_predictor;
    std::vector<double> propensity;  // clamped
};

PropensityStage estimate_propensity(const CovariateMatrix& x, std::span<const std::uint8_t> treatment,
                                    const PipelineConfig& config);

// Propensity fit and stratification only; what the simulation estimators use.
struct StratifiedEstimate {
    PropensityStage propensity;
    Stratification strata;
    AteEstimate ate;
};

StratifiedEstimate lsps_ate(const CovariateMatrix& x, std::span<const std::uint8_t> treatment,
                            std::span<const double> y, const PipelineConfig& config);

struct Diagnostics {
    InstrumentReport instruments;
    PropensityStage propensity;
    PreferenceScores preference;
    EquipoiseReport equipoise;
    Stratification strata;
    BalanceReport balance;
    std::vector<std::string> warnings;

    // 0 when every diagnostic passes, 2 on equipoise failure, 3 on balance
    // failure; the larger code wins.
    int status() const noexcept;
};

Diagnostics run_diagnostics(const CohortDataset& data, const PipelineConfig& config);

struct Analysis {
    Diagnostics diagnostics;
    EffectEstimate estimate;
    EffectEstimate unadjusted;
};

Analysis run_analysis(const CohortDataset& data, const PipelineConfig& config);

}  // namespace lsps
