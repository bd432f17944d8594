#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lsps/covariates.hpp"
#include "lsps/dataset.hpp"

namespace lsps {

struct InstrumentCandidate {
    std::size_t covariate = 0;
    std::string name;
    double treatment_correlation = 0.0;
    double outcome_correlation = 0.0;
};

// Covariates strongly correlated with treatment but weakly with the outcome.
// Nothing is removed here; exclusion is an explicit user decision.
struct InstrumentReport {
    std::vector<InstrumentCandidate> flagged;
    double treatment_threshold = 0.5;
    double outcome_threshold = 0.1;
    std::vector<std::string> notes;
};

InstrumentReport screen_instruments(const CovariateMatrix& x, std::span<const std::string> names,
                                    std::span<const std::uint8_t> treatment,
                                    std::span<const double> outcome, double treatment_threshold = 0.5,
                                    double outcome_threshold = 0.1);

// Uses y for continuous outcomes and the event indicator for survival outcomes.
InstrumentReport screen_instruments(const CohortDataset& data, double treatment_threshold = 0.5,
                                    double outcome_threshold = 0.1);

struct PreferenceScores {
    std::vector<double> values;
    double treated_fraction = 0.5;
};

// logit(f) = logit(p) - logit(treated_fraction), elementwise.
PreferenceScores compute_preference(std::span<const double> propensity, double treated_fraction);

struct EquipoiseReport {
    double fraction_in_band = 0.0;
    double band_low = 0.3;
    double band_high = 0.7;
    bool pass = false;
};

// Pooled fraction of subjects with preference in the closed band [0.3, 0.7];
// passes at one half or more.
EquipoiseReport check_equipoise(const PreferenceScores& preference);

struct Stratification {
    static constexpr int kTrimmed = -1;

    int k = 1;
    // Cut points in score units. A subject goes to the first stratum whose
    // upper cut point is >= its score; cut j is the largest treated score of
    // stratum j.
    std::vector<double> boundaries;
    std::vector<int> stratum_of;  // kTrimmed for subjects removed by trimming
    std::vector<std::string> warnings;

    std::vector<std::size_t> stratum_sizes() const;
};

Stratification single_stratum(std::size_t n);

// Strata with equal treated counts (within one) from the order statistics
// of the treated scores. Depends only on the ranks of `score`, so any strictly
// increasing transform of it (probability, logit) gives the same strata.
Stratification stratify(std::span<const double> score, std::span<const std::uint8_t> treatment,
                        int k, bool trim = false);

}  // namespace lsps
