#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lsps/dataset.hpp"
#include "lsps/propensity.hpp"

namespace lsps {

struct StratumEffect {
    int stratum = 0;
    double nu = 0.0;
    double se = 0.0;
    double weight = 0.0;
    std::size_t size = 0;
};

struct AteEstimate {
    double nu_hat = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::vector<StratumEffect> per_stratum;
    std::vector<int> dropped_strata;
    std::vector<std::string> warnings;
};

// Per-stratum difference in means pooled with weights proportional to
// stratum size. Strata missing a group are dropped and the rest renormalised.
AteEstimate estimate_ate(std::span<const double> y, std::span<const std::uint8_t> treatment,
                         const Stratification& strat);

struct StratumHazard {
    int stratum = 0;
    std::optional<double> zeta;  // empty when not estimable on its own
    std::size_t size = 0;
    std::size_t events = 0;
};

struct HazardRatioEstimate {
    double zeta_hat = 0.0;
    double hr = 1.0;
    double se_zeta = 0.0;
    double ci_low = 0.0;   // HR scale
    double ci_high = 0.0;  // HR scale
    int iterations = 0;
    std::vector<StratumHazard> per_stratum;
    std::vector<std::string> warnings;
};

// Log partial likelihood (Breslow ties, stratum-specific risk sets) and its
// first and second derivative in zeta.
struct PartialLikelihood {
    double loglik = 0.0;
    double score = 0.0;
    double hessian = 0.0;  // second derivative; minus the observed information
};

PartialLikelihood cox_partial_likelihood(std::span<const double> time,
                                         std::span<const std::uint8_t> event,
                                         std::span<const std::uint8_t> treatment,
                                         std::span<const int> stratum_of, double zeta);

// Shared-coefficient stratified Cox fit by safeguarded Newton. Throws
// NumericalError when the coefficient diverges past |zeta| = 20 or the data
// carry no contrast, DataError when there are no events.
HazardRatioEstimate fit_cox_stratified(std::span<const double> time,
                                       std::span<const std::uint8_t> event,
                                       std::span<const std::uint8_t> treatment,
                                       const Stratification& strat);

using EffectEstimate = std::variant<AteEstimate, HazardRatioEstimate>;

EffectEstimate estimate_effect(const Outcome& outcome, std::span<const std::uint8_t> treatment,
                               const Stratification& strat);

// The matching estimator over one all-subjects stratum.
EffectEstimate estimate_unadjusted(const Outcome& outcome, std::span<const std::uint8_t> treatment);

}  // namespace lsps
