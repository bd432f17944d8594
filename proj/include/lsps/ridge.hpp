#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lsps/covariates.hpp"

namespace lsps {

struct RidgeConfig {
    double tolerance = 1e-6;  // relative residual of the normal equations
    int max_iterations = 1000;
};

// Minimiser of sum (u - b - x'beta)^2 + alpha * |beta|^2, intercept unpenalised.
struct RidgeFit {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double alpha = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Throws NumericalError when the conjugate-gradient solve does not converge,
// or when alpha = 0 and the centred design cannot have full column rank.
RidgeFit fit_ridge(const CovariateMatrix& x, std::span<const double> target, double alpha,
                   const RidgeConfig& config = {});

// One fit per alpha from a single shifted conjugate-gradient recurrence.
// Rows with zero weight are ignored. Never throws on non-convergence; check
// `converged` on each fit.
std::vector<RidgeFit> fit_ridge_path(const CovariateMatrix& x, std::span<const double> target,
                                     std::span<const double> alphas, const RidgeConfig& config = {},
                                     std::span<const double> row_weight = {});

std::vector<double> ridge_predict(const RidgeFit& fit, const CovariateMatrix& x);

// 1 - RSS/TSS of `fit` on (x, target). Throws DataError on a constant target.
double r_squared(const RidgeFit& fit, const CovariateMatrix& x, std::span<const double> target);

std::vector<double> default_ridge_alphas();

struct HeldoutR2 {
    double r2 = 0.0;       // mean held-out R^2 at the selected alpha
    double alpha = 0.0;
    std::vector<double> alphas;
    std::vector<double> mean_r2;  // NaN where some fold failed to converge
    int folds = 0;
    std::vector<std::string> warnings;
};

// K-fold held-out R^2 with alpha chosen to maximise the mean held-out R^2.
HeldoutR2 heldout_r_squared(const CovariateMatrix& x, std::span<const double> target,
                            std::span<const double> alphas, int k, std::uint64_t seed,
                            const RidgeConfig& config = {});

}  // namespace lsps
