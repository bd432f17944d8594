#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lsps/covariates.hpp"

namespace lsps {

// Scores handed to downstream logits are clamped to [floor, 1 - floor].
inline constexpr double kProbabilityFloor = 1e-10;

struct LogisticConfig {
    double tolerance = 1e-6;  // max coefficient change per sweep
    int max_sweeps = 10000;
    double coefficient_guard = 1e4;
    // Rescale non-binary columns to unit standard deviation before penalising.
    bool standardize = false;
};

// L1-penalised logistic regression. The loss is the mean negative
// log-likelihood; the intercept is unpenalised.
struct LogisticFit {
    std::vector<double> coefficients;
    double intercept = 0.0;
    double lambda = 0.0;
    bool converged = false;
    int iterations = 0;
    double final_objective = 0.0;

    std::size_t nonzeros() const noexcept;
};

// Mean negative log-likelihood over the rows with nonzero weight (all rows
// when `row_weight` is empty).
double logistic_loss(const CovariateMatrix& x, std::span<const std::uint8_t> t, double intercept,
                     std::span<const double> coefficients, std::span<const double> row_weight = {});

// Gradient of logistic_loss; element 0 is the intercept, element j+1 covariate j.
std::vector<double> logistic_gradient(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                                      double intercept, std::span<const double> coefficients,
                                      std::span<const double> row_weight = {});

// Largest violation of the lasso optimality conditions at `fit`.
double kkt_residual(const LogisticFit& fit, const CovariateMatrix& x,
                    std::span<const std::uint8_t> t);

// Smallest lambda whose solution has every coefficient at zero.
double lambda_max(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                  std::span<const double> row_weight = {}, bool standardize = false);

// `count` log-spaced values from lambda_max down to lambda_max * min_ratio.
std::vector<double> default_lambda_grid(double lambda_max, int count = 20, double min_ratio = 1e-4);

LogisticFit fit_logistic_l1(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                            double lambda, const LogisticConfig& config = {});

// Fits along a descending grid, warm-starting each point from the previous.
std::vector<LogisticFit> fit_logistic_path(const CovariateMatrix& x,
                                           std::span<const std::uint8_t> t,
                                           std::span<const double> lambdas,
                                           const LogisticConfig& config = {},
                                           std::span<const double> row_weight = {});

std::vector<double> linear_predictor(const LogisticFit& fit, const CovariateMatrix& x);
std::vector<double> predict_proba(const LogisticFit& fit, const CovariateMatrix& x);

struct CvResult {
    std::vector<double> lambda_grid;
    std::vector<double> mean_heldout_loglik;
    double selected_lambda = 0.0;
    std::size_t selected_index = 0;
    std::uint64_t seed = 0;
    int folds = 0;
    std::size_t evaluated = 0;  // grid points scored; later entries are NaN
};

// K-fold cross-validation of the held-out mean log-likelihood over a
// descending grid. Ties go to the larger lambda. The scan stops after
// `patience` consecutive points without improvement (0 scans the full grid).
CvResult cv_select_lambda(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                          std::span<const double> grid, int k, std::uint64_t seed,
                          const LogisticConfig& config = {}, int threads = 1, int patience = 3);

struct PropensityModel {
    LogisticFit fit;
    CvResult cv;
};

// Cross-validates lambda (default grid when `grid` is empty) and refits on
// all rows, warm-starting down the grid to the selected value.
PropensityModel fit_propensity_model(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                                     std::span<const double> grid, int k, std::uint64_t seed,
                                     const LogisticConfig& config = {}, int threads = 1,
                                     int patience = 3);

}  // namespace lsps
