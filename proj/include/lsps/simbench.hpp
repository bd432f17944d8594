#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lsps/covariates.hpp"
#include "lsps/dataset.hpp"
#include "lsps/pipeline.hpp"

namespace lsps {

struct Sim1Config {
    std::size_t n = 2000;
    std::size_t m = 1000;
    std::size_t k_latent = 10;
    double beta_x_sd = 0.1;
    double sparsity_u = 0.99;
    double sparsity_gamma = 0.99;
    double gamma_u = 1.0;
    double eta_u = 1.0;
    double nu_true = 2.0;
    double outcome_noise_var = 0.1;
    double sigma2 = 0.0;
    int replicates = 100;
    std::uint64_t master_seed = 1;
};

struct Sim2Config {
    std::size_t n = 10000;
    std::size_t m = 1000;
    std::size_t k_latent = 10;
    double gamma_u = 1.0;
    double eta_u = 1.0;
    double nu_true = 2.0;
    std::size_t n_confounders = 10;
    int replicates = 20;
    std::uint64_t master_seed = 1;
};

void validate(const Sim1Config& cfg);
void validate(const Sim2Config& cfg);

struct SimDataset {
    std::size_t k_latent = 0;
    std::vector<std::uint8_t> v;  // N x K, row-major
    CovariateMatrix x;
    std::vector<double> u;
    Treatment t;
    std::vector<double> y;
    std::vector<double> p_true;
    double nu_true = 2.0;
};

// Coefficients and subject draws both come from streams keyed by
// (master_seed, replicate).
SimDataset generate_sim1(const Sim1Config& cfg, int replicate);
SimDataset generate_sim2(const Sim2Config& cfg, int replicate);

enum class Method { unadjusted, lsps, oracle };
inline constexpr Method kMethods[] = {Method::unadjusted, Method::lsps, Method::oracle};
std::string_view method_name(Method m);

struct EstimatorResult {
    double nu_hat = 0.0;
    std::optional<std::vector<double>> ps_hat;
    std::vector<std::string> warnings;
};

EstimatorResult run_estimator(const SimDataset& ds, Method method, const PipelineConfig& config);

// Held-out ridge R^2 of u on x (5 folds, alpha grid 1e-4..1e2).
double pinpointability_r2(const SimDataset& ds, std::uint64_t seed);

struct PropensityError {
    double sum_sq = 0.0;
    std::size_t count = 0;
};
PropensityError propensity_error(std::span<const double> p_hat, std::span<const double> p_true);

struct SimSummary {
    double mean = 0.0;
    double bias = 0.0;
    double variance = 0.0;  // about the replicate mean, population denominator
    double rmse = 0.0;
    std::optional<double> rmse_propensity;  // pooled over subjects and replicates
    std::size_t replicates = 0;
    double rmse_se = 0.0;  // delta-method standard error of rmse
};

SimSummary aggregate(std::span<const double> estimates, double nu_true,
                     std::span<const PropensityError> propensity = {});

struct SweepPoint {
    std::string param;  // "sigma2", or "m@n=<N>" for the second simulation
    double value = 0.0;
};

struct ReplicateRecord {
    std::size_t point = 0;
    int replicate = 0;
    Method method = Method::unadjusted;
    double estimate = 0.0;  // NaN when the estimator failed
    std::optional<double> ps_rmse;
    std::optional<double> r2;
    std::vector<std::string> warnings;
};

struct SweepRow {
    std::size_t point = 0;
    Method method = Method::unadjusted;
    SimSummary summary;
    std::optional<double> r2;  // replicate mean
    std::size_t failed = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<ReplicateRecord> records;  // by point, replicate, method
    std::vector<SweepRow> rows;             // by point, method

    const SweepRow& row(std::size_t point, Method method) const;
};

struct SimOptions {
    PipelineConfig pipeline;
    bool compute_r2 = true;
    int threads = 1;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

// Seeds for grid point g are derived from (master_seed, g), so each point is
// reproducible on its own.
std::uint64_t point_seed(std::uint64_t master, std::size_t point);

SweepResult run_sim1_sweep(const Sim1Config& base, std::span<const double> sigma2_grid,
                           const SimOptions& options);
SweepResult run_sim2_sweep(const Sim2Config& base, std::span<const std::size_t> n_grid,
                           std::span<const std::size_t> m_grid, const SimOptions& options);

// sweep_param,value,method,replicate,estimate,ps_rmse,r2
void write_raw_csv(const SweepResult& result, const std::filesystem::path& path);
// sweep_param,value,method,bias,variance,rmse,rmse_propensity,r2,replicates,failed
void write_aggregate_csv(const SweepResult& result, const std::filesystem::path& path);

}  // namespace lsps
