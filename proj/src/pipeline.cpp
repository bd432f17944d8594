#include "lsps/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "lsps/error.hpp"

namespace lsps {

namespace {

double clamp_probability(double eta) {
    const double p = 1.0 / (1.0 + std::exp(-eta));
    return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
    to.insert(to.end(), from.begin(), from.end());
}

}  // namespace

void validate(const PipelineConfig& c) {
    if (c.strata < 1) throw ConfigError("strata must be at least 1");
    if (c.cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
    if (c.lambda_grid.empty() && c.lambda_count < 1) throw ConfigError("lambda_count must be at least 1");
    if (!(c.lambda_min_ratio > 0.0 && c.lambda_min_ratio <= 1.0))
        throw ConfigError("lambda_min_ratio must lie in (0, 1]");
    for (std::size_t k = 0; k < c.lambda_grid.size(); ++k) {
        if (!(c.lambda_grid[k] >= 0.0)) throw ConfigError("lambda grid values must be nonnegative");
        if (k > 0 && c.lambda_grid[k] > c.lambda_grid[k - 1])
            throw ConfigError("lambda grid must be descending");
    }
    if (c.cv_patience < 0) throw ConfigError("cv_patience must be >= 0");
    if (c.threads < 1) throw ConfigError("threads must be at least 1");
    if (!(c.logistic.tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
    if (c.logistic.max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
}

PropensityStage estimate_propensity(const CovariateMatrix& x, std::span<const std::uint8_t> treatment,
                                    const PipelineConfig& config) {
    validate(config);
    std::vector<double> grid = config.lambda_grid;
    if (grid.empty()) {
        const double lmax = lambda_max(x, treatment, {}, config.logistic.standardize);
        // Covariates carrying no signal at all still need a usable grid.
        grid = default_lambda_grid(lmax > 0.0 ? lmax : 1e-8, config.lambda_count, config.lambda_min_ratio);
    }
    PropensityStage stage;
    stage.model = fit_propensity_model(x, treatment, grid, config.cv_folds, config.seed, config.logistic,
                                       config.threads, config.cv_patience);
    stage.linear_predictor = linear_predictor(stage.model.fit, x);
    stage.propensity.resize(stage.linear_predictor.size());
    std::transform(stage.linear_predictor.begin(), stage.linear_predictor.end(), stage.propensity.begin(),
                   clamp_probability);
    return stage;
}

StratifiedEstimate lsps_ate(const CovariateMatrix& x, std::span<const std::uint8_t> treatment,
                            std::span<const double> y, const PipelineConfig& config) {
    StratifiedEstimate out;
    out.propensity = estimate_propensity(x, treatment, config);
    out.strata = stratify(out.propensity.linear_predictor, treatment, config.strata, config.trim);
    out.ate = estimate_ate(y, treatment, out.strata);
    return out;
}

int Diagnostics::status() const noexcept {
    if (!balance.pass) return 3;
    if (!equipoise.pass) return 2;
    return 0;
}

Diagnostics run_diagnostics(const CohortDataset& data, const PipelineConfig& config) {
    validate(config);
    data.require_both_groups();
    Diagnostics d;
    d.instruments = screen_instruments(data, config.instrument_treatment_threshold,
                                       config.instrument_outcome_threshold);
    append(d.warnings, d.instruments.notes);
    if (!d.instruments.flagged.empty())
        d.warnings.push_back(std::to_string(d.instruments.flagged.size()) +
                             " covariates look like instruments; review and exclude them if appropriate");

    d.propensity = estimate_propensity(data.covariates(), data.treatment(), config);
    if (!d.propensity.model.fit.converged)
        d.warnings.push_back("propensity model reached the sweep cap without converging");
    const double rate = static_cast<double>(data.n_treated()) / static_cast<double>(data.n_subjects());
    d.preference = compute_preference(d.propensity.propensity, rate);
    d.equipoise = check_equipoise(d.preference);
    if (!d.equipoise.pass)
        d.warnings.push_back("equipoise check failed; interpret estimates with caution");

    d.strata = stratify(d.propensity.linear_predictor, data.treatment(), config.strata, config.trim);
    append(d.warnings, d.strata.warnings);
    d.balance = balance_report(data, d.strata, config.threads);
    append(d.warnings, d.balance.warnings);
    if (!d.balance.pass) d.warnings.push_back("covariate balance check failed; interpret estimates with caution");
    return d;
}

Analysis run_analysis(const CohortDataset& data, const PipelineConfig& config) {
    Diagnostics d = run_diagnostics(data, config);
    EffectEstimate estimate = estimate_effect(data.outcome(), data.treatment(), d.strata);
    EffectEstimate unadjusted = estimate_unadjusted(data.outcome(), data.treatment());
    std::visit([&](const auto& e) { append(d.warnings, e.warnings); }, estimate);
    return Analysis{std::move(d), std::move(estimate), std::move(unadjusted)};
}

}  // namespace lsps
