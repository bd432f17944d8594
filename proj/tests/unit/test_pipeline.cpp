#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "doctest.h"
#include "lsps/error.hpp"
#include "lsps/pipeline.hpp"
#include "support.hpp"

using namespace lsps;

namespace {

struct Cohort {
    CovariateMatrix x;
    std::vector<std::string> names;
    Treatment t;
    std::vector<double> y;
};

// Column 0 confounds: it raises both treatment odds and the outcome.
Cohort confounded(std::size_t n, std::uint64_t seed, double effect = 1.5, double strength = 1.5) {
    Rng rng(seed);
    Cohort c;
    c.x = test::random_binary(n, 12, 0.4, rng);
    const auto x0 = c.x.dense_column(0);
    const auto x1 = c.x.dense_column(1);
    c.t.resize(n);
    c.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double eta = -0.5 + strength * x0[i] + 0.5 * x1[i];
        c.t[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta))) ? 1 : 0;
        c.y[i] = 2.0 * x0[i] + effect * c.t[i] + rng.normal(0.0, 0.5);
    }
    for (std::size_t j = 0; j < 12; ++j) c.names.push_back("c" + std::to_string(j));
    return c;
}

PipelineConfig quick() {
    PipelineConfig p;
    p.cv_folds = 5;
    p.lambda_count = 12;
    p.lambda_min_ratio = 1e-3;
    p.strata = 5;
    return p;
}

}  // namespace

TEST_CASE("pipeline config validation") {
    PipelineConfig p;
    CHECK_NOTHROW(validate(p));
    p.strata = 0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = {};
    p.cv_folds = 1;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = {};
    p.lambda_grid = {0.1, 0.2};
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = {};
    p.lambda_min_ratio = 0.0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = {};
    p.cv_patience = -1;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = {};
    p.threads = 0;
    CHECK_THROWS_AS(validate(p), ConfigError);
}

TEST_CASE("propensity stage") {
    const auto c = confounded(600, 1);
    const auto stage = estimate_propensity(c.x, c.t, quick());
    REQUIRE(stage.propensity.size() == 600);
    for (std::size_t i = 0; i < 600; ++i) {
        CHECK(stage.propensity[i] >= kProbabilityFloor);
        CHECK(stage.propensity[i] <= 1.0 - kProbabilityFloor);
        CHECK(stage.propensity[i] == doctest::Approx(1.0 / (1.0 + std::exp(-stage.linear_predictor[i]))));
    }
    CHECK(stage.model.fit.coefficients[0] > 0.5);
    CHECK(stage.model.cv.folds == 5);
    CHECK(stage.model.cv.evaluated >= 1);
}

TEST_CASE("propensity stage is deterministic under the seed") {
    const auto c = confounded(400, 2);
    auto p = quick();
    const auto a = estimate_propensity(c.x, c.t, p);
    const auto b = estimate_propensity(c.x, c.t, p);
    CHECK(a.linear_predictor == b.linear_predictor);
    p.threads = 3;
    const auto d = estimate_propensity(c.x, c.t, p);
    CHECK(a.linear_predictor == d.linear_predictor);
}

TEST_CASE("signal-free covariates still give a usable grid") {
    const std::size_t n = 60;
    CovariateMatrix::Builder b(n);
    b.add_binary_column({});
    const auto x = std::move(b).build();
    Treatment t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = i % 3 == 0;
    const auto stage = estimate_propensity(x, t, quick());
    CHECK(stage.propensity[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("stratified estimate removes confounding bias") {
    double adjusted = 0.0, naive = 0.0;
    const int reps = 5;
    for (int r = 0; r < reps; ++r) {
        const auto c = confounded(2000, 10 + r);
        const auto e = lsps_ate(c.x, c.t, c.y, quick());
        adjusted += e.ate.nu_hat;
        naive += estimate_ate(c.y, c.t, single_stratum(c.y.size())).nu_hat;
        CHECK(e.strata.k >= 1);
    }
    adjusted /= reps;
    naive /= reps;
    CHECK(naive > 2.0);
    CHECK(std::abs(adjusted - 1.5) < 0.15);
}

TEST_CASE("diagnostics and analysis on a continuous cohort") {
    const auto c = confounded(1500, 20);
    const CohortDataset data(c.x, c.names, c.t, ContinuousOutcome{c.y});
    const auto p = quick();
    const auto d = run_diagnostics(data, p);
    CHECK(d.balance.rows.size() == 12);
    CHECK(d.balance.max_abs_unadjusted_smd > d.balance.max_abs_adjusted_smd);
    CHECK(d.preference.values.size() == 1500);
    CHECK(d.status() == (d.balance.pass ? (d.equipoise.pass ? 0 : 2) : 3));

    const auto a = run_analysis(data, p);
    REQUIRE(std::holds_alternative<AteEstimate>(a.estimate));
    REQUIRE(std::holds_alternative<AteEstimate>(a.unadjusted));
    const auto& est = std::get<AteEstimate>(a.estimate);
    CHECK(est.ci_low < est.nu_hat);
    CHECK(est.ci_high > est.nu_hat);
    CHECK(std::abs(est.nu_hat - 1.5) < std::abs(std::get<AteEstimate>(a.unadjusted).nu_hat - 1.5));
}

TEST_CASE("one stratum leaves confounded covariates unbalanced") {
    const auto c = confounded(1500, 21, 1.5, 2.5);
    const CohortDataset data(c.x, c.names, c.t, ContinuousOutcome{c.y});
    auto p = quick();
    p.strata = 1;
    const auto d = run_diagnostics(data, p);
    CHECK_FALSE(d.balance.pass);
    CHECK(d.status() == 3);
}

TEST_CASE("diagnostic status precedence") {
    Diagnostics d;
    d.balance.pass = true;
    d.equipoise.pass = true;
    CHECK(d.status() == 0);
    d.equipoise.pass = false;
    CHECK(d.status() == 2);
    d.balance.pass = false;
    CHECK(d.status() == 3);
    d.equipoise.pass = true;
    CHECK(d.status() == 3);
}

TEST_CASE("survival analysis returns a hazard ratio") {
    const auto c = confounded(800, 30);
    Rng rng(99);
    SurvivalOutcome s;
    const auto x0 = c.x.dense_column(0);
    for (std::size_t i = 0; i < 800; ++i) {
        const double rate = std::exp(0.7 * x0[i] - 0.4 * c.t[i]);
        const double time = -std::log(rng.uniform()) / rate;
        const double censor = -std::log(rng.uniform()) / 0.3;
        s.time.push_back(std::min(time, censor));
        s.event.push_back(time <= censor ? 1 : 0);
    }
    const CohortDataset data(c.x, c.names, c.t, s);
    const auto a = run_analysis(data, quick());
    REQUIRE(std::holds_alternative<HazardRatioEstimate>(a.estimate));
    const auto& hr = std::get<HazardRatioEstimate>(a.estimate);
    CHECK(hr.hr == doctest::Approx(std::exp(hr.zeta_hat)));
    CHECK(hr.ci_low < hr.hr);
    CHECK(hr.hr < hr.ci_high);
    CHECK(std::abs(hr.zeta_hat + 0.4) < 0.3);
}

TEST_CASE("single-group cohort is rejected") {
    auto c = confounded(100, 40);
    std::fill(c.t.begin(), c.t.end(), 1);
    const CohortDataset data(c.x, c.names, c.t, ContinuousOutcome{c.y});
    CHECK_THROWS_AS(run_diagnostics(data, quick()), DataError);
}
