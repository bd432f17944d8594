#include <cmath>
#include <vector>

#include "doctest.h"
#include "lsps/effect.hpp"
#include "lsps/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lsps;

namespace {

Stratification strata_from(std::vector<int> s) {
    Stratification out;
    out.k = 0;
    for (int v : s) out.k = std::max(out.k, v + 1);
    out.stratum_of = std::move(s);
    return out;
}

struct SurvivalSample {
    std::vector<double> time;
    std::vector<std::uint8_t> event, t;
    std::vector<int> stratum;
};

SurvivalSample random_survival(Rng& rng, std::size_t n, int k, double log_hr) {
    SurvivalSample s;
    for (std::size_t i = 0; i < n; ++i) {
        const int st = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        const std::uint8_t t = rng.bernoulli(0.3 + 0.1 * st);
        const double rate = std::exp(0.3 * st + log_hr * t);
        const double ev = -std::log(rng.uniform()) / rate;
        const double cens = -std::log(rng.uniform()) / 0.3;
        s.time.push_back(std::min(ev, cens));
        s.event.push_back(ev <= cens);
        s.t.push_back(t);
        s.stratum.push_back(st);
    }
    return s;
}

}  // namespace

TEST_CASE("ATE examples") {
    SUBCASE("single stratum difference of means") {
        const std::vector<double> y{3, 5, 1, 1};
        const std::vector<std::uint8_t> t{1, 1, 0, 0};
        const auto e = estimate_ate(y, t, single_stratum(4));
        CHECK(e.nu_hat == 3.0);
        CHECK(e.ci_low == doctest::Approx(3.0 - 1.96 * e.se));
        CHECK(e.ci_high == doctest::Approx(3.0 + 1.96 * e.se));
    }
    SUBCASE("equal strata average") {
        const std::vector<double> y{2, 1, 3, 0};
        const std::vector<std::uint8_t> t{1, 0, 1, 0};
        const auto e = estimate_ate(y, t, strata_from({0, 0, 1, 1}));
        CHECK(e.nu_hat == 2.0);
        CHECK(e.per_stratum.size() == 2);
    }
    SUBCASE("size-weighted pooling") {
        std::vector<double> y;
        std::vector<std::uint8_t> t;
        std::vector<int> s;
        for (int i = 0; i < 100; ++i) {
            y.push_back(i % 2 ? 1.0 : 1.0 + (i % 4 == 0));
            t.push_back(i % 2 == 0);
            s.push_back(0);
        }
        // Stratum 0: treated mean 1.5? make nu exactly 0 instead.
        for (int i = 0; i < 100; ++i) y[static_cast<std::size_t>(i)] = i % 4 < 2 ? 1.0 : 2.0;
        for (int i = 0; i < 300; ++i) {
            t.push_back(i % 2 == 0);
            y.push_back(i % 2 == 0 ? 5.0 + (i % 4 == 0) : 1.0 + (i % 4 == 1));
            s.push_back(1);
        }
        const auto e = estimate_ate(y, t, strata_from(s));
        REQUIRE(e.per_stratum.size() == 2);
        CHECK(e.per_stratum[0].nu == doctest::Approx(0.0));
        CHECK(e.per_stratum[1].nu == doctest::Approx(4.0));
        CHECK(e.per_stratum[0].weight == 0.25);
        CHECK(e.nu_hat == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("degenerate strata are dropped and weights renormalised") {
        const std::vector<double> y{2, 1, 3, 0, 7, 8};
        const std::vector<std::uint8_t> t{1, 0, 1, 0, 1, 1};
        const auto e = estimate_ate(y, t, strata_from({0, 0, 1, 1, 2, 2}));
        CHECK(e.dropped_strata == std::vector<int>{2});
        CHECK(e.nu_hat == 2.0);
        CHECK(e.warnings.size() == 1);
        CHECK_THROWS_AS(estimate_ate(y, t, strata_from({0, 1, 0, 1, 0, 0})), DataError);
    }
    SUBCASE("stratum relabelling and label swap") {
        Rng rng(5);
        std::vector<double> y(200);
        std::vector<std::uint8_t> t(200), swapped(200);
        std::vector<int> s(200), relabel(200);
        for (std::size_t i = 0; i < 200; ++i) {
            s[i] = static_cast<int>(i % 4);
            relabel[i] = 3 - s[i];
            t[i] = rng.bernoulli(0.5);
            swapped[i] = 1 - t[i];
            y[i] = s[i] + 2.0 * t[i] + rng.normal();
        }
        const auto a = estimate_ate(y, t, strata_from(s));
        const auto b = estimate_ate(y, t, strata_from(relabel));
        CHECK(a.nu_hat == doctest::Approx(b.nu_hat).epsilon(1e-14));
        CHECK(estimate_ate(y, swapped, strata_from(s)).nu_hat == doctest::Approx(-a.nu_hat).epsilon(1e-12));
    }
}

TEST_CASE("Cox four-subject fixture") {
    const double analytic = std::log((1 + std::sqrt(17.0)) / 2);
    const double coarse = test::cox_fixture_argmax(-5, 5, 1e-3);
    const double oracle = test::cox_fixture_argmax(coarse - 2e-3, coarse + 2e-3, 1e-6);
    CHECK(std::abs(oracle - analytic) <= 1e-6);

    const std::vector<double> time{1, 2, 3, 4};
    const std::vector<std::uint8_t> event{1, 1, 1, 1};
    const std::vector<std::uint8_t> t{1, 0, 1, 0};
    const auto fit = fit_cox_stratified(time, event, t, single_stratum(4));
    CHECK(std::abs(fit.zeta_hat - analytic) <= 1e-6);
    CHECK(fit.hr == doctest::Approx(2.5616).epsilon(1e-4));
    CHECK(fit.ci_low == doctest::Approx(std::exp(fit.zeta_hat - 1.96 * fit.se_zeta)));
    CHECK(fit.ci_high == doctest::Approx(std::exp(fit.zeta_hat + 1.96 * fit.se_zeta)));

    const std::vector<int> one(4, 0);
    CHECK(cox_partial_likelihood(time, event, t, one, 0.3).loglik == doctest::Approx(test::cox_fixture_loglik(0.3)));

    SUBCASE("two copies as two strata give the single-copy estimate") {
        const std::vector<double> t2{1, 2, 3, 4, 1, 2, 3, 4};
        const std::vector<std::uint8_t> e2(8, 1);
        const std::vector<std::uint8_t> tr2{1, 0, 1, 0, 1, 0, 1, 0};
        const auto f2 = fit_cox_stratified(t2, e2, tr2, strata_from({0, 0, 0, 0, 1, 1, 1, 1}));
        CHECK(f2.zeta_hat == doctest::Approx(fit.zeta_hat).epsilon(1e-9));
        REQUIRE(f2.per_stratum.size() == 2);
        CHECK(f2.per_stratum[0].zeta.value() == doctest::Approx(fit.zeta_hat).epsilon(1e-9));
    }
    SUBCASE("unadjusted equals the single-stratum fit") {
        const auto u = std::get<HazardRatioEstimate>(estimate_unadjusted(SurvivalOutcome{time, event}, t));
        CHECK(u.zeta_hat == fit.zeta_hat);
    }
}

TEST_CASE("Cox errors") {
    const std::vector<double> time{1, 2, 3, 4};
    const std::vector<std::uint8_t> event{1, 1, 1, 1};
    CHECK_THROWS_AS(fit_cox_stratified(time, event, std::vector<std::uint8_t>{0, 0, 0, 0}, single_stratum(4)),
                    NumericalError);
    CHECK_THROWS_AS(fit_cox_stratified(time, std::vector<std::uint8_t>{0, 0, 0, 0},
                                       std::vector<std::uint8_t>{1, 0, 1, 0}, single_stratum(4)),
                    DataError);
    // Every treated subject fails before any control: monotone likelihood.
    CHECK_THROWS_AS(fit_cox_stratified(time, event, std::vector<std::uint8_t>{1, 1, 0, 0}, single_stratum(4)),
                    NumericalError);
}

TEST_CASE("partial likelihood derivatives match finite differences") {
    Rng rng(19);
    for (int rep = 0; rep < 10; ++rep) {
        const auto s = random_survival(rng, 30, 3, 0.5);
        const double z = rng.normal(0, 0.7), h = 1e-5;
        const auto at = cox_partial_likelihood(s.time, s.event, s.t, s.stratum, z);
        const auto up = cox_partial_likelihood(s.time, s.event, s.t, s.stratum, z + h);
        const auto dn = cox_partial_likelihood(s.time, s.event, s.t, s.stratum, z - h);
        const double g = (up.loglik - dn.loglik) / (2 * h);
        const double hh = (up.score - dn.score) / (2 * h);
        CHECK(std::abs(at.score - g) <= 1e-5 * std::max(1.0, std::abs(g)));
        CHECK(std::abs(at.hessian - hh) <= 1e-5 * std::max(1.0, std::abs(hh)));
    }
}

TEST_CASE("Cox invariances") {
    Rng rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        auto s = random_survival(rng, 120, 3, 0.7);
        const auto strat = strata_from(s.stratum);
        const auto base = fit_cox_stratified(s.time, s.event, s.t, strat);

        auto cubed = s.time;
        for (auto& v : cubed) v = v * v * v;
        CHECK(fit_cox_stratified(cubed, s.event, s.t, strat).zeta_hat == doctest::Approx(base.zeta_hat).epsilon(1e-9));

        auto swapped = s.t;
        for (auto& v : swapped) v = 1 - v;
        CHECK(std::abs(fit_cox_stratified(s.time, s.event, swapped, strat).zeta_hat + base.zeta_hat) <= 1e-6);

        double first_event = INFINITY;
        for (std::size_t i = 0; i < s.time.size(); ++i)
            if (s.event[i]) first_event = std::min(first_event, s.time[i]);
        s.time.push_back(first_event / 2);
        s.event.push_back(0);
        s.t.push_back(1);
        s.stratum.push_back(0);
        CHECK(fit_cox_stratified(s.time, s.event, s.t, strata_from(s.stratum)).zeta_hat ==
              doctest::Approx(base.zeta_hat).epsilon(1e-9));
    }
}

TEST_CASE("Cox recovers a known log hazard ratio") {
    Rng rng(29);
    const auto s = random_survival(rng, 4000, 4, std::log(2.0));
    const auto fit = fit_cox_stratified(s.time, s.event, s.t, strata_from(s.stratum));
    CHECK(std::abs(fit.zeta_hat - std::log(2.0)) < 4 * fit.se_zeta);
}
