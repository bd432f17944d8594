// Randomised invariants, 50 seeds each. Generators are hand-rolled on top of
// the library's counter-based Rng so every failure names a reproducible seed.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lsps/balance.hpp"
#include "lsps/dataset.hpp"
#include "lsps/effect.hpp"
#include "lsps/error.hpp"
#include "lsps/logistic.hpp"
#include "lsps/pipeline.hpp"
#include "lsps/propensity.hpp"
#include "lsps/ridge.hpp"
#include "lsps/simbench.hpp"
#include "support.hpp"

using namespace lsps;

namespace {

constexpr std::uint64_t kSeeds = 50;

Rng gen(std::uint64_t seed, const char* what) { return Rng::stream(seed, {label("property"), label(what)}); }

std::size_t between(Rng& r, std::size_t lo, std::size_t hi) { return lo + r.below(hi - lo + 1); }

// Treatment with both groups and at least `min_each` in each.
Treatment random_treatment(Rng& r, std::size_t n, std::size_t min_each = 2) {
    Treatment t(n);
    const double rate = 0.2 + 0.6 * r.uniform();
    for (;;) {
        for (auto& v : t) v = r.bernoulli(rate);
        const auto treated = static_cast<std::size_t>(std::count(t.begin(), t.end(), 1));
        if (treated >= min_each && n - treated >= min_each) return t;
    }
}

std::vector<double> random_vector(Rng& r, std::size_t n, double sd = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = r.normal(0.0, sd);
    return v;
}

// Mix of binary and Gaussian columns, some with integer values.
CovariateMatrix random_covariates(Rng& r, std::size_t n, std::size_t m) {
    CovariateMatrix::Builder b(n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < m; ++j) {
        const auto kind = r.below(3);
        const double density = 0.05 + 0.9 * r.uniform();
        for (auto& v : col) {
            if (kind == 0) v = r.bernoulli(density) ? 1.0 : 0.0;
            else if (kind == 1) v = r.normal();
            else v = r.bernoulli(density) ? static_cast<double>(r.below(50)) : 0.0;
        }
        b.add_dense_column(col);
    }
    return std::move(b).build();
}

Stratification random_strata(Rng& r, std::size_t n, int k) {
    Stratification s;
    s.k = k;
    s.stratum_of.resize(n);
    for (auto& v : s.stratum_of) v = static_cast<int>(r.below(static_cast<std::uint64_t>(k)));
    return s;
}

struct Survival {
    std::vector<double> time;
    std::vector<std::uint8_t> event;
    Treatment t;
    Stratification strata;
};

Survival random_survival(Rng& r) {
    Survival s;
    const std::size_t n = between(r, 20, 150);
    const int k = static_cast<int>(between(r, 1, 4));
    const double zeta = r.normal(0.0, 0.7);
    s.t = random_treatment(r, n, 3);
    s.strata = random_strata(r, n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const double rate = std::exp(zeta * s.t[i] + 0.3 * s.strata.stratum_of[i]);
        const double event_time = -std::log(r.uniform()) / rate;
        const double censor = -std::log(r.uniform()) / 0.4;
        // Rounded to create ties.
        s.time.push_back(std::max(0.01, std::round(std::min(event_time, censor) * 20.0) / 20.0));
        s.event.push_back(event_time <= censor ? 1 : 0);
    }
    if (std::count(s.event.begin(), s.event.end(), 1) == 0) s.event[0] = 1;
    return s;
}

}  // namespace

TEST_SUITE("properties") {

TEST_CASE("dense csv round trip is value identical") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "roundtrip");
        const std::size_t n = between(r, 4, 60), m = between(r, 1, 8);
        std::vector<std::string> names;
        for (std::size_t j = 0; j < m; ++j) names.push_back("v" + std::to_string(j));
        const CohortDataset d(random_covariates(r, n, m), names, random_treatment(r, n, 1),
                              ContinuousOutcome{random_vector(r, n, 3.0)});
        test::TempDir dir;
        DenseSchema schema;
        schema.outcome = "y";
        write_dense_csv(d, dir.path() / "d.csv", schema);
        const auto back = load_dense_csv(dir.path() / "d.csv", schema);
        CHECK(back.covariates() == d.covariates());
        CHECK(back.covariate_names() == d.covariate_names());
        CHECK(back.treatment() == d.treatment());
        CHECK(std::get<ContinuousOutcome>(back.outcome()).y == std::get<ContinuousOutcome>(d.outcome()).y);
    }
}

TEST_CASE("sparse and dense loaders agree on random cohorts") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "loaders");
        const std::size_t n = between(r, 3, 40), m = between(r, 1, 6);
        const auto x = random_covariates(r, n, m);
        const auto t = random_treatment(r, n, 1);
        const auto y = random_vector(r, n);
        std::ostringstream dense, trip, dict, subj;
        dense.precision(17);
        trip.precision(17);
        subj.precision(17);
        dense << "id,t,y";
        for (std::size_t j = 0; j < m; ++j) dense << ",v" << j;
        dense << '\n';
        trip << "subject_id,covariate_id,value\n";
        dict << "covariate_id,name\n";
        for (std::size_t j = 0; j < m; ++j) dict << "c" << j << ",v" << j << '\n';
        subj << "subject_id,treatment,y\n";
        for (std::size_t i = 0; i < n; ++i) {
            dense << 's' << i << ',' << int(t[i]) << ',' << y[i];
            subj << 's' << i << ',' << int(t[i]) << ',' << y[i] << '\n';
            for (std::size_t j = 0; j < m; ++j) {
                const double v = x.at(i, j);
                dense << ',' << v;
                if (v != 0.0) trip << 's' << i << ",c" << j << ',' << v << '\n';
            }
            dense << '\n';
        }
        test::TempDir dir;
        DenseSchema schema;
        schema.outcome = "y";
        schema.id = "id";
        const auto a = load_dense_csv(dir.file("d.csv", dense.str()), schema);
        const auto b = load_sparse(dir.file("t.csv", trip.str()), dir.file("k.csv", dict.str()),
                                   dir.file("s.csv", subj.str()));
        CHECK(a.covariates() == b.covariates());
        CHECK(a.covariates() == x);
        CHECK(a.treatment() == b.treatment());
    }
}

TEST_CASE("fold assignment is pure and seed sensitive") {
    std::size_t same = 0;
    const auto base = assign_folds(200, 5, 0);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto a = assign_folds(200, 5, seed);
        CHECK(a.fold_of == assign_folds(200, 5, seed).fold_of);
        if (a.fold_of == base.fold_of) ++same;
    }
    CHECK(same == 0);
}

TEST_CASE("logistic gradient matches central differences") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "gradient");
        const std::size_t n = between(r, 10, 80), m = between(r, 1, 6);
        const auto x = random_covariates(r, n, m);
        const auto t = random_treatment(r, n, 1);
        auto theta = random_vector(r, m, 0.05);
        const double b0 = r.normal(0.0, 0.5);
        const auto g = logistic_gradient(x, t, b0, theta);
        const double h = 1e-5;
        for (std::size_t j = 0; j <= m; ++j) {
            auto up = theta, down = theta;
            double bu = b0, bd = b0;
            if (j == 0) {
                bu += h;
                bd -= h;
            } else {
                up[j - 1] += h;
                down[j - 1] -= h;
            }
            const double fd = (logistic_loss(x, t, bu, up) - logistic_loss(x, t, bd, down)) / (2 * h);
            CHECK(std::abs(fd - g[j]) <= 1e-6 * std::max(1.0, std::abs(g[j])));
        }
    }
}

TEST_CASE("lasso fits satisfy KKT on random instances") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "kkt");
        const std::size_t n = between(r, 30, 500), m = between(r, 1, 50);
        const auto x = test::random_binary(n, m, 0.05 + 0.6 * r.uniform(), r);
        const auto t = random_treatment(r, n, 2);
        const double lam = lambda_max(x, t) * std::pow(10.0, -3.0 * r.uniform());
        const auto fit = fit_logistic_l1(x, t, lam);
        CHECK(fit.converged);
        CHECK(kkt_residual(fit, x, t) <= 1e-4);
    }
}

TEST_CASE("ridge with a huge penalty returns the mean") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "ridge");
        const std::size_t n = between(r, 5, 100), m = between(r, 1, 10);
        const auto x = random_covariates(r, n, m);
        const auto y = random_vector(r, n, 2.0);
        const auto fit = fit_ridge(x, y, 1e12);
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
        for (double c : fit.coefficients) CHECK(std::abs(c) < 1e-6);
        CHECK(fit.intercept == doctest::Approx(mean).epsilon(1e-6));
    }
}

TEST_CASE("preference preserves the order of propensities") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "preference");
        const std::size_t n = between(r, 2, 200);
        std::vector<double> p(n);
        for (auto& v : p) v = 0.001 + 0.998 * r.uniform();
        const auto f = compute_preference(p, 0.05 + 0.9 * r.uniform()).values;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; k += 7) {
                if (p[i] < p[k]) CHECK(f[i] < f[k]);
                if (p[i] == p[k]) CHECK(f[i] == f[k]);
            }
    }
}

TEST_CASE("strata depend only on score ranks and cover every subject") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "strata");
        const std::size_t n = between(r, 20, 400);
        const auto t = random_treatment(r, n, 10);
        const auto score = random_vector(r, n, 2.0);
        const int k = static_cast<int>(between(r, 1, 10));
        const auto s = stratify(score, t, k);
        std::vector<double> cubed(n), squashed(n);
        for (std::size_t i = 0; i < n; ++i) {
            cubed[i] = score[i] * score[i] * score[i] + 3.0;
            squashed[i] = 1.0 / (1.0 + std::exp(-score[i]));
        }
        CHECK(stratify(cubed, t, k).stratum_of == s.stratum_of);
        CHECK(stratify(squashed, t, k).stratum_of == s.stratum_of);
        for (int v : s.stratum_of) {
            CHECK(v >= 0);
            CHECK(v < s.k);
        }
        const double lo = *std::min_element(score.begin(), score.end());
        const double hi = *std::max_element(score.begin(), score.end());
        for (std::size_t i = 0; i < n; ++i) {
            if (score[i] == lo) CHECK(s.stratum_of[i] == 0);
            if (score[i] == hi) CHECK(s.stratum_of[i] == s.k - 1);
        }
    }
}

TEST_CASE("instrument screen ignores subject order") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "instrument");
        const std::size_t n = between(r, 20, 200), m = between(r, 2, 8);
        auto t = random_treatment(r, n, 2);
        // Column 0 copies treatment most of the time: a likely instrument.
        CovariateMatrix::Builder b(n);
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = r.bernoulli(0.9) ? t[i] : 1 - t[i];
        b.add_dense_column(col);
        const auto rest = random_covariates(r, n, m - 1);
        for (std::size_t j = 0; j < m - 1; ++j) b.add_dense_column(rest.dense_column(j));
        const auto x = std::move(b).build();
        const auto y = random_vector(r, n);
        std::vector<std::string> names;
        for (std::size_t j = 0; j < m; ++j) names.push_back("v" + std::to_string(j));

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        r.shuffle(perm.begin(), perm.end());
        CovariateMatrix::Builder pb(n);
        for (std::size_t j = 0; j < m; ++j) {
            const auto c = x.dense_column(j);
            std::vector<double> pc(n);
            for (std::size_t i = 0; i < n; ++i) pc[i] = c[perm[i]];
            pb.add_dense_column(pc);
        }
        const auto px = std::move(pb).build();
        Treatment pt(n);
        std::vector<double> py(n);
        for (std::size_t i = 0; i < n; ++i) {
            pt[i] = t[perm[i]];
            py[i] = y[perm[i]];
        }
        const auto a = screen_instruments(x, names, t, y);
        const auto c = screen_instruments(px, names, pt, py);
        REQUIRE(a.flagged.size() == c.flagged.size());
        for (std::size_t q = 0; q < a.flagged.size(); ++q) {
            CHECK(a.flagged[q].name == c.flagged[q].name);
            CHECK(a.flagged[q].treatment_correlation == doctest::Approx(c.flagged[q].treatment_correlation));
        }
    }
}

TEST_CASE("SMD is invariant under positive affine maps and flips under negative ones") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "affine");
        const std::size_t n = between(r, 10, 300);
        const auto t = random_treatment(r, n, 2);
        const auto x = random_vector(r, n);
        const auto strata = random_strata(r, n, static_cast<int>(between(r, 1, 4)));
        const auto w = stratum_weights(strata, t).w;
        double base = 0.0;
        try {
            base = weighted_smd(x, t, w);
        } catch (const DataError&) {
            continue;  // every stratum degenerate
        }
        const double a = 0.1 + 10.0 * r.uniform(), b = r.normal(0.0, 5.0);
        std::vector<double> pos(n), neg(n);
        for (std::size_t i = 0; i < n; ++i) {
            pos[i] = a * x[i] + b;
            neg[i] = -a * x[i] + b;
        }
        CHECK(weighted_smd(pos, t, w) == doctest::Approx(base).epsilon(1e-9));
        CHECK(weighted_smd(neg, t, w) == doctest::Approx(-base).epsilon(1e-9));
    }
}

TEST_CASE("one stratum: adjusted SMD equals unadjusted exactly") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "k1");
        const std::size_t n = between(r, 4, 200), m = between(r, 1, 10);
        const auto x = random_covariates(r, n, m);
        const auto t = random_treatment(r, n, 1);
        std::vector<std::string> names(m, "v");
        const auto rep = balance_report(x, names, t, single_stratum(n));
        for (const auto& row : rep.rows) {
            if (std::isnan(row.smd_before)) continue;
            CHECK(row.smd_after == row.smd_before);
        }
    }
}

TEST_CASE("weights reproduce plain within-cell means") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "cells");
        const std::size_t n = between(r, 10, 300);
        const int k = static_cast<int>(between(r, 1, 5));
        const auto t = random_treatment(r, n, 1);
        const auto s = random_strata(r, n, k);
        const auto x = random_vector(r, n);
        const auto sw = stratum_weights(s, t);
        for (int q = 0; q < k; ++q) {
            if (std::find(sw.degenerate_strata.begin(), sw.degenerate_strata.end(), q) != sw.degenerate_strata.end())
                continue;
            for (int g = 0; g < 2; ++g) {
                double wx = 0.0, wsum = 0.0, plain = 0.0, count = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (s.stratum_of[i] != q || t[i] != g) continue;
                    wx += sw.w[i] * x[i];
                    wsum += sw.w[i];
                    plain += x[i];
                    count += 1.0;
                }
                CHECK(wsum == doctest::Approx(1.0));
                CHECK(wx / wsum == doctest::Approx(plain / count));
            }
        }
    }
}

TEST_CASE("balance report does not depend on thread count") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "threads");
        const std::size_t n = between(r, 10, 200), m = between(r, 1, 30);
        const auto x = random_covariates(r, n, m);
        const auto t = random_treatment(r, n, 3);
        const auto s = stratify(random_vector(r, n), t, 3);
        std::vector<std::string> names(m, "v");
        const auto a = balance_report(x, names, t, s, 1);
        const auto b = balance_report(x, names, t, s, 4);
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t j = 0; j < a.rows.size(); ++j) {
            CHECK(a.rows[j].covariate == j);
            CHECK(b.rows[j].covariate == j);
            CHECK((a.rows[j].smd_after == b.rows[j].smd_after ||
                   (std::isnan(a.rows[j].smd_after) && std::isnan(b.rows[j].smd_after))));
        }
    }
}

TEST_CASE("Cox estimate is invariant under increasing time transforms") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "cox-time");
        const auto s = random_survival(r);
        HazardRatioEstimate a;
        try {
            a = fit_cox_stratified(s.time, s.event, s.t, s.strata);
        } catch (const NumericalError&) {
            continue;  // no contrast in this draw
        }
        std::vector<double> cubed(s.time.size());
        for (std::size_t i = 0; i < cubed.size(); ++i) cubed[i] = s.time[i] * s.time[i] * s.time[i];
        const auto b = fit_cox_stratified(cubed, s.event, s.t, s.strata);
        CHECK(b.zeta_hat == doctest::Approx(a.zeta_hat).epsilon(1e-9));
    }
}

TEST_CASE("swapping treatment labels negates both estimators") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "swap");
        const auto s = random_survival(r);
        Treatment flipped(s.t.size());
        for (std::size_t i = 0; i < flipped.size(); ++i) flipped[i] = 1 - s.t[i];
        try {
            const auto a = fit_cox_stratified(s.time, s.event, s.t, s.strata);
            const auto b = fit_cox_stratified(s.time, s.event, flipped, s.strata);
            CHECK(std::abs(a.zeta_hat + b.zeta_hat) <= 1e-6);
        } catch (const NumericalError&) {
        }
        const auto y = random_vector(r, s.t.size());
        const auto e = estimate_ate(y, s.t, s.strata);
        const auto f = estimate_ate(y, flipped, s.strata);
        CHECK(std::abs(e.nu_hat + f.nu_hat) <= 1e-12);
        CHECK(e.se == doctest::Approx(f.se));
    }
}

TEST_CASE("partial likelihood derivatives match central differences") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "cox-fd");
        const auto s = random_survival(r);
        const double z = r.normal(0.0, 0.8), h = 1e-5;
        const auto at = cox_partial_likelihood(s.time, s.event, s.t, s.strata.stratum_of, z);
        const auto up = cox_partial_likelihood(s.time, s.event, s.t, s.strata.stratum_of, z + h);
        const auto dn = cox_partial_likelihood(s.time, s.event, s.t, s.strata.stratum_of, z - h);
        const double fd1 = (up.loglik - dn.loglik) / (2 * h);
        const double fd2 = (up.score - dn.score) / (2 * h);
        CHECK(std::abs(fd1 - at.score) <= 1e-5 * std::max(1.0, std::abs(at.score)));
        CHECK(std::abs(fd2 - at.hessian) <= 1e-5 * std::max(1.0, std::abs(at.hessian)));
    }
}

TEST_CASE("a subject censored before the first event changes nothing") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "censored");
        auto s = random_survival(r);
        HazardRatioEstimate a;
        try {
            a = fit_cox_stratified(s.time, s.event, s.t, s.strata);
        } catch (const NumericalError&) {
            continue;
        }
        double first = 1e300;
        for (std::size_t i = 0; i < s.time.size(); ++i)
            if (s.event[i]) first = std::min(first, s.time[i]);
        s.time.push_back(first * 0.5);
        s.event.push_back(0);
        s.t.push_back(static_cast<std::uint8_t>(r.below(2)));
        s.strata.stratum_of.push_back(static_cast<int>(r.below(static_cast<std::uint64_t>(s.strata.k))));
        const auto b = fit_cox_stratified(s.time, s.event, s.t, s.strata);
        CHECK(b.zeta_hat == doctest::Approx(a.zeta_hat).epsilon(1e-10));
    }
}

TEST_CASE("ATE is invariant under stratum relabelling and its weights sum to one") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "relabel");
        const std::size_t n = between(r, 10, 300);
        const int k = static_cast<int>(between(r, 1, 6));
        const auto t = random_treatment(r, n, 2);
        const auto s = random_strata(r, n, k);
        const auto y = random_vector(r, n, 2.0);
        AteEstimate a;
        try {
            a = estimate_ate(y, t, s);
        } catch (const DataError&) {
            continue;  // every stratum degenerate
        }
        double total = 0.0;
        for (const auto& e : a.per_stratum) total += e.weight;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

        std::vector<int> relabel(static_cast<std::size_t>(k));
        std::iota(relabel.begin(), relabel.end(), 0);
        r.shuffle(relabel.begin(), relabel.end());
        Stratification moved = s;
        for (auto& v : moved.stratum_of) v = relabel[static_cast<std::size_t>(v)];
        const auto b = estimate_ate(y, t, moved);
        CHECK(b.nu_hat == doctest::Approx(a.nu_hat).epsilon(1e-12));
        if (std::isinf(a.se)) CHECK(b.se == a.se);
        else CHECK(b.se == doctest::Approx(a.se).epsilon(1e-12));
    }
}

TEST_CASE("aggregate keeps rmse^2 = variance + bias^2") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Rng r = gen(seed, "aggregate");
        const auto e = random_vector(r, between(r, 2, 100), 1.0 + 3.0 * r.uniform());
        const double nu = r.normal();
        const auto s = aggregate(e, nu);
        CHECK(s.rmse * s.rmse == doctest::Approx(s.variance + s.bias * s.bias).epsilon(1e-12));
    }
}

TEST_CASE("simulation draws and pipeline runs are pure functions of their seeds") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        CAPTURE(seed);
        Sim1Config c;
        c.n = 120;
        c.m = 12;
        c.sparsity_u = 0.75;
        c.sparsity_gamma = 0.75;
        c.master_seed = seed;
        c.sigma2 = 0.1;
        const auto a = generate_sim1(c, static_cast<int>(seed % 7));
        const auto b = generate_sim1(c, static_cast<int>(seed % 7));
        CHECK(a.y == b.y);
        CHECK(a.t == b.t);
        CHECK(a.x == b.x);
        PipelineConfig p;
        p.cv_folds = 3;
        p.lambda_count = 6;
        p.lambda_min_ratio = 1e-2;
        p.strata = 3;
        p.seed = seed;
        const auto e1 = lsps_ate(a.x, a.t, a.y, p);
        p.threads = 3;
        const auto e2 = lsps_ate(b.x, b.t, b.y, p);
        CHECK(e1.ate.nu_hat == e2.ate.nu_hat);
        CHECK(e1.propensity.linear_predictor == e2.propensity.linear_predictor);
    }
}

}  // TEST_SUITE
