#include "lsps/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include "lsps/error.hpp"

namespace lsps {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

struct Moments {
    double mean = 0.0;
    double centred_ss = 0.0;  // sum (v - mean)^2
};

template <class Range>
Moments moments(const Range& v) {
    Moments m;
    double n = 0.0;
    for (double x : v) {
        m.mean += x;
        n += 1.0;
    }
    m.mean /= n;
    for (double x : v) m.centred_ss += (x - m.mean) * (x - m.mean);
    return m;
}

// Pearson correlation of a sparse column with a dense, pre-centred vector.
double column_correlation(const CovariateMatrix& x, std::size_t j, double col_ss,
                          std::span<const double> centred, double centred_ss) {
    // sum_i (x_i - xbar)(v_i) = sum_i x_i v_i since v is centred.
    const double cross = x.dot(j, centred);
    return cross / std::sqrt(col_ss * centred_ss);
}

}  // namespace

InstrumentReport screen_instruments(const CovariateMatrix& x, std::span<const std::string> names,
                                    std::span<const std::uint8_t> treatment,
                                    std::span<const double> outcome, double treatment_threshold,
                                    double outcome_threshold) {
    if (!(treatment_threshold > 0.0 && treatment_threshold <= 1.0) ||
        !(outcome_threshold > 0.0 && outcome_threshold <= 1.0))
        throw ConfigError("instrument thresholds must lie in (0, 1]");
    const std::size_t n = x.rows();
    if (treatment.size() != n || outcome.size() != n || names.size() != x.cols())
        throw ConfigError("instrument screen inputs have inconsistent sizes");

    InstrumentReport report;
    report.treatment_threshold = treatment_threshold;
    report.outcome_threshold = outcome_threshold;

    std::vector<double> tc(n), yc(n);
    for (std::size_t i = 0; i < n; ++i) tc[i] = treatment[i];
    const Moments tm = moments(tc);
    const Moments ym = moments(outcome);
    for (std::size_t i = 0; i < n; ++i) {
        tc[i] -= tm.mean;
        yc[i] = outcome[i] - ym.mean;
    }
    if (!(tm.centred_ss > 0.0)) {
        report.notes.push_back("treatment is constant; correlations undefined");
        return report;
    }
    const bool outcome_constant = !(ym.centred_ss > 0.0);
    if (outcome_constant) report.notes.push_back("outcome is constant; outcome correlations set to 0");

    std::vector<double> ones(n, 1.0);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const auto col = x.column(j);
        double sum = 0.0, sq = 0.0;
        for (std::size_t k = 0; k < col.size(); ++k) {
            sum += col.value(k);
            sq += col.value(k) * col.value(k);
        }
        const double mean = sum / n;
        const double ss = sq - n * mean * mean;
        if (!(ss > 1e-12 * std::max(1.0, sq))) {
            report.notes.push_back("covariate '" + names[j] + "' is constant; skipped");
            continue;
        }
        const double rt = column_correlation(x, j, ss, tc, tm.centred_ss);
        const double ry = outcome_constant ? 0.0 : column_correlation(x, j, ss, yc, ym.centred_ss);
        if (std::abs(rt) >= treatment_threshold && std::abs(ry) <= outcome_threshold)
            report.flagged.push_back({j, names[j], rt, ry});
    }
    return report;
}

InstrumentReport screen_instruments(const CohortDataset& data, double treatment_threshold,
                                    double outcome_threshold) {
    std::vector<double> outcome;
    if (const auto* c = std::get_if<ContinuousOutcome>(&data.outcome())) {
        outcome = c->y;
    } else {
        const auto& s = std::get<SurvivalOutcome>(data.outcome());
        outcome.assign(s.event.begin(), s.event.end());
    }
    return screen_instruments(data.covariates(), data.covariate_names(), data.treatment(), outcome,
                              treatment_threshold, outcome_threshold);
}

PreferenceScores compute_preference(std::span<const double> propensity, double treated_fraction) {
    if (!(treated_fraction > 0.0 && treated_fraction < 1.0))
        throw ConfigError("treated fraction must lie strictly between 0 and 1");
    PreferenceScores out;
    out.treated_fraction = treated_fraction;
    out.values.resize(propensity.size());
    const double offset = logit(treated_fraction);
    for (std::size_t i = 0; i < propensity.size(); ++i) {
        const double p = propensity[i];
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("propensity scores must lie in (0, 1)");
        const double z = logit(p) - offset;
        out.values[i] = 1.0 / (1.0 + std::exp(-z));
    }
    return out;
}

EquipoiseReport check_equipoise(const PreferenceScores& preference) {
    EquipoiseReport r;
    if (preference.values.empty()) throw ConfigError("equipoise needs at least one score");
    std::size_t in_band = 0;
    for (double f : preference.values)
        if (f >= r.band_low && f <= r.band_high) ++in_band;
    r.fraction_in_band = static_cast<double>(in_band) / preference.values.size();
    r.pass = r.fraction_in_band >= 0.5;
    return r;
}

std::vector<std::size_t> Stratification::stratum_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int s : stratum_of)
        if (s != kTrimmed) ++sizes[static_cast<std::size_t>(s)];
    return sizes;
}

Stratification single_stratum(std::size_t n) {
    Stratification s;
    s.k = 1;
    s.stratum_of.assign(n, 0);
    return s;
}

Stratification stratify(std::span<const double> score, std::span<const std::uint8_t> treatment,
                        int k, bool trim) {
    if (score.size() != treatment.size()) throw ConfigError("score and treatment lengths differ");
    if (k < 1) throw ConfigError("stratum count must be at least 1");
    std::vector<double> treated;
    for (std::size_t i = 0; i < score.size(); ++i) {
        if (!std::isfinite(score[i])) throw DataError("propensity score is not finite");
        if (treatment[i]) treated.push_back(score[i]);
    }
    if (treated.size() < static_cast<std::size_t>(k))
        throw DataError("cannot form " + std::to_string(k) + " strata from " +
                        std::to_string(treated.size()) + " treated subjects");
    std::sort(treated.begin(), treated.end());

    Stratification s;
    const std::size_t n1 = treated.size();
    for (int j = 1; j < k; ++j) {
        const std::size_t below = static_cast<std::size_t>(j) * n1 / static_cast<std::size_t>(k);
        const double cut = treated[below - 1];
        // Tied treated scores can collapse cut points; keep only those that
        // separate distinct scores and leave treated subjects above them.
        if (!s.boundaries.empty() && cut <= s.boundaries.back()) continue;
        if (cut >= treated.back()) continue;
        s.boundaries.push_back(cut);
    }
    s.k = static_cast<int>(s.boundaries.size()) + 1;
    if (s.k < k) {
        if (treated.front() == treated.back())
            s.warnings.push_back("all treated propensity scores are identical; using one stratum");
        else
            s.warnings.push_back("tied propensity scores reduced the stratum count from " +
                                 std::to_string(k) + " to " + std::to_string(s.k));
    }
    s.stratum_of.resize(score.size());
    std::size_t trimmed = 0;
    for (std::size_t i = 0; i < score.size(); ++i) {
        if (trim && (score[i] < treated.front() || score[i] > treated.back())) {
            s.stratum_of[i] = Stratification::kTrimmed;
            ++trimmed;
            continue;
        }
        s.stratum_of[i] = static_cast<int>(
            std::lower_bound(s.boundaries.begin(), s.boundaries.end(), score[i]) - s.boundaries.begin());
    }
    if (trimmed > 0)
        s.warnings.push_back(std::to_string(trimmed) +
                             " subjects outside the treated score range were trimmed");
    return s;
}

}  // namespace lsps
