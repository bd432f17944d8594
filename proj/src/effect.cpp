#include "lsps/effect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lsps/error.hpp"
#include "lsps/ols.hpp"

namespace lsps {

namespace {

constexpr double kZ95 = 1.96;
constexpr double kDivergence = 20.0;

std::vector<std::vector<std::size_t>> members_by_stratum(const Stratification& strat, std::size_t n) {
    if (strat.stratum_of.size() != n) throw ConfigError("stratification length differs from data");
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(strat.k));
    for (std::size_t i = 0; i < n; ++i) {
        const int s = strat.stratum_of[i];
        if (s == Stratification::kTrimmed) continue;
        if (s < 0 || s >= strat.k) throw ConfigError("stratum index out of range");
        members[static_cast<std::size_t>(s)].push_back(i);
    }
    return members;
}

// Accumulates the Breslow partial likelihood of one stratum; `order` holds the
// stratum's subjects sorted by descending time.
void accumulate_stratum(std::span<const double> time, std::span<const std::uint8_t> event,
                        std::span<const std::uint8_t> t, std::span<const std::size_t> order,
                        double zeta, PartialLikelihood& out) {
    const double ez = std::exp(zeta);
    double at_risk[2] = {0.0, 0.0};
    std::size_t pos = 0;
    while (pos < order.size()) {
        const double tau = time[order[pos]];
        double deaths = 0.0, treated_deaths = 0.0;
        std::size_t end = pos;
        for (; end < order.size() && time[order[end]] == tau; ++end) {
            const std::size_t i = order[end];
            at_risk[t[i]] += 1.0;
            if (event[i]) {
                deaths += 1.0;
                treated_deaths += t[i];
            }
        }
        pos = end;
        if (deaths == 0.0) continue;
        const double r1 = at_risk[1] * ez;
        const double denom = r1 + at_risk[0];
        const double a = r1 / denom;
        out.loglik += zeta * treated_deaths - deaths * std::log(denom);
        out.score += treated_deaths - deaths * a;
        out.hessian -= deaths * a * (1.0 - a);
    }
}

struct CoxData {
    std::span<const double> time;
    std::span<const std::uint8_t> event;
    std::span<const std::uint8_t> t;
    std::vector<std::vector<std::size_t>> orders;  // per stratum, descending time

    PartialLikelihood evaluate(double zeta) const {
        PartialLikelihood pl;
        for (const auto& o : orders) accumulate_stratum(time, event, t, o, zeta, pl);
        return pl;
    }
};

struct NewtonResult {
    double zeta = 0.0;
    double information = 0.0;
    int iterations = 0;
};

NewtonResult newton(const CoxData& data) {
    double zeta = 0.0;
    PartialLikelihood cur = data.evaluate(zeta);
    if (!(-cur.hessian > 0.0))
        throw NumericalError("treatment effect is not identifiable: no event has both groups at risk");
    NewtonResult r;
    for (int it = 1; it <= 200; ++it) {
        r.iterations = it;
        double step = cur.score / -cur.hessian;
        PartialLikelihood next = data.evaluate(zeta + step);
        int halvings = 0;
        while (!(next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) && halvings < 60) {
            step /= 2.0;
            next = data.evaluate(zeta + step);
            ++halvings;
        }
        zeta += step;
        cur = next;
        if (std::abs(zeta) > kDivergence)
            throw NumericalError("treatment coefficient diverged (|zeta| > 20); the partial likelihood "
                                 "is monotone and the effect is not identifiable");
        if (std::abs(step) < 1e-10 || std::abs(cur.score) < 1e-12) {
            r.zeta = zeta;
            r.information = -cur.hessian;
            if (!(r.information > 0.0))
                throw NumericalError("observed information vanished at the Cox estimate");
            return r;
        }
    }
    throw NumericalError("Cox Newton iteration did not converge");
}

std::vector<std::size_t> by_descending_time(std::span<const double> time, std::vector<std::size_t> idx) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return time[a] > time[b]; });
    return idx;
}

}  // namespace

AteEstimate estimate_ate(std::span<const double> y, std::span<const std::uint8_t> treatment,
                         const Stratification& strat) {
    if (y.size() != treatment.size()) throw ConfigError("outcome and treatment lengths differ");
    const auto members = members_by_stratum(strat, y.size());
    AteEstimate est;
    std::vector<double> ys;
    std::vector<std::uint8_t> ts;
    double total = 0.0;
    for (std::size_t s = 0; s < members.size(); ++s) {
        const auto& m = members[s];
        if (m.empty()) continue;
        std::size_t treated = 0;
        for (std::size_t i : m) treated += treatment[i];
        if (treated == 0 || treated == m.size()) {
            est.dropped_strata.push_back(static_cast<int>(s));
            est.warnings.push_back("stratum " + std::to_string(s) + " lacks " +
                                   (treated == 0 ? "treated" : "control") +
                                   " subjects and was dropped");
            continue;
        }
        ys.clear();
        ts.clear();
        for (std::size_t i : m) {
            ys.push_back(y[i]);
            ts.push_back(treatment[i]);
        }
        const StratumOls ols = fit_ols_stratum(ys, ts);
        est.per_stratum.push_back({static_cast<int>(s), ols.nu, ols.se_nu, 0.0, m.size()});
        total += static_cast<double>(m.size());
    }
    if (est.per_stratum.empty()) throw DataError("every stratum lacks a treated or a control subject");
    double var = 0.0;
    for (StratumEffect& e : est.per_stratum) {
        e.weight = static_cast<double>(e.size) / total;
        est.nu_hat += e.weight * e.nu;
        var += e.weight * e.weight * e.se * e.se;
    }
    est.se = std::sqrt(var);
    est.ci_low = est.nu_hat - kZ95 * est.se;
    est.ci_high = est.nu_hat + kZ95 * est.se;
    return est;
}

PartialLikelihood cox_partial_likelihood(std::span<const double> time,
                                         std::span<const std::uint8_t> event,
                                         std::span<const std::uint8_t> treatment,
                                         std::span<const int> stratum_of, double zeta) {
    const std::size_t n = time.size();
    if (event.size() != n || treatment.size() != n || stratum_of.size() != n)
        throw ConfigError("partial likelihood inputs have different lengths");
    int k = 0;
    for (int s : stratum_of) k = std::max(k, s + 1);
    std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i)
        if (stratum_of[i] >= 0) groups[static_cast<std::size_t>(stratum_of[i])].push_back(i);
    PartialLikelihood pl;
    for (auto& g : groups) {
        const auto order = by_descending_time(time, std::move(g));
        accumulate_stratum(time, event, treatment, order, zeta, pl);
    }
    return pl;
}

HazardRatioEstimate fit_cox_stratified(std::span<const double> time,
                                       std::span<const std::uint8_t> event,
                                       std::span<const std::uint8_t> treatment,
                                       const Stratification& strat) {
    const std::size_t n = time.size();
    if (event.size() != n || treatment.size() != n) throw ConfigError("survival inputs have different lengths");
    for (double v : time)
        if (!std::isfinite(v)) throw DataError("event times must be finite");
    const auto members = members_by_stratum(strat, n);

    CoxData all{time, event, treatment, {}};
    std::size_t events = 0;
    HazardRatioEstimate est;
    for (std::size_t s = 0; s < members.size(); ++s) {
        if (members[s].empty()) continue;
        auto order = by_descending_time(time, members[s]);
        StratumHazard sh;
        sh.stratum = static_cast<int>(s);
        sh.size = order.size();
        for (std::size_t i : order) sh.events += event[i];
        events += sh.events;
        try {
            CoxData one{time, event, treatment, {order}};
            sh.zeta = newton(one).zeta;
        } catch (const NumericalError&) {
            sh.zeta.reset();
        }
        est.per_stratum.push_back(sh);
        all.orders.push_back(std::move(order));
    }
    if (events == 0) throw DataError("no events; the hazard ratio is undefined");

    const NewtonResult r = newton(all);
    est.zeta_hat = r.zeta;
    est.iterations = r.iterations;
    est.hr = std::exp(r.zeta);
    est.se_zeta = 1.0 / std::sqrt(r.information);
    est.ci_low = std::exp(r.zeta - kZ95 * est.se_zeta);
    est.ci_high = std::exp(r.zeta + kZ95 * est.se_zeta);
    const auto unestimable = std::count_if(est.per_stratum.begin(), est.per_stratum.end(),
                                           [](const StratumHazard& h) { return !h.zeta; });
    if (unestimable > 0)
        est.warnings.push_back(std::to_string(unestimable) +
                               " strata have no stratum-specific hazard ratio");
    return est;
}

EffectEstimate estimate_effect(const Outcome& outcome, std::span<const std::uint8_t> treatment,
                               const Stratification& strat) {
    if (const auto* c = std::get_if<ContinuousOutcome>(&outcome))
        return estimate_ate(c->y, treatment, strat);
    const auto& s = std::get<SurvivalOutcome>(outcome);
    return fit_cox_stratified(s.time, s.event, treatment, strat);
}

EffectEstimate estimate_unadjusted(const Outcome& outcome, std::span<const std::uint8_t> treatment) {
    const std::size_t treated = std::accumulate(treatment.begin(), treatment.end(), std::size_t{0});
    if (treated == 0 || treated == treatment.size())
        throw NumericalError("unadjusted estimate needs both treated and control subjects");
    return estimate_effect(outcome, treatment, single_stratum(treatment.size()));
}

}  // namespace lsps
