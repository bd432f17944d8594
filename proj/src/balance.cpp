#include "lsps/balance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "lsps/error.hpp"
#include "lsps/parallel.hpp"

namespace lsps {

namespace {

struct GroupSums {
    double w = 0.0;   // sum w
    double w2 = 0.0;  // sum w^2
};

double frequency_variance(double w, double w2, double centred_ss) {
    const double denom = w * w - w2;
    if (!(denom > 0.0)) return 0.0;
    return w / denom * std::max(0.0, centred_ss);
}

double smd_from(double mean1, double var1, double mean0, double var0) {
    const double pooled = (var1 + var0) / 2.0;
    const double diff = mean1 - mean0;
    if (!(pooled > 0.0)) {
        if (diff == 0.0) return 0.0;
        return diff > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    }
    return diff / std::sqrt(pooled);
}

// Both weightings of one covariate share the per-group weight totals.
struct Weighting {
    std::span<const double> w;
    GroupSums group[2];

    double at(std::size_t i) const { return w[i]; }
};

Weighting make_weighting(std::span<const std::uint8_t> t, std::span<const double> w) {
    Weighting out{w, {}};
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double wi = out.at(i);
        out.group[t[i]].w += wi;
        out.group[t[i]].w2 += wi * wi;
    }
    return out;
}

double column_smd(const CovariateMatrix& x, std::size_t j, std::span<const std::uint8_t> t,
                  const Weighting& wt, std::vector<double>& scratch) {
    if (wt.group[0].w <= 0.0 || wt.group[1].w <= 0.0) throw DataError("a group has zero total weight");
    if (x.column_is_binary(j)) {
        // With x in {0,1}: sum w (x - m)^2 = S (1 - S / W), S = sum over ones.
        double s[2] = {0.0, 0.0};
        for (std::uint32_t i : x.column(j).rows) s[t[i]] += wt.at(i);
        double mean[2], var[2];
        for (int g = 0; g < 2; ++g) {
            mean[g] = s[g] / wt.group[g].w;
            var[g] = frequency_variance(wt.group[g].w, wt.group[g].w2, s[g] * (1.0 - mean[g]));
        }
        return smd_from(mean[1], var[1], mean[0], var[0]);
    }
    scratch.assign(x.rows(), 0.0);
    const auto col = x.column(j);
    for (std::size_t k = 0; k < col.size(); ++k) scratch[col.rows[k]] = col.values[k];
    return weighted_smd(scratch, t, wt.w);
}

}  // namespace

StratumWeights stratum_weights(const Stratification& strat, std::span<const std::uint8_t> treatment) {
    if (strat.stratum_of.size() != treatment.size())
        throw ConfigError("stratification and treatment lengths differ");
    const std::size_t k = static_cast<std::size_t>(strat.k);
    std::vector<std::size_t> count(2 * k, 0);
    for (std::size_t i = 0; i < treatment.size(); ++i) {
        const int s = strat.stratum_of[i];
        if (s == Stratification::kTrimmed) continue;
        if (s < 0 || static_cast<std::size_t>(s) >= k) throw ConfigError("stratum index out of range");
        ++count[2 * s + treatment[i]];
    }
    StratumWeights out;
    for (std::size_t s = 0; s < k; ++s) {
        if (count[2 * s] + count[2 * s + 1] == 0) continue;
        if (count[2 * s] == 0 || count[2 * s + 1] == 0) {
            out.degenerate_strata.push_back(static_cast<int>(s));
            out.warnings.push_back("stratum " + std::to_string(s) + " has no " +
                                   (count[2 * s] == 0 ? "control" : "treated") +
                                   " subjects and is excluded");
        }
    }
    out.w.assign(treatment.size(), 0.0);
    for (std::size_t i = 0; i < treatment.size(); ++i) {
        const int s = strat.stratum_of[i];
        if (s == Stratification::kTrimmed) continue;
        if (count[2 * s] == 0 || count[2 * s + 1] == 0) continue;
        out.w[i] = 1.0 / static_cast<double>(count[2 * s + treatment[i]]);
    }
    return out;
}

double weighted_smd(std::span<const double> column, std::span<const std::uint8_t> treatment,
                    std::span<const double> weights) {
    if (column.size() != treatment.size() || weights.size() != treatment.size())
        throw ConfigError("weighted_smd inputs have different lengths");
    double w[2] = {0, 0}, w2[2] = {0, 0}, sx[2] = {0, 0};
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (weights[i] < 0.0) throw ConfigError("weights must be nonnegative");
        if (weights[i] == 0.0) continue;
        const int g = treatment[i] ? 1 : 0;
        w[g] += weights[i];
        w2[g] += weights[i] * weights[i];
        sx[g] += weights[i] * column[i];
    }
    if (!(w[0] > 0.0) || !(w[1] > 0.0)) throw DataError("a group has zero total weight");
    const double mean[2] = {sx[0] / w[0], sx[1] / w[1]};
    double ss[2] = {0, 0};
    for (std::size_t i = 0; i < column.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const int g = treatment[i] ? 1 : 0;
        const double d = column[i] - mean[g];
        ss[g] += weights[i] * d * d;
    }
    return smd_from(mean[1], frequency_variance(w[1], w2[1], ss[1]), mean[0],
                    frequency_variance(w[0], w2[0], ss[0]));
}

BalanceReport balance_report(const CovariateMatrix& x, std::span<const std::string> names,
                             std::span<const std::uint8_t> treatment, const Stratification& strat,
                             int threads) {
    if (names.size() != x.cols() || treatment.size() != x.rows())
        throw ConfigError("balance inputs have inconsistent sizes");
    const StratumWeights sw = stratum_weights(strat, treatment);
    BalanceReport report;
    report.degenerate_strata = sw.degenerate_strata;
    report.warnings = sw.warnings;

    // Unadjusted values use one stratum; the SMD ignores the per-group weight
    // scale, so this equals the plain SMD and k = 1 reproduces it exactly.
    const StratumWeights pooled = stratum_weights(single_stratum(treatment.size()), treatment);
    const Weighting before = make_weighting(treatment, pooled.w);
    const Weighting after = make_weighting(treatment, sw.w);
    if (after.group[0].w <= 0.0 || after.group[1].w <= 0.0)
        throw DataError("every stratum is degenerate; balance cannot be evaluated");

    std::vector<std::uint8_t> in_degenerate(treatment.size(), 0);
    if (!sw.degenerate_strata.empty())
        for (std::size_t i = 0; i < treatment.size(); ++i) {
            const int s = strat.stratum_of[i];
            in_degenerate[i] = s != Stratification::kTrimmed &&
                               std::binary_search(sw.degenerate_strata.begin(),
                                                  sw.degenerate_strata.end(), s);
        }

    report.rows.resize(x.cols());
    parallel_for(x.cols(), threads, [&](std::size_t j) {
        thread_local std::vector<double> scratch;
        BalanceRow& row = report.rows[j];
        row.covariate = j;
        row.name = names[j];
        row.smd_before = column_smd(x, j, treatment, before, scratch);
        row.smd_after = column_smd(x, j, treatment, after, scratch);
        if (!sw.degenerate_strata.empty()) {
            const auto col = x.column(j);
            for (std::size_t k = 0; k < col.size(); ++k)
                if (in_degenerate[col.rows[k]] && col.value(k) != 0.0) {
                    row.not_evaluable_in_degenerate = true;
                    break;
                }
        }
    });
    for (const BalanceRow& row : report.rows) {
        report.max_abs_unadjusted_smd = std::max(report.max_abs_unadjusted_smd, std::abs(row.smd_before));
        report.max_abs_adjusted_smd = std::max(report.max_abs_adjusted_smd, std::abs(row.smd_after));
    }
    report.pass = report.max_abs_adjusted_smd <= BalanceReport::kThreshold;
    return report;
}

BalanceReport balance_report(const CohortDataset& data, const Stratification& strat, int threads) {
    return balance_report(data.covariates(), data.covariate_names(), data.treatment(), strat, threads);
}

void write_balance_csv(const BalanceReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "covariate,name,smd_before,smd_after\n";
    char buf[64];
    auto num = [&](double v) -> const char* {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return buf;
    };
    for (const BalanceRow& r : report.rows) {
        std::string name = r.name;
        if (name.find_first_of(",\"") != std::string::npos) {
            std::string quoted = "\"";
            for (char c : name) {
                if (c == '"') quoted += '"';
                quoted += c;
            }
            name = quoted + "\"";
        }
        out << r.covariate << ',' << name << ',' << num(r.smd_before) << ',';
        out << num(r.smd_after) << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace lsps
