#include "lsps/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lsps/dataset.hpp"
#include "lsps/error.hpp"

namespace lsps {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Normal-equation operator of the weighted, column-centred design:
// v -> Xc' W Xc v, with centring applied implicitly so X stays sparse.
class CentredGram {
public:
    CentredGram(const CovariateMatrix& x, std::span<const double> weight)
        : x_(x), weight_(weight.begin(), weight.end()), mean_(x.cols()), z_(x.rows()) {
        total_ = std::accumulate(weight_.begin(), weight_.end(), 0.0);
        for (std::size_t j = 0; j < x.cols(); ++j) mean_[j] = x.dot(j, weight_) / total_;
    }

    const std::vector<double>& means() const { return mean_; }
    double total_weight() const { return total_; }

    void apply(std::span<const double> v, std::span<double> out) {
        x_.multiply(v, z_);
        const double c = dot(mean_, v);
        double sum = 0.0;
        for (std::size_t i = 0; i < z_.size(); ++i) {
            z_[i] = weight_[i] * (z_[i] - c);
            sum += z_[i];
        }
        for (std::size_t j = 0; j < x_.cols(); ++j) out[j] = x_.dot(j, z_) - mean_[j] * sum;
    }

private:
    const CovariateMatrix& x_;
    std::vector<double> weight_;
    std::vector<double> mean_;
    std::vector<double> z_;
    double total_ = 0.0;
};

}  // namespace

std::vector<RidgeFit> fit_ridge_path(const CovariateMatrix& x, std::span<const double> target,
                                     std::span<const double> alphas, const RidgeConfig& config,
                                     std::span<const double> row_weight) {
    const std::size_t n = x.rows();
    const std::size_t m = x.cols();
    if (target.size() != n) throw ConfigError("ridge target length differs from covariate rows");
    if (!row_weight.empty() && row_weight.size() != n)
        throw ConfigError("row weight length differs from covariate rows");
    if (alphas.empty()) throw ConfigError("ridge needs at least one alpha");
    for (double a : alphas)
        if (!(a >= 0.0)) throw ConfigError("ridge alpha must be nonnegative");

    std::vector<double> weight(n, 1.0);
    if (!row_weight.empty()) std::copy(row_weight.begin(), row_weight.end(), weight.begin());
    CentredGram gram(x, weight);
    const double total = gram.total_weight();
    if (!(total > 0.0)) throw ConfigError("no rows carry weight in ridge fit");
    double target_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) target_mean += weight[i] * target[i];
    target_mean /= total;

    std::vector<double> centred(n);
    for (std::size_t i = 0; i < n; ++i) centred[i] = weight[i] * (target[i] - target_mean);
    std::vector<double> b(m);
    x.transpose_multiply(centred, b);

    const std::size_t shifts = alphas.size();
    std::vector<std::size_t> order(shifts);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return alphas[a] < alphas[c]; });
    const double base_shift = alphas[order[0]];

    std::vector<RidgeFit> fits(shifts);
    for (std::size_t s = 0; s < shifts; ++s) {
        fits[s].alpha = alphas[s];
        fits[s].coefficients.assign(m, 0.0);
    }

    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        for (auto& f : fits) {
            f.intercept = target_mean;
            f.converged = true;
        }
        return fits;
    }

    // Shifted CG: every system (A + alpha I) shares the Krylov space of the
    // base (smallest) shift; residuals of the others stay collinear with the
    // base residual, scaled by zeta.
    std::vector<double> r = b, p = b, w(m);
    std::vector<std::vector<double>> ps(shifts);
    std::vector<double> zeta(shifts, 1.0), zeta_prev(shifts, 1.0), zeta_next(shifts, 1.0);
    std::vector<char> active(shifts, 1);
    for (std::size_t s = 1; s < shifts; ++s) ps[order[s]] = b;
    double rr = dot(r, r);
    double step_prev = 1.0, beta_prev = 0.0;
    const double threshold = config.tolerance * bnorm;
    auto& base = fits[order[0]];

    int it = 0;
    for (; it < config.max_iterations; ++it) {
        if (std::sqrt(rr) <= threshold) break;
        gram.apply(p, w);
        for (std::size_t j = 0; j < m; ++j) w[j] += base_shift * p[j];
        const double pw = dot(p, w);
        if (!(pw > 0.0)) break;
        const double step = rr / pw;
        for (std::size_t q = 1; q < shifts; ++q) {
            const std::size_t s = order[q];
            if (!active[s]) continue;
            const double delta = alphas[s] - base_shift;
            zeta_next[s] = zeta[s] * zeta_prev[s] * step_prev /
                           (step * beta_prev * (zeta_prev[s] - zeta[s]) +
                            zeta_prev[s] * step_prev * (1.0 + delta * step));
            const double step_s = step * zeta_next[s] / zeta[s];
            auto& xs = fits[s].coefficients;
            for (std::size_t j = 0; j < m; ++j) xs[j] += step_s * ps[s][j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            base.coefficients[j] += step * p[j];
            r[j] -= step * w[j];
        }
        const double rr_next = dot(r, r);
        const double beta = rr_next / rr;
        for (std::size_t j = 0; j < m; ++j) p[j] = r[j] + beta * p[j];
        for (std::size_t q = 1; q < shifts; ++q) {
            const std::size_t s = order[q];
            if (!active[s]) continue;
            const double ratio = zeta_next[s] / zeta[s];
            const double beta_s = beta * ratio * ratio;
            for (std::size_t j = 0; j < m; ++j) ps[s][j] = zeta_next[s] * r[j] + beta_s * ps[s][j];
            zeta_prev[s] = zeta[s];
            zeta[s] = zeta_next[s];
            if (std::abs(zeta[s]) * std::sqrt(rr_next) <= threshold) {
                active[s] = 0;
                fits[s].converged = true;
                fits[s].iterations = it + 1;
            }
        }
        step_prev = step;
        beta_prev = beta;
        rr = rr_next;
    }
    if (std::sqrt(rr) <= threshold) {
        for (std::size_t s = 0; s < shifts; ++s) {
            if (active[s]) {
                fits[s].converged = true;
                fits[s].iterations = it;
            }
        }
    } else {
        for (std::size_t s = 0; s < shifts; ++s)
            if (active[s]) fits[s].iterations = it;
    }

    const auto& mean = gram.means();
    for (auto& f : fits) f.intercept = target_mean - dot(mean, f.coefficients);
    return fits;
}

RidgeFit fit_ridge(const CovariateMatrix& x, std::span<const double> target, double alpha,
                   const RidgeConfig& config) {
    if (!(alpha >= 0.0)) throw ConfigError("ridge alpha must be nonnegative");
    if (alpha == 0.0 && x.cols() + 1 > x.rows())
        throw NumericalError("ridge with alpha = 0 needs more rows than covariates (" +
                             std::to_string(x.rows()) + " rows, " + std::to_string(x.cols()) +
                             " covariates)");
    const double a[] = {alpha};
    auto fits = fit_ridge_path(x, target, a, config);
    if (!fits[0].converged)
        throw NumericalError("ridge conjugate gradient did not converge in " +
                             std::to_string(config.max_iterations) + " iterations (alpha " +
                             std::to_string(alpha) + ")");
    return std::move(fits[0]);
}

std::vector<double> ridge_predict(const RidgeFit& fit, const CovariateMatrix& x) {
    if (fit.coefficients.size() != x.cols()) throw ConfigError("ridge model width differs from data");
    std::vector<double> out(x.rows());
    x.multiply(fit.coefficients, out);
    for (double& v : out) v += fit.intercept;
    return out;
}

double r_squared(const RidgeFit& fit, const CovariateMatrix& x, std::span<const double> target) {
    if (target.size() != x.rows()) throw ConfigError("target length differs from covariate rows");
    const double mean = std::accumulate(target.begin(), target.end(), 0.0) / target.size();
    double tss = 0.0;
    for (double u : target) tss += (u - mean) * (u - mean);
    if (!(tss > 0.0)) throw DataError("R^2 is undefined for a constant target");
    const auto pred = ridge_predict(fit, x);
    double rss = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) rss += (target[i] - pred[i]) * (target[i] - pred[i]);
    return 1.0 - rss / tss;
}

std::vector<double> default_ridge_alphas() { return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}; }

HeldoutR2 heldout_r_squared(const CovariateMatrix& x, std::span<const double> target,
                            std::span<const double> alphas, int k, std::uint64_t seed,
                            const RidgeConfig& config) {
    const std::size_t n = x.rows();
    if (target.size() != n) throw ConfigError("target length differs from covariate rows");
    {
        const auto [lo, hi] = std::minmax_element(target.begin(), target.end());
        if (n == 0 || *lo == *hi) throw DataError("R^2 is undefined for a constant target");
    }
    std::vector<double> owned;
    if (alphas.empty()) {
        owned = default_ridge_alphas();
        alphas = owned;
    }
    const FoldAssignment folds = assign_folds(n, k, seed);

    HeldoutR2 out;
    out.alphas.assign(alphas.begin(), alphas.end());
    out.folds = k;
    std::vector<double> sum(alphas.size(), 0.0);
    std::vector<char> usable(alphas.size(), 1);
    std::vector<double> weight(n), pred(n);
    for (int f = 0; f < k; ++f) {
        for (std::size_t i = 0; i < n; ++i) weight[i] = folds.fold_of[i] == f ? 0.0 : 1.0;
        auto fits = fit_ridge_path(x, target, alphas, config, weight);
        double mean = 0.0, count = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (weight[i] == 0.0) {
                mean += target[i];
                count += 1.0;
            }
        mean /= count;
        double tss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (weight[i] == 0.0) tss += (target[i] - mean) * (target[i] - mean);
        if (!(tss > 0.0)) throw DataError("target is constant within a held-out fold");
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            if (!fits[a].converged) {
                usable[a] = 0;
                continue;
            }
            x.multiply(fits[a].coefficients, pred);
            double rss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (weight[i] != 0.0) continue;
                const double e = target[i] - pred[i] - fits[a].intercept;
                rss += e * e;
            }
            sum[a] += 1.0 - rss / tss;
        }
    }
    out.mean_r2.resize(alphas.size());
    std::size_t best = alphas.size();
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        if (!usable[a]) {
            out.mean_r2[a] = std::numeric_limits<double>::quiet_NaN();
            out.warnings.push_back("ridge alpha " + std::to_string(alphas[a]) +
                                   " skipped: conjugate gradient did not converge");
            continue;
        }
        out.mean_r2[a] = sum[a] / k;
        if (best == alphas.size() || out.mean_r2[a] > out.mean_r2[best]) best = a;
    }
    if (best == alphas.size())
        throw NumericalError("ridge conjugate gradient did not converge for any alpha");
    out.alpha = alphas[best];
    out.r2 = out.mean_r2[best];
    return out;
}

}  // namespace lsps
