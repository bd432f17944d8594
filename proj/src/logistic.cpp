#include "lsps/logistic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "lsps/dataset.hpp"
#include "lsps/error.hpp"
#include "lsps/parallel.hpp"

namespace lsps {

namespace {

// log(1 + e^z) without overflow.
inline double log1pexp(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double soft_threshold(double u, double k) {
    if (u > k) return u - k;
    if (u < -k) return u + k;
    return 0.0;
}

void check_shapes(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                  std::span<const double> row_weight) {
    if (t.size() != x.rows())
        throw ConfigError("treatment length " + std::to_string(t.size()) +
                          " differs from covariate rows " + std::to_string(x.rows()));
    if (!row_weight.empty() && row_weight.size() != x.rows())
        throw ConfigError("row weight length differs from covariate rows");
}

// Column-wise sum of squares of x against weights: sum_i v_i x_ij^2.
double dot_squared(const CovariateMatrix& x, std::size_t j, std::span<const double> v) {
    const auto c = x.column(j);
    if (c.binary()) return x.dot(j, v);
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += c.values[k] * c.values[k] * v[c.rows[k]];
    return s;
}

// Proximal-Newton coordinate descent for one training problem (a fixed row
// weighting). Each sweep forms the quadratic model of the loss, minimises
// it over the working set by cyclic coordinate descent with soft-thresholding,
// then backtracks along the resulting direction until the penalised
// objective decreases.
class Solver {
public:
    Solver(const CovariateMatrix& x, std::span<const std::uint8_t> t,
           std::span<const double> row_weight, const LogisticConfig& config)
        : x_(x), t_(t), cfg_(config), n_(x.rows()), m_(x.cols()) {
        weight_.assign(n_, 1.0);
        if (!row_weight.empty()) std::copy(row_weight.begin(), row_weight.end(), weight_.begin());
        n_eff_ = std::accumulate(weight_.begin(), weight_.end(), 0.0);
        if (!(n_eff_ > 0.0)) throw ConfigError("no rows carry weight in logistic fit");
        double treated = 0.0;
        for (std::size_t i = 0; i < n_; ++i) treated += weight_[i] * t_[i];
        if (treated <= 0.0 || treated >= n_eff_)
            throw DataError("logistic fit needs both treatment classes among its rows");

        scale_.assign(m_, 1.0);
        if (cfg_.standardize) {
            for (std::size_t j = 0; j < m_; ++j) {
                if (x_.column_is_binary(j)) continue;
                const double mean = x_.dot(j, weight_) / n_eff_;
                const double sq = dot_squared(x_, j, weight_) / n_eff_;
                const double var = sq - mean * mean;
                if (var > 0.0) scale_[j] = 1.0 / std::sqrt(var);
            }
        }
        theta_.assign(m_, 0.0);
        eta_.assign(n_, 0.0);
        p_.assign(n_, 0.0);
        resid_.assign(n_, 0.0);
        hess_.assign(n_, 0.0);
        deta_.assign(n_, 0.0);
        grad_.assign(m_, 0.0);
        in_set_.assign(m_, 0);
        intercept_ = std::log(treated / (n_eff_ - treated));
        std::fill(eta_.begin(), eta_.end(), intercept_);
    }

    double lambda_max() {
        full_gradient();
        double lm = 0.0;
        for (double g : grad_) lm = std::max(lm, std::abs(g));
        return lm;
    }

    // Solves at `lambda`, warm-started from the current state.
    LogisticFit solve(double lambda, double previous_lambda) {
        int sweeps = 0;
        bool converged = false;
        full_gradient();
        std::vector<std::size_t> working;
        std::fill(in_set_.begin(), in_set_.end(), 0);
        const double strong = 2.0 * lambda - previous_lambda;
        for (std::size_t j = 0; j < m_; ++j) {
            if (theta_[j] != 0.0 || std::abs(grad_[j]) >= strong) {
                working.push_back(j);
                in_set_[j] = 1;
            }
        }
        for (;;) {
            converged = solve_working_set(lambda, working, sweeps);
            if (!converged) break;
            full_gradient();
            bool added = false;
            for (std::size_t j = 0; j < m_; ++j) {
                if (in_set_[j] || std::abs(grad_[j]) <= lambda) continue;
                working.push_back(j);
                in_set_[j] = 1;
                added = true;
            }
            if (!added) break;
            std::sort(working.begin(), working.end());
        }

        LogisticFit fit;
        fit.coefficients.resize(m_);
        for (std::size_t j = 0; j < m_; ++j) fit.coefficients[j] = theta_[j] * scale_[j];
        fit.intercept = intercept_;
        fit.lambda = lambda;
        fit.converged = converged;
        fit.iterations = sweeps;
        fit.final_objective = objective(lambda);
        return fit;
    }

private:
    void refresh_probabilities() {
        for (std::size_t i = 0; i < n_; ++i) {
            if (weight_[i] == 0.0) {
                resid_[i] = 0.0;
                hess_[i] = 0.0;
                continue;
            }
            const double p = sigmoid(eta_[i]);
            p_[i] = p;
            resid_[i] = weight_[i] * (p - t_[i]) / n_eff_;
            hess_[i] = weight_[i] * std::max(p * (1.0 - p), 1e-8) / n_eff_;
        }
    }

    void full_gradient() {
        refresh_probabilities();
        for (std::size_t j = 0; j < m_; ++j) grad_[j] = scale_[j] * x_.dot(j, resid_);
    }

    double loss_along(double step, double d0) const {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (weight_[i] == 0.0) continue;
            const double e = eta_[i] + step * (d0 + deta_[i]);
            s += weight_[i] * (log1pexp(e) - t_[i] * e);
        }
        return s / n_eff_;
    }

    double penalty(double lambda) const {
        double s = 0.0;
        for (double v : theta_) s += std::abs(v);
        return lambda * s;
    }

    double objective(double lambda) const { return loss_along(0.0, 0.0) + penalty(lambda); }

    // Quadratic model of the loss around the current iterate, restricted to
    // the working set, with the intercept step eliminated exactly: for a
    // covariate step d the best intercept step is d0 = -(g0 + h.Xd) / h00.
    struct Model {
        double g0 = 0.0, h00 = 0.0;
        std::vector<double> g, h, hx, hc;  // per working-set entry
    };

    // Reduced-model gradient of coordinate a at the current (d, deta_).
    double model_gradient(const Model& q, std::size_t j, std::size_t a, double d0) const {
        const auto col = x_.column(j);
        double s = 0.0;
        if (col.binary()) {
            for (std::uint32_t i : col.rows) s += hess_[i] * deta_[i];
        } else {
            for (std::size_t k = 0; k < col.size(); ++k)
                s += col.values[k] * hess_[col.rows[k]] * deta_[col.rows[k]];
        }
        return q.g[a] + scale_[j] * s + d0 * q.hx[a];
    }

    // One cyclic pass of coordinate descent on the reduced model over the
    // working-set positions in `order`. Returns the largest coordinate move;
    // `signs_changed` reports any coordinate entering, leaving or crossing 0.
    double coordinate_pass(const Model& q, const std::vector<std::size_t>& working,
                           std::span<const std::size_t> order, double lambda, std::vector<double>& d,
                           double& h_deta, double& d0, bool& signs_changed) {
        double biggest = 0.0;
        signs_changed = false;
        for (std::size_t a : order) {
            if (!(q.hc[a] > 1e-12 * q.h[a])) continue;
            const std::size_t j = working[a];
            const double gq = model_gradient(q, j, a, d0);
            const double z = theta_[j] + d[a];
            const double next = soft_threshold(z - gq / q.hc[a], lambda / q.hc[a]);
            const double delta = next - z;
            if (delta == 0.0) continue;
            if ((z > 0.0) != (next > 0.0) || (z < 0.0) != (next < 0.0)) signs_changed = true;
            d[a] += delta;
            x_.axpy(j, delta * scale_[j], deta_);
            h_deta += delta * q.hx[a];
            d0 = -(q.g0 + h_deta) / q.h00;
            biggest = std::max(biggest, std::abs(delta));
        }
        return biggest;
    }

    // Jacobi-preconditioned conjugate gradient over the nonzero coordinates
    // among `active`, with their signs held fixed. Coordinate descent is slow
    // along directions shared by many correlated columns; CG removes those in
    // a few iterations. The step is cut at the first sign change.
    void conjugate_step(const Model& q, const std::vector<std::size_t>& working,
                        std::span<const std::size_t> active, double lambda, std::vector<double>& d,
                        double& h_deta, double& d0) {
        free_.clear();
        for (std::size_t a : active)
            if (theta_[working[a]] + d[a] != 0.0 && q.hc[a] > 1e-12 * q.h[a]) free_.push_back(a);
        active = free_;
        const std::size_t f = active.size();
        if (f == 0) return;
        cg_r_.assign(f, 0.0);
        cg_z_.assign(f, 0.0);
        cg_p_.assign(f, 0.0);
        cg_hp_.assign(f, 0.0);
        cg_x_.assign(f, 0.0);
        for (std::size_t b = 0; b < f; ++b) {
            const std::size_t a = active[b];
            const double sign = theta_[working[a]] + d[a] > 0.0 ? 1.0 : -1.0;
            cg_r_[b] = -(model_gradient(q, working[a], a, d0) + lambda * sign);
            cg_z_[b] = cg_r_[b] / q.hc[a];
        }
        cg_p_ = cg_z_;
        double rz = 0.0;
        for (std::size_t b = 0; b < f; ++b) rz += cg_r_[b] * cg_z_[b];
        const double rz0 = rz;
        if (!(rz0 > 0.0)) return;
        cg_v_.resize(n_);
        for (int it = 0; it < 10; ++it) {
            // hp = reduced Hessian times p, i.e. X'(H - hh'/h00)X p on the active set.
            std::fill(cg_v_.begin(), cg_v_.end(), 0.0);
            double hxp = 0.0;
            for (std::size_t b = 0; b < f; ++b) {
                const std::size_t a = active[b];
                x_.axpy(working[a], cg_p_[b] * scale_[working[a]], cg_v_);
                hxp += cg_p_[b] * q.hx[a];
            }
            for (std::size_t i = 0; i < n_; ++i) cg_v_[i] *= hess_[i];
            double php = 0.0;
            for (std::size_t b = 0; b < f; ++b) {
                const std::size_t a = active[b];
                cg_hp_[b] = scale_[working[a]] * x_.dot(working[a], cg_v_) - q.hx[a] * hxp / q.h00;
                php += cg_p_[b] * cg_hp_[b];
            }
            if (!(php > 0.0)) break;
            const double alpha = rz / php;
            double rz_next = 0.0;
            for (std::size_t b = 0; b < f; ++b) {
                cg_x_[b] += alpha * cg_p_[b];
                cg_r_[b] -= alpha * cg_hp_[b];
                cg_z_[b] = cg_r_[b] / q.hc[active[b]];
                rz_next += cg_r_[b] * cg_z_[b];
            }
            if (rz_next <= 1e-8 * rz0) break;
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t b = 0; b < f; ++b) cg_p_[b] = cg_z_[b] + beta * cg_p_[b];
        }
        // Largest fraction of the step that keeps every sign.
        double t = 1.0;
        for (std::size_t b = 0; b < f; ++b) {
            const double z = theta_[working[active[b]]] + d[active[b]];
            if (z * (z + cg_x_[b]) < 0.0) t = std::min(t, -z / cg_x_[b]);
        }
        if (!(t > 0.0)) return;
        for (std::size_t b = 0; b < f; ++b) {
            const std::size_t a = active[b];
            const std::size_t j = working[a];
            double delta = t * cg_x_[b];
            const double z = theta_[j] + d[a];
            if (z * (z + delta) <= 0.0) delta = -z;  // the blocking coordinate lands on zero
            if (delta == 0.0) continue;
            d[a] += delta;
            x_.axpy(j, delta * scale_[j], deta_);
            h_deta += delta * q.hx[a];
        }
        d0 = -(q.g0 + h_deta) / q.h00;
    }

    bool solve_working_set(double lambda, const std::vector<std::size_t>& working, int& sweeps) {
        const std::size_t w = working.size();
        Model q;
        q.g.resize(w);
        q.h.resize(w);
        q.hx.resize(w);
        q.hc.resize(w);
        std::vector<double> d(w);
        all_.resize(w);
        std::iota(all_.begin(), all_.end(), std::size_t{0});
        const double floor_tol = cfg_.tolerance * 0.1;
        double inner_tol = std::max(floor_tol, 1e-3);
        for (;;) {
            if (sweeps >= cfg_.max_sweeps) return false;
            refresh_probabilities();
            q.g0 = std::accumulate(resid_.begin(), resid_.end(), 0.0);
            q.h00 = std::accumulate(hess_.begin(), hess_.end(), 0.0);
            for (std::size_t a = 0; a < w; ++a) {
                const std::size_t j = working[a];
                q.g[a] = scale_[j] * x_.dot(j, resid_);
                q.hx[a] = scale_[j] * x_.dot(j, hess_);
                q.h[a] = scale_[j] * scale_[j] * dot_squared(x_, j, hess_);
                q.hc[a] = q.h[a] - q.hx[a] * q.hx[a] / q.h00;
            }

            std::fill(deta_.begin(), deta_.end(), 0.0);
            std::fill(d.begin(), d.end(), 0.0);
            double h_deta = 0.0;  // sum_i hess_i * deta_i
            double d0 = -q.g0 / q.h00;
            // Full passes over the working set alternate with passes over the
            // nonzero coordinates only; convergence is confirmed by a full pass.
            bool full = true;
            int stable = 0;
            for (int pass = 0; pass < 1000; ++pass) {
                bool signs_changed = false;
                const double biggest = coordinate_pass(q, working, full ? std::span<const std::size_t>(all_)
                                                                        : std::span<const std::size_t>(active_),
                                                       lambda, d, h_deta, d0, signs_changed);
                if (full) {
                    active_.clear();
                    for (std::size_t a = 0; a < w; ++a)
                        if (theta_[working[a]] + d[a] != 0.0) active_.push_back(a);
                }
                if (biggest < inner_tol) {
                    if (full) break;
                    full = true;
                    continue;
                }
                full = false;
                stable = signs_changed ? 0 : stable + 1;
                // CG only pays off once the sign pattern has settled.
                if (stable >= 3) {
                    conjugate_step(q, working, active_, lambda, d, h_deta, d0);
                    stable = 0;
                }
            }

            // Backtracking line search on the penalised objective.
            double decrease = q.g0 * d0;
            double l1_now = 0.0, l1_next = 0.0;
            for (std::size_t a = 0; a < w; ++a) {
                const std::size_t j = working[a];
                decrease += q.g[a] * d[a];
                l1_now += std::abs(theta_[j]);
                l1_next += std::abs(theta_[j] + d[a]);
            }
            decrease += lambda * (l1_next - l1_now);
            const double f0 = loss_along(0.0, 0.0) + lambda * l1_now;
            double step = 1.0;
            bool accepted = false;
            for (int halving = 0; halving < 60; ++halving) {
                double l1 = 0.0;
                for (std::size_t a = 0; a < w; ++a)
                    l1 += std::abs(theta_[working[a]] + step * d[a]);
                const double f = loss_along(step, d0) + lambda * l1;
                if (f <= f0 + 1e-4 * step * decrease || (decrease >= 0.0 && f <= f0)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            ++sweeps;
            if (!accepted) {
                if (inner_tol > floor_tol) {
                    inner_tol = floor_tol;
                    continue;
                }
                return true;  // no descent left at machine precision
            }

            // Convergence is judged on the penalised coefficients; the intercept
            // follows them through the exact elimination.
            double change = 0.0;
            intercept_ += step * d0;
            for (std::size_t a = 0; a < w; ++a) {
                const std::size_t j = working[a];
                theta_[j] += step * d[a];
                if (std::abs(theta_[j]) < 1e-300) theta_[j] = 0.0;
                change = std::max(change, std::abs(step * d[a]));
            }
            for (std::size_t i = 0; i < n_; ++i) eta_[i] += step * (d0 + deta_[i]);

#ifndef NDEBUG
            const double now = objective(lambda);
            assert(now <= f0 + 1e-10 * (1.0 + std::abs(f0)));
#endif
            double largest = std::abs(intercept_);
            for (std::size_t a = 0; a < w; ++a)
                largest = std::max(largest, std::abs(theta_[working[a]] * scale_[working[a]]));
            if (!(largest <= cfg_.coefficient_guard))
                throw NumericalError(
                    "logistic coefficients exceeded the guard bound (" +
                    std::to_string(cfg_.coefficient_guard) +
                    "); the classes are probably separable at this lambda");
            // Loose inner solves early on; convergence is only declared once
            // the inner tolerance has reached its floor.
            if (change < cfg_.tolerance && inner_tol <= floor_tol) return true;
            inner_tol = std::max(floor_tol, std::min(inner_tol, 0.1 * change));
        }
    }

    const CovariateMatrix& x_;
    std::span<const std::uint8_t> t_;
    LogisticConfig cfg_;
    std::size_t n_, m_;
    double n_eff_ = 0.0;
    std::vector<double> weight_, scale_, theta_, eta_, p_, resid_, hess_, deta_, grad_;
    std::vector<double> cg_r_, cg_z_, cg_p_, cg_hp_, cg_x_, cg_v_;
    std::vector<std::size_t> all_, active_, free_;
    std::vector<char> in_set_;
    double intercept_ = 0.0;
};

}  // namespace

std::size_t LogisticFit::nonzeros() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(coefficients.begin(), coefficients.end(), [](double v) { return v != 0.0; }));
}

double logistic_loss(const CovariateMatrix& x, std::span<const std::uint8_t> t, double intercept,
                     std::span<const double> coefficients, std::span<const double> row_weight) {
    check_shapes(x, t, row_weight);
    std::vector<double> eta(x.rows());
    x.multiply(coefficients, eta);
    double s = 0.0, n = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double w = row_weight.empty() ? 1.0 : row_weight[i];
        if (w == 0.0) continue;
        const double e = eta[i] + intercept;
        s += w * (log1pexp(e) - t[i] * e);
        n += w;
    }
    return s / n;
}

std::vector<double> logistic_gradient(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                                      double intercept, std::span<const double> coefficients,
                                      std::span<const double> row_weight) {
    check_shapes(x, t, row_weight);
    std::vector<double> eta(x.rows());
    x.multiply(coefficients, eta);
    double n = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) n += row_weight.empty() ? 1.0 : row_weight[i];
    std::vector<double> r(x.rows());
    double g0 = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double w = row_weight.empty() ? 1.0 : row_weight[i];
        r[i] = w * (sigmoid(eta[i] + intercept) - t[i]) / n;
        g0 += r[i];
    }
    std::vector<double> g(x.cols() + 1);
    g[0] = g0;
    for (std::size_t j = 0; j < x.cols(); ++j) g[j + 1] = x.dot(j, r);
    return g;
}

double kkt_residual(const LogisticFit& fit, const CovariateMatrix& x,
                    std::span<const std::uint8_t> t) {
    const auto g = logistic_gradient(x, t, fit.intercept, fit.coefficients);
    double worst = std::abs(g[0]);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const double gj = g[j + 1];
        const double b = fit.coefficients[j];
        const double v = b == 0.0 ? std::max(0.0, std::abs(gj) - fit.lambda)
                                  : std::abs(gj + fit.lambda * (b > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

double lambda_max(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                  std::span<const double> row_weight, bool standardize) {
    check_shapes(x, t, row_weight);
    LogisticConfig cfg;
    cfg.standardize = standardize;
    Solver s(x, t, row_weight, cfg);
    return s.lambda_max();
}

std::vector<double> default_lambda_grid(double lambda_max, int count, double min_ratio) {
    if (count < 1) throw ConfigError("lambda grid needs at least one value");
    if (!(lambda_max > 0.0)) throw ConfigError("lambda_max must be positive");
    if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw ConfigError("lambda min ratio must be in (0, 1]");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid[static_cast<std::size_t>(i)] = lambda_max * std::pow(min_ratio, frac);
    }
    return grid;
}

LogisticFit fit_logistic_l1(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                            double lambda, const LogisticConfig& config) {
    check_shapes(x, t, {});
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    Solver s(x, t, {}, config);
    return s.solve(lambda, lambda);
}

std::vector<LogisticFit> fit_logistic_path(const CovariateMatrix& x,
                                           std::span<const std::uint8_t> t,
                                           std::span<const double> lambdas,
                                           const LogisticConfig& config,
                                           std::span<const double> row_weight) {
    check_shapes(x, t, row_weight);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(lambdas[k] >= 0.0)) throw ConfigError("lambda must be nonnegative");
        if (k > 0 && lambdas[k] > lambdas[k - 1]) throw ConfigError("lambda grid must be descending");
    }
    Solver s(x, t, row_weight, config);
    std::vector<LogisticFit> out;
    out.reserve(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k)
        out.push_back(s.solve(lambdas[k], k == 0 ? lambdas[k] : lambdas[k - 1]));
    return out;
}

std::vector<double> linear_predictor(const LogisticFit& fit, const CovariateMatrix& x) {
    if (fit.coefficients.size() != x.cols())
        throw ConfigError("model has " + std::to_string(fit.coefficients.size()) +
                          " coefficients but data has " + std::to_string(x.cols()) + " covariates");
    std::vector<double> eta(x.rows());
    x.multiply(fit.coefficients, eta);
    for (double& e : eta) e += fit.intercept;
    return eta;
}

std::vector<double> predict_proba(const LogisticFit& fit, const CovariateMatrix& x) {
    auto p = linear_predictor(fit, x);
    for (double& v : p) v = std::clamp(sigmoid(v), kProbabilityFloor, 1.0 - kProbabilityFloor);
    return p;
}

CvResult cv_select_lambda(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                          std::span<const double> grid, int k, std::uint64_t seed,
                          const LogisticConfig& config, int threads, int patience) {
    check_shapes(x, t, {});
    if (grid.empty()) throw ConfigError("lambda grid is empty");
    if (patience < 0) throw ConfigError("cv patience must be >= 0");
    const FoldAssignment folds = assign_stratified_folds(t, k, seed);
    const std::size_t n = x.rows();
    const auto nf = static_cast<std::size_t>(k);

    // Folds advance down the grid together so the search can stop once the
    // mean held-out log-likelihood has stopped improving.
    std::vector<std::vector<double>> train(nf, std::vector<double>(n));
    std::vector<std::unique_ptr<Solver>> solvers(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t i = 0; i < n; ++i)
            train[f][i] = folds.fold_of[i] == static_cast<int>(f) ? 0.0 : 1.0;
        solvers[f] = std::make_unique<Solver>(x, t, train[f], config);
    }

    CvResult cv;
    cv.lambda_grid.assign(grid.begin(), grid.end());
    cv.mean_heldout_loglik.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    cv.selected_index = 0;
    std::vector<double> ll(nf);
    int worse = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        parallel_for(nf, threads, [&](std::size_t f) {
            const LogisticFit fit = solvers[f]->solve(grid[g], g == 0 ? grid[g] : grid[g - 1]);
            std::vector<double> eta(n);
            x.multiply(fit.coefficients, eta);
            double s = 0.0, count = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (train[f][i] != 0.0) continue;
                const double p = std::clamp(sigmoid(eta[i] + fit.intercept), kProbabilityFloor,
                                            1.0 - kProbabilityFloor);
                s += t[i] ? std::log(p) : std::log1p(-p);
                count += 1.0;
            }
            ll[f] = s / count;
        });
        double s = 0.0;
        for (double v : ll) s += v;
        cv.mean_heldout_loglik[g] = s / k;
        cv.evaluated = g + 1;
        if (cv.mean_heldout_loglik[g] > cv.mean_heldout_loglik[cv.selected_index]) {
            cv.selected_index = g;
            worse = 0;
        } else if (g > 0 && patience > 0 && ++worse >= patience) {
            break;
        }
    }
    cv.selected_lambda = grid[cv.selected_index];
    cv.seed = seed;
    cv.folds = k;
    return cv;
}

PropensityModel fit_propensity_model(const CovariateMatrix& x, std::span<const std::uint8_t> t,
                                     std::span<const double> grid, int k, std::uint64_t seed,
                                     const LogisticConfig& config, int threads, int patience) {
    std::vector<double> owned;
    if (grid.empty()) {
        owned = default_lambda_grid(lambda_max(x, t, {}, config.standardize));
        grid = owned;
    }
    PropensityModel model;
    model.cv = cv_select_lambda(x, t, grid, k, seed, config, threads, patience);
    auto path = fit_logistic_path(x, t, grid.first(model.cv.selected_index + 1), config);
    model.fit = std::move(path.back());
    return model;
}

}  // namespace lsps
