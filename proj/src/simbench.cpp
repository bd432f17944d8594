#include "lsps/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>

#include "lsps/error.hpp"
#include "lsps/parallel.hpp"
#include "lsps/ridge.hpp"
#include "lsps/rng.hpp"

namespace lsps {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sigmoid(double z) {
    const double p = 1.0 / (1.0 + std::exp(-z));
    return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

struct Streams {
    std::uint64_t master;
    std::uint64_t sim;
    std::uint64_t replicate;

    Rng operator()(std::string_view name, std::uint64_t index = 0) const {
        return Rng::stream(master, {sim, replicate, label(name), index});
    }
};

std::vector<std::uint8_t> draw_latent(const Streams& s, std::size_t n, std::size_t k) {
    std::vector<std::uint8_t> v(n * k);
    Rng rng = s("v");
    for (auto& b : v) b = rng.bernoulli(0.5);
    return v;
}

// x_ij ~ Bernoulli(sigmoid(v_i . beta_x[:, j])), beta_x ~ Normal(0, sd).
// With K binary latents there are only 2^K distinct logits per column, so
// each column is tabulated once over latent patterns.
CovariateMatrix draw_covariates(const Streams& s, const std::vector<std::uint8_t>& v, std::size_t n,
                                std::size_t k, std::size_t m, double sd) {
    std::vector<double> beta(k * m);
    Rng rb = s("beta_x");
    for (auto& b : beta) b = rb.normal(0.0, sd);

    const bool tabulate = k <= 16;
    std::vector<std::uint32_t> pattern;
    if (tabulate) {
        pattern.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t l = 0; l < k; ++l) pattern[i] |= static_cast<std::uint32_t>(v[i * k + l]) << l;
    }
    std::vector<double> table(tabulate ? std::size_t{1} << k : 0);
    CovariateMatrix::Builder builder(n);
    std::vector<std::uint32_t> rows;
    for (std::size_t j = 0; j < m; ++j) {
        const double* bj = beta.data() + j;  // column j: bj[l * m]
        if (tabulate) {
            std::vector<double> logit(table.size(), 0.0);
            for (std::size_t p = 1; p < table.size(); ++p) {
                const std::size_t low = static_cast<std::size_t>(std::countr_zero(p));
                logit[p] = logit[p & (p - 1)] + bj[low * m];
            }
            for (std::size_t p = 0; p < table.size(); ++p) table[p] = 1.0 / (1.0 + std::exp(-logit[p]));
        }
        Rng rx = s("x", j);
        rows.clear();
        for (std::size_t i = 0; i < n; ++i) {
            double p;
            if (tabulate) {
                p = table[pattern[i]];
            } else {
                double z = 0.0;
                for (std::size_t l = 0; l < k; ++l) z += v[i * k + l] * bj[l * m];
                p = 1.0 / (1.0 + std::exp(-z));
            }
            if (rx.uniform() < p) rows.push_back(static_cast<std::uint32_t>(i));
        }
        builder.add_binary_column(rows);
    }
    return std::move(builder).build();
}

// Normal(0,1) coefficients with floor(sparsity * m) of them set to zero.
std::vector<double> sparse_normal(const Streams& s, std::string_view name, std::size_t m, double sparsity) {
    std::vector<double> c(m);
    Rng rc = s(name);
    for (auto& v : c) v = rc.normal();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rm = s(name, 1);
    rm.shuffle(idx.begin(), idx.end());
    const auto zeros = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(m)));
    for (std::size_t q = 0; q < zeros; ++q) c[idx[q]] = 0.0;
    return c;
}

void draw_treatment(const Streams& s, SimDataset& ds, std::span<const double> gamma_x, double gamma_u) {
    const std::size_t n = ds.x.rows();
    std::vector<double> eta(n);
    ds.x.multiply(gamma_x, eta);
    ds.p_true.resize(n);
    ds.t.resize(n);
    Rng rt = s("t");
    for (std::size_t i = 0; i < n; ++i) {
        ds.p_true[i] = sigmoid(eta[i] + gamma_u * ds.u[i]);
        ds.t[i] = rt.uniform() < ds.p_true[i];
    }
}

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

}  // namespace

void validate(const Sim1Config& c) {
    if (c.n < 4 || c.m < 1 || c.k_latent < 1) throw ConfigError("sim1 needs n >= 4, m >= 1, k_latent >= 1");
    if (!(c.sparsity_u >= 0.0 && c.sparsity_u <= 1.0) || !(c.sparsity_gamma >= 0.0 && c.sparsity_gamma <= 1.0))
        throw ConfigError("sparsity fractions must lie in [0, 1]");
    if (!(c.sigma2 >= 0.0)) throw ConfigError("sigma2 must be nonnegative");
    if (!(c.outcome_noise_var >= 0.0)) throw ConfigError("outcome_noise_var must be nonnegative");
    if (!(c.beta_x_sd >= 0.0)) throw ConfigError("beta_x_sd must be nonnegative");
    if (c.replicates < 2) throw ConfigError("aggregate requires >= 2 replicates");
}

void validate(const Sim2Config& c) {
    if (c.n < 4 || c.m < 1 || c.k_latent < 1) throw ConfigError("sim2 needs n >= 4, m >= 1, k_latent >= 1");
    if (c.n_confounders > c.m) throw ConfigError("n_confounders must not exceed m");
    if (c.replicates < 2) throw ConfigError("aggregate requires >= 2 replicates");
}

SimDataset generate_sim1(const Sim1Config& cfg, int replicate) {
    validate(cfg);
    const Streams s{cfg.master_seed, label("sim1"), static_cast<std::uint64_t>(replicate)};
    SimDataset ds;
    ds.k_latent = cfg.k_latent;
    ds.nu_true = cfg.nu_true;
    ds.v = draw_latent(s, cfg.n, cfg.k_latent);
    ds.x = draw_covariates(s, ds.v, cfg.n, cfg.k_latent, cfg.m, cfg.beta_x_sd);

    const auto beta_u = sparse_normal(s, "beta_u", cfg.m, cfg.sparsity_u);
    ds.u.resize(cfg.n);
    ds.x.multiply(beta_u, ds.u);
    Rng re = s("epsilon");
    const double noise_sd = std::sqrt(cfg.sigma2);
    for (auto& u : ds.u) u += re.normal(0.0, noise_sd);

    const auto gamma_x = sparse_normal(s, "gamma_x", cfg.m, cfg.sparsity_gamma);
    std::vector<double> eta_x(cfg.m);
    Rng rh = s("eta_x");
    for (std::size_t j = 0; j < cfg.m; ++j) {
        const double draw = rh.normal();
        eta_x[j] = gamma_x[j] != 0.0 ? draw : 0.0;
    }
    draw_treatment(s, ds, gamma_x, cfg.gamma_u);

    ds.y.resize(cfg.n);
    ds.x.multiply(eta_x, ds.y);
    Rng ry = s("y");
    const double y_sd = std::sqrt(cfg.outcome_noise_var);
    for (std::size_t i = 0; i < cfg.n; ++i)
        ds.y[i] += cfg.eta_u * ds.u[i] + cfg.nu_true * ds.t[i] + ry.normal(0.0, y_sd);
    return ds;
}

SimDataset generate_sim2(const Sim2Config& cfg, int replicate) {
    validate(cfg);
    const Streams s{cfg.master_seed, label("sim2"), static_cast<std::uint64_t>(replicate)};
    SimDataset ds;
    ds.k_latent = cfg.k_latent;
    ds.nu_true = cfg.nu_true;
    ds.v = draw_latent(s, cfg.n, cfg.k_latent);

    std::vector<double> beta_u(cfg.k_latent);
    Rng rb = s("beta_u");
    for (auto& b : beta_u) b = rb.normal();
    ds.u.assign(cfg.n, 0.0);
    for (std::size_t i = 0; i < cfg.n; ++i)
        for (std::size_t l = 0; l < cfg.k_latent; ++l) ds.u[i] += ds.v[i * cfg.k_latent + l] * beta_u[l];

    ds.x = draw_covariates(s, ds.v, cfg.n, cfg.k_latent, cfg.m, 1.0);
    std::vector<double> unit(cfg.m, 0.0);
    std::fill_n(unit.begin(), cfg.n_confounders, 1.0);
    draw_treatment(s, ds, unit, cfg.gamma_u);

    ds.y.resize(cfg.n);
    ds.x.multiply(unit, ds.y);
    for (std::size_t i = 0; i < cfg.n; ++i) ds.y[i] += cfg.eta_u * ds.u[i] + cfg.nu_true * ds.t[i];
    return ds;
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::unadjusted: return "unadjusted";
        case Method::lsps: return "lsps";
        case Method::oracle: return "oracle";
    }
    return "?";
}

EstimatorResult run_estimator(const SimDataset& ds, Method method, const PipelineConfig& config) {
    EstimatorResult r;
    if (method == Method::unadjusted) {
        const auto e = estimate_ate(ds.y, ds.t, single_stratum(ds.t.size()));
        r.nu_hat = e.nu_hat;
        return r;
    }
    const StratifiedEstimate e = method == Method::lsps
                                     ? lsps_ate(ds.x, ds.t, ds.y, config)
                                     : lsps_ate(ds.x.with_appended_column(ds.u), ds.t, ds.y, config);
    r.nu_hat = e.ate.nu_hat;
    r.ps_hat = e.propensity.propensity;
    if (!e.propensity.model.fit.converged) r.warnings.push_back("propensity fit hit the sweep cap");
    r.warnings.insert(r.warnings.end(), e.strata.warnings.begin(), e.strata.warnings.end());
    r.warnings.insert(r.warnings.end(), e.ate.warnings.begin(), e.ate.warnings.end());
    return r;
}

double pinpointability_r2(const SimDataset& ds, std::uint64_t seed) {
    return heldout_r_squared(ds.x, ds.u, default_ridge_alphas(), 5, seed).r2;
}

PropensityError propensity_error(std::span<const double> p_hat, std::span<const double> p_true) {
    if (p_hat.size() != p_true.size()) throw ConfigError("propensity vectors differ in length");
    PropensityError e;
    for (std::size_t i = 0; i < p_hat.size(); ++i) e.sum_sq += (p_hat[i] - p_true[i]) * (p_hat[i] - p_true[i]);
    e.count = p_hat.size();
    return e;
}

SimSummary aggregate(std::span<const double> estimates, double nu_true,
                     std::span<const PropensityError> propensity) {
    if (estimates.size() < 2) throw ConfigError("aggregate requires >= 2 replicates");
    SimSummary s;
    const double r = static_cast<double>(estimates.size());
    s.replicates = estimates.size();
    for (double e : estimates) s.mean += e;
    s.mean /= r;
    for (double e : estimates) s.variance += (e - s.mean) * (e - s.mean);
    s.variance /= r;
    s.bias = s.mean - nu_true;
    s.rmse = std::sqrt(s.variance + s.bias * s.bias);

    // se of mean squared error, carried to the root by the delta method.
    const double mse = s.rmse * s.rmse;
    double spread = 0.0;
    for (double e : estimates) {
        const double d = (e - nu_true) * (e - nu_true) - mse;
        spread += d * d;
    }
    const double se_mse = std::sqrt(spread / (r - 1.0) / r);
    s.rmse_se = s.rmse > 0.0 ? se_mse / (2.0 * s.rmse) : 0.0;

    if (!propensity.empty()) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& p : propensity) {
            sum += p.sum_sq;
            count += p.count;
        }
        if (count > 0) s.rmse_propensity = std::sqrt(sum / static_cast<double>(count));
    }
    return s;
}

const SweepRow& SweepResult::row(std::size_t point, Method method) const {
    for (const auto& r : rows)
        if (r.point == point && r.method == method) return r;
    throw ConfigError("no sweep row for the requested point and method");
}

std::uint64_t point_seed(std::uint64_t master, std::size_t point) {
    return Rng::stream(master, {label("grid point"), point}).next_u64();
}

namespace {

template <class Generate>
SweepResult run_sweep(std::vector<SweepPoint> points, std::vector<int> replicates,
                      std::vector<double> nu_true, Generate&& generate, const SimOptions& options) {
    SweepResult out;
    out.points = std::move(points);
    struct Job {
        std::size_t point;
        int replicate;
        std::size_t first_record;
    };
    std::vector<Job> jobs;
    std::size_t records = 0;
    for (std::size_t p = 0; p < out.points.size(); ++p)
        for (int r = 0; r < replicates[p]; ++r) {
            jobs.push_back({p, r, records});
            records += std::size(kMethods);
        }
    out.records.resize(records);
    std::vector<std::optional<PropensityError>> ps_errors(records);

    PipelineConfig inner = options.pipeline;
    inner.threads = 1;
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(jobs.size(), options.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const SimDataset ds = generate(job.point, job.replicate);
        std::optional<double> r2;
        std::string r2_warning;
        if (options.compute_r2) {
            try {
                r2 = pinpointability_r2(ds, point_seed(options.pipeline.seed, job.point) + job.replicate);
            } catch (const std::exception& e) {
                r2_warning = std::string("pinpointability R^2 failed: ") + e.what();
            }
        }
        PipelineConfig cfg = inner;
        cfg.seed = Rng::stream(options.pipeline.seed, {label("cv"), job.point,
                                                      static_cast<std::uint64_t>(job.replicate)})
                       .next_u64();
        for (std::size_t k = 0; k < std::size(kMethods); ++k) {
            ReplicateRecord& rec = out.records[job.first_record + k];
            rec.point = job.point;
            rec.replicate = job.replicate;
            rec.method = kMethods[k];
            rec.r2 = r2;
            if (!r2_warning.empty()) rec.warnings.push_back(r2_warning);
            try {
                EstimatorResult er = run_estimator(ds, rec.method, cfg);
                rec.estimate = er.nu_hat;
                if (er.ps_hat) {
                    const auto pe = propensity_error(*er.ps_hat, ds.p_true);
                    ps_errors[job.first_record + k] = pe;
                    rec.ps_rmse = std::sqrt(pe.sum_sq / static_cast<double>(pe.count));
                }
                rec.warnings.insert(rec.warnings.end(), er.warnings.begin(), er.warnings.end());
            } catch (const std::exception& e) {
                rec.estimate = kNaN;
                rec.warnings.push_back(std::string("estimator failed: ") + e.what());
            }
        }
        const std::size_t finished = ++done;
        if (options.progress) {
            std::lock_guard lock(progress_mutex);
            options.progress(finished, jobs.size());
        }
    });

    for (std::size_t p = 0; p < out.points.size(); ++p)
        for (Method m : kMethods) {
            SweepRow row;
            row.point = p;
            row.method = m;
            std::vector<double> est;
            std::vector<PropensityError> pe;
            double r2_sum = 0.0;
            std::size_t r2_count = 0;
            for (std::size_t i = 0; i < out.records.size(); ++i) {
                const auto& rec = out.records[i];
                if (rec.point != p || rec.method != m) continue;
                if (rec.r2) {
                    r2_sum += *rec.r2;
                    ++r2_count;
                }
                if (std::isnan(rec.estimate)) {
                    ++row.failed;
                    continue;
                }
                est.push_back(rec.estimate);
                if (ps_errors[i]) pe.push_back(*ps_errors[i]);
            }
            if (est.size() >= 2) {
                row.summary = aggregate(est, nu_true[p], pe);
            } else {
                row.summary.mean = row.summary.bias = row.summary.variance = row.summary.rmse = kNaN;
                row.summary.replicates = est.size();
            }
            if (r2_count > 0) row.r2 = r2_sum / static_cast<double>(r2_count);
            out.rows.push_back(row);
        }
    return out;
}

}  // namespace

SweepResult run_sim1_sweep(const Sim1Config& base, std::span<const double> sigma2_grid,
                           const SimOptions& options) {
    if (sigma2_grid.empty()) throw ConfigError("sigma2 grid is empty");
    std::vector<Sim1Config> configs;
    std::vector<SweepPoint> points;
    for (std::size_t g = 0; g < sigma2_grid.size(); ++g) {
        Sim1Config c = base;
        c.sigma2 = sigma2_grid[g];
        c.master_seed = point_seed(base.master_seed, g);
        validate(c);
        configs.push_back(c);
        points.push_back({"sigma2", c.sigma2});
    }
    std::vector<int> reps(configs.size(), base.replicates);
    std::vector<double> nu(configs.size(), base.nu_true);
    return run_sweep(std::move(points), reps, nu,
                     [&](std::size_t p, int r) { return generate_sim1(configs[p], r); }, options);
}

SweepResult run_sim2_sweep(const Sim2Config& base, std::span<const std::size_t> n_grid,
                           std::span<const std::size_t> m_grid, const SimOptions& options) {
    if (n_grid.empty() || m_grid.empty()) throw ConfigError("sim2 grids must be nonempty");
    std::vector<Sim2Config> configs;
    std::vector<SweepPoint> points;
    for (std::size_t n : n_grid)
        for (std::size_t m : m_grid) {
            Sim2Config c = base;
            c.n = n;
            c.m = m;
            c.master_seed = point_seed(base.master_seed, configs.size());
            validate(c);
            configs.push_back(c);
            points.push_back({"m@n=" + std::to_string(n), static_cast<double>(m)});
        }
    std::vector<int> reps(configs.size(), base.replicates);
    std::vector<double> nu(configs.size(), base.nu_true);
    return run_sweep(std::move(points), reps, nu,
                     [&](std::size_t p, int r) { return generate_sim2(configs[p], r); }, options);
}

void write_raw_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "sweep_param,value,method,replicate,estimate,ps_rmse,r2\n";
    for (const auto& r : result.records) {
        const auto& p = result.points[r.point];
        out << p.param << ',' << format_number(p.value) << ',' << method_name(r.method) << ','
            << r.replicate << ',' << format_number(r.estimate) << ',' << format_optional(r.ps_rmse) << ','
            << format_optional(r.r2) << '\n';
    }
    if (!out) throw ConfigError("failed writing " + path.string());
}

void write_aggregate_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "sweep_param,value,method,bias,variance,rmse,rmse_propensity,r2,replicates,failed\n";
    for (const auto& r : result.rows) {
        const auto& p = result.points[r.point];
        out << p.param << ',' << format_number(p.value) << ',' << method_name(r.method) << ','
            << format_number(r.summary.bias) << ',' << format_number(r.summary.variance) << ','
            << format_number(r.summary.rmse) << ',' << format_optional(r.summary.rmse_propensity) << ','
            << format_optional(r.r2) << ',' << r.summary.replicates << ',' << r.failed << '\n';
    }
    if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace lsps
