#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "lsps/balance.hpp"
#include "lsps/effect.hpp"
#include "lsps/error.hpp"
#include "lsps/logistic.hpp"
#include "lsps/pipeline.hpp"
#include "lsps/propensity.hpp"
#include "lsps/ridge.hpp"
#include "lsps/simbench.hpp"

namespace py = pybind11;
using namespace lsps;

namespace {

using Dense = py::array_t<double, py::array::f_style | py::array::forcecast>;
using Flags = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Vec = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Columns that hold only 0/1 are stored as index lists.
CovariateMatrix to_matrix(const Dense& x) {
    if (x.ndim() != 2) throw ConfigError("covariates must be a 2-d array");
    const auto n = static_cast<std::size_t>(x.shape(0));
    const auto m = static_cast<std::size_t>(x.shape(1));
    CovariateMatrix::Builder b(n);
    const double* data = x.data();
    for (std::size_t j = 0; j < m; ++j) b.add_dense_column({data + j * n, n});
    return std::move(b).build();
}

Treatment to_treatment(const Flags& t) {
    Treatment out(t.data(), t.data() + t.size());
    for (auto v : out)
        if (v > 1) throw DataError("treatment must be 0/1");
    return out;
}

std::vector<double> to_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

py::array_t<double> to_numpy(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

Dense from_matrix(const CovariateMatrix& x) {
    Dense out({x.rows(), x.cols()});
    double* p = out.mutable_data();
    for (std::size_t j = 0; j < x.cols(); ++j) {
        const auto col = x.dense_column(j);
        std::copy(col.begin(), col.end(), p + j * x.rows());
    }
    return out;
}

PipelineConfig pipeline_config(int strata, int cv_folds, int lambda_count, double lambda_min_ratio, bool trim,
                               std::uint64_t seed, int threads) {
    PipelineConfig c;
    c.strata = strata;
    c.cv_folds = cv_folds;
    c.lambda_count = lambda_count;
    c.lambda_min_ratio = lambda_min_ratio;
    c.trim = trim;
    c.seed = seed;
    c.threads = threads;
    validate(c);
    return c;
}

py::dict stratification_dict(const Stratification& s) {
    py::dict d;
    d["k"] = s.k;
    d["boundaries"] = s.boundaries;
    d["stratum_of"] = s.stratum_of;
    d["warnings"] = s.warnings;
    return d;
}

py::dict ate_dict(const AteEstimate& a) {
    py::dict d;
    d["nu_hat"] = a.nu_hat;
    d["se"] = a.se;
    d["ci"] = py::make_tuple(a.ci_low, a.ci_high);
    d["dropped_strata"] = a.dropped_strata;
    d["warnings"] = a.warnings;
    return d;
}

py::dict hr_dict(const HazardRatioEstimate& h) {
    py::dict d;
    d["hr"] = h.hr;
    d["log_hr"] = h.zeta_hat;
    d["se_log_hr"] = h.se_zeta;
    d["ci"] = py::make_tuple(h.ci_low, h.ci_high);
    d["warnings"] = h.warnings;
    return d;
}

py::dict effect_dict(const EffectEstimate& e) {
    if (const auto* a = std::get_if<AteEstimate>(&e)) return ate_dict(*a);
    return hr_dict(std::get<HazardRatioEstimate>(e));
}

Sim1Config sim1_config(std::size_t n, std::size_t m, double sigma2, int replicates, std::uint64_t seed) {
    Sim1Config c;
    c.n = n;
    c.m = m;
    c.sigma2 = sigma2;
    c.replicates = replicates;
    c.master_seed = seed;
    return c;
}

py::dict sim_dict(const SimDataset& ds) {
    py::dict d;
    d["x"] = from_matrix(ds.x);
    d["u"] = to_numpy(ds.u);
    d["t"] = py::array_t<std::uint8_t>(ds.t.size(), ds.t.data());
    d["y"] = to_numpy(ds.y);
    d["p_true"] = to_numpy(ds.p_true);
    d["nu_true"] = ds.nu_true;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Large-scale propensity score estimation";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("lambda_max", [](const Dense& x, const Flags& t) { return lambda_max(to_matrix(x), to_treatment(t)); },
          py::arg("x"), py::arg("t"));

    m.def(
        "fit_logistic_l1",
        [](const Dense& x, const Flags& t, double lambda, double tolerance) {
            LogisticConfig cfg;
            cfg.tolerance = tolerance;
            const auto fit = fit_logistic_l1(to_matrix(x), to_treatment(t), lambda, cfg);
            py::dict d;
            d["coefficients"] = to_numpy(fit.coefficients);
            d["intercept"] = fit.intercept;
            d["converged"] = fit.converged;
            d["iterations"] = fit.iterations;
            d["objective"] = fit.final_objective;
            return d;
        },
        py::arg("x"), py::arg("t"), py::arg("lam"), py::arg("tolerance") = 1e-6,
        "L1-penalised logistic regression with mean log-likelihood loss and free intercept.");

    m.def(
        "kkt_residual",
        [](const Dense& x, const Flags& t, const Vec& coefficients, double intercept, double lambda) {
            LogisticFit fit;
            fit.coefficients = to_vector(coefficients);
            fit.intercept = intercept;
            fit.lambda = lambda;
            return kkt_residual(fit, to_matrix(x), to_treatment(t));
        },
        py::arg("x"), py::arg("t"), py::arg("coefficients"), py::arg("intercept"), py::arg("lam"));

    m.def(
        "heldout_r2",
        [](const Dense& x, const Vec& target, int folds, std::uint64_t seed) {
            return heldout_r_squared(to_matrix(x), to_vector(target), default_ridge_alphas(), folds, seed).r2;
        },
        py::arg("x"), py::arg("target"), py::arg("folds") = 5, py::arg("seed") = 1);

    m.def(
        "preference",
        [](const Vec& p, double treated_fraction) {
            return to_numpy(compute_preference(to_vector(p), treated_fraction).values);
        },
        py::arg("propensity"), py::arg("treated_fraction"));

    m.def(
        "stratify",
        [](const Vec& score, const Flags& t, int k, bool trim) {
            return stratification_dict(stratify(to_vector(score), to_treatment(t), k, trim));
        },
        py::arg("score"), py::arg("t"), py::arg("k") = 10, py::arg("trim") = false);

    m.def(
        "weighted_smd",
        [](const Vec& column, const Flags& t, const Vec& w) {
            return weighted_smd(to_vector(column), to_treatment(t), to_vector(w));
        },
        py::arg("column"), py::arg("t"), py::arg("weights"));

    m.def(
        "estimate_ate",
        [](const Vec& y, const Flags& t, const std::vector<int>& stratum_of) {
            Stratification s;
            s.stratum_of = stratum_of;
            for (int v : stratum_of) s.k = std::max(s.k, v + 1);
            return ate_dict(estimate_ate(to_vector(y), to_treatment(t), s));
        },
        py::arg("y"), py::arg("t"), py::arg("stratum_of"));

    m.def(
        "fit_cox",
        [](const Vec& time, const Flags& event, const Flags& t, const std::vector<int>& stratum_of) {
            Stratification s;
            s.stratum_of = stratum_of;
            for (int v : stratum_of) s.k = std::max(s.k, v + 1);
            const Treatment ev(event.data(), event.data() + event.size());
            return hr_dict(fit_cox_stratified(to_vector(time), ev, to_treatment(t), s));
        },
        py::arg("time"), py::arg("event"), py::arg("t"), py::arg("stratum_of"));

    m.def(
        "analyze",
        [](const Dense& x, const Flags& t, const Vec& y, int strata, int cv_folds, int lambda_count,
           double lambda_min_ratio, bool trim, std::uint64_t seed, int threads) {
            const auto cfg = pipeline_config(strata, cv_folds, lambda_count, lambda_min_ratio, trim, seed, threads);
            const auto xm = to_matrix(x);
            std::vector<std::string> names;
            for (std::size_t j = 0; j < xm.cols(); ++j) names.push_back("x" + std::to_string(j));
            const CohortDataset data(xm, names, to_treatment(t), ContinuousOutcome{to_vector(y)});
            Analysis a;
            {
                py::gil_scoped_release release;
                a = run_analysis(data, cfg);
            }
            py::dict d;
            d["estimate"] = effect_dict(a.estimate);
            d["unadjusted"] = effect_dict(a.unadjusted);
            d["propensity"] = to_numpy(a.diagnostics.propensity.propensity);
            d["selected_lambda"] = a.diagnostics.propensity.model.cv.selected_lambda;
            d["strata"] = stratification_dict(a.diagnostics.strata);
            d["equipoise_fraction"] = a.diagnostics.equipoise.fraction_in_band;
            d["max_abs_adjusted_smd"] = a.diagnostics.balance.max_abs_adjusted_smd;
            d["status"] = a.diagnostics.status();
            d["warnings"] = a.diagnostics.warnings;
            return d;
        },
        py::arg("x"), py::arg("t"), py::arg("y"), py::arg("strata") = 10, py::arg("cv_folds") = 10,
        py::arg("lambda_count") = 20, py::arg("lambda_min_ratio") = 1e-4, py::arg("trim") = false,
        py::arg("seed") = 20240601, py::arg("threads") = 1,
        "Full pipeline on a continuous outcome: CV propensity fit, equipoise, strata, balance, ATE.");

    m.def(
        "generate_sim1",
        [](std::size_t n, std::size_t m_, double sigma2, int replicate, std::uint64_t seed) {
            return sim_dict(generate_sim1(sim1_config(n, m_, sigma2, 2, seed), replicate));
        },
        py::arg("n") = 2000, py::arg("m") = 1000, py::arg("sigma2") = 0.0, py::arg("replicate") = 0,
        py::arg("seed") = 1);

    m.def(
        "aggregate",
        [](const Vec& estimates, double nu_true) {
            const auto s = aggregate(to_vector(estimates), nu_true);
            py::dict d;
            d["mean"] = s.mean;
            d["bias"] = s.bias;
            d["variance"] = s.variance;
            d["rmse"] = s.rmse;
            return d;
        },
        py::arg("estimates"), py::arg("nu_true"));
}
