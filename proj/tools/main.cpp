#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "lsps/error.hpp"
#include "study.hpp"

namespace fs = std::filesystem;
using namespace lsps;
using namespace lsps::cli;

namespace {

enum Exit { kOk = 0, kUsage = 64, kData = 65, kSoftware = 70 };

struct Common {
    std::string config;
    std::string out = ".";
    int threads = 0;
    std::optional<std::uint64_t> seed;
};

struct CohortFlags {
    std::string data, treatment, outcome, time, event, id;
    std::string triplets, dictionary, subjects;
    std::optional<int> strata;
    bool trim = false;
    std::string exclude;
};

int default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

json load_config(const std::string& path) { return path.empty() ? json::object() : read_json_file(path); }

fs::path ensure_out(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out + ": " + ec.message());
    return dir;
}

void progress(std::size_t done, std::size_t total) {
    if (done == total || done % 10 == 0) std::fprintf(stderr, "\r%zu / %zu jobs", done, total);
    if (done == total) std::fputc('\n', stderr);
}

void log_warnings(const SweepResult& r) {
    std::size_t failed = 0;
    for (const auto& row : r.rows) failed += row.failed;
    if (failed > 0) std::fprintf(stderr, "warning: %zu estimator runs failed; see the raw CSV (NA rows)\n", failed);
}

int run_sim1(const Common& c) {
    Sim1Study s = sim1_from_json(load_config(c.config));
    if (c.seed) s.sim.master_seed = *c.seed;
    validate(s.sim);
    SimOptions opt;
    opt.pipeline = s.pipeline;
    opt.compute_r2 = s.compute_r2;
    opt.threads = c.threads > 0 ? c.threads : default_threads();
    opt.progress = progress;
    const fs::path dir = ensure_out(c.out);
    const SweepResult r = run_sim1_sweep(s.sim, s.sigma2_grid, opt);
    write_raw_csv(r, dir / "sim1_raw.csv");
    write_aggregate_csv(r, dir / "sim1_agg.csv");
    std::vector<std::size_t> all(r.points.size());
    for (std::size_t p = 0; p < all.size(); ++p) all[p] = p;
    write_rmse_svg(r, all, "Simulation 1: RMSE of the effect estimate", "log10 sigma^2", dir / "sim1_rmse.svg");
    write_json(provenance("sim1", to_json(s), s.sim.master_seed), dir / "sim1_run.json");
    log_warnings(r);
    return kOk;
}

int run_sim2(const Common& c) {
    Sim2Study s = sim2_from_json(load_config(c.config));
    if (c.seed) s.sim.master_seed = *c.seed;
    SimOptions opt;
    opt.pipeline = s.pipeline;
    opt.compute_r2 = s.compute_r2;
    opt.threads = c.threads > 0 ? c.threads : default_threads();
    opt.progress = progress;
    const fs::path dir = ensure_out(c.out);
    const SweepResult r = run_sim2_sweep(s.sim, s.n_grid, s.m_grid, opt);
    write_raw_csv(r, dir / "sim2_raw.csv");
    write_aggregate_csv(r, dir / "sim2_agg.csv");
    for (std::size_t n : s.n_grid) {
        const std::string param = "m@n=" + std::to_string(n);
        std::vector<std::size_t> pts;
        for (std::size_t p = 0; p < r.points.size(); ++p)
            if (r.points[p].param == param) pts.push_back(p);
        write_rmse_svg(r, pts, "Simulation 2: RMSE at N = " + std::to_string(n), "log10 M",
                       dir / ("sim2_rmse_n" + std::to_string(n) + ".svg"));
    }
    write_json(provenance("sim2", to_json(s), s.sim.master_seed), dir / "sim2_run.json");
    log_warnings(r);
    return kOk;
}

StudyConfig resolve_study(const Common& c, const CohortFlags& f) {
    const fs::path base = c.config.empty() ? fs::current_path() : fs::path(c.config).parent_path();
    StudyConfig s = study_from_json(load_config(c.config), base);
    if (!f.data.empty()) {
        s.input.format = "dense";
        s.input.path = f.data;
    }
    if (!f.triplets.empty()) {
        s.input.format = "sparse";
        s.input.triplets = f.triplets;
        s.input.dictionary = f.dictionary;
        s.input.subjects = f.subjects;
    }
    if (!f.treatment.empty()) s.input.schema.treatment = f.treatment;
    if (!f.outcome.empty()) s.input.schema.outcome = f.outcome;
    if (!f.time.empty()) s.input.schema.time = f.time;
    if (!f.event.empty()) s.input.schema.event = f.event;
    if (!f.id.empty()) s.input.schema.id = f.id;
    if (f.strata) s.pipeline.strata = *f.strata;
    if (f.trim) s.pipeline.trim = true;
    if (!f.exclude.empty()) {
        const auto extra = read_name_list(f.exclude);
        s.exclude.insert(s.exclude.end(), extra.begin(), extra.end());
    }
    if (c.seed) s.pipeline.seed = *c.seed;
    s.pipeline.threads = c.threads > 0 ? c.threads : default_threads();
    validate(s.pipeline);
    return s;
}

int run_cohort(const Common& c, const CohortFlags& f, bool estimate) {
    const StudyConfig s = resolve_study(c, f);
    CohortDataset data = load_cohort(s.input);
    if (!s.exclude.empty()) data = data.without_covariates(s.exclude);
    const fs::path dir = ensure_out(c.out);

    json report = provenance(estimate ? "analyze" : "diagnose", to_json(s), s.pipeline.seed);
    report["cohort"] = {{"subjects", data.n_subjects()},
                        {"treated", data.n_treated()},
                        {"covariates", data.n_covariates()},
                        {"outcome", data.is_survival() ? "survival" : "continuous"}};
    int status = 0;
    std::vector<std::string> warnings;
    if (estimate) {
        const Analysis a = run_analysis(data, s.pipeline);
        status = a.diagnostics.status();
        report["diagnostics"] = diagnostics_json(a.diagnostics);
        report["estimate"] = effect_json(a.estimate);
        report["unadjusted"] = effect_json(a.unadjusted);
        warnings = a.diagnostics.warnings;
        write_balance_csv(a.diagnostics.balance, dir / "balance.csv");
    } else {
        const Diagnostics d = run_diagnostics(data, s.pipeline);
        status = d.status();
        report["diagnostics"] = diagnostics_json(d);
        warnings = d.warnings;
        write_balance_csv(d.balance, dir / "balance.csv");
    }
    if (status != 0) warnings.push_back("interpret with caution: diagnostics did not all pass");
    report["warnings"] = warnings;
    report["exit_code"] = status;
    write_json(report, dir / "report.json");
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-scale propensity score analysis: simulations and cohort studies"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Common common;
    CohortFlags flags;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON config file (defaults apply to omitted keys)");
        sub->add_option("--out", common.out, "output directory")->capture_default_str();
        sub->add_option("--threads", common.threads, "worker threads (default: all cores)");
        sub->add_option("--seed", common.seed, "master seed, overrides the config");
    };
    const auto add_cohort = [&](CLI::App* sub) {
        sub->add_option("--data", flags.data, "dense cohort CSV");
        sub->add_option("--treatment", flags.treatment, "treatment column (default t)");
        sub->add_option("--outcome", flags.outcome, "continuous outcome column");
        sub->add_option("--time", flags.time, "survival time column");
        sub->add_option("--event", flags.event, "event indicator column");
        sub->add_option("--id", flags.id, "subject id column");
        sub->add_option("--triplets", flags.triplets, "sparse covariate triplets CSV");
        sub->add_option("--dictionary", flags.dictionary, "sparse covariate dictionary CSV");
        sub->add_option("--subjects", flags.subjects, "sparse subject table CSV");
        sub->add_option("--strata", flags.strata, "number of propensity strata (default 10)");
        sub->add_flag("--trim", flags.trim, "drop subjects outside the treated score range");
        sub->add_option("--exclude", flags.exclude, "file listing covariates to leave out, one per line");
    };

    auto* sim1 = app.add_subcommand("sim1", "sigma^2 sweep of the first simulation");
    auto* sim2 = app.add_subcommand("sim2", "(N, M) sweep of the second simulation");
    auto* analyze = app.add_subcommand("analyze", "diagnostics and effect estimate for a cohort");
    auto* diagnose = app.add_subcommand("diagnose", "diagnostics only");
    for (auto* s : {sim1, sim2, analyze, diagnose}) add_common(s);
    add_cohort(analyze);
    add_cohort(diagnose);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*sim1) return run_sim1(common);
        if (*sim2) return run_sim2(common);
        if (*analyze) return run_cohort(common, flags, true);
        return run_cohort(common, flags, false);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kUsage;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kSoftware;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kSoftware;
    }
}
