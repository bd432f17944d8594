#include "study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "lsps/error.hpp"

namespace lsps::cli {

namespace {

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + "." + key + " has the wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError("unknown key " + where_ + "." + key);
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

template <class T>
void get_optional(Fields& f, const char* key, std::optional<T>& out) {
    T v{};
    bool present = false;
    if (const json* c = f.child(key)) {
        if (!c->is_string()) throw ConfigError(std::string("input.") + key + " must be a string");
        v = c->get<T>();
        present = true;
    }
    if (present) out = v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void read_logistic(const json& j, LogisticConfig& c) {
    Fields f(j, "pipeline.logistic");
    f.get("tolerance", c.tolerance);
    f.get("max_sweeps", c.max_sweeps);
    f.get("coefficient_guard", c.coefficient_guard);
    f.get("standardize", c.standardize);
    f.finish();
}

}  // namespace

PipelineConfig pipeline_from_json(const json& j) {
    PipelineConfig c;
    Fields f(j, "pipeline");
    f.get("strata", c.strata);
    f.get("cv_folds", c.cv_folds);
    f.get("cv_patience", c.cv_patience);
    f.get("lambda_count", c.lambda_count);
    f.get("lambda_min_ratio", c.lambda_min_ratio);
    f.get("lambda_grid", c.lambda_grid);
    f.get("trim", c.trim);
    f.get("instrument_treatment_threshold", c.instrument_treatment_threshold);
    f.get("instrument_outcome_threshold", c.instrument_outcome_threshold);
    f.get("seed", c.seed);
    f.get("threads", c.threads);
    if (const json* l = f.child("logistic")) read_logistic(*l, c.logistic);
    f.finish();
    validate(c);
    return c;
}

StudyConfig study_from_json(const json& j, const std::filesystem::path& base) {
    StudyConfig c;
    Fields f(j, "config");
    if (const json* in = f.child("input")) {
        Fields g(*in, "input");
        std::string path, triplets, dictionary, subjects;
        g.get("format", c.input.format);
        g.get("path", path);
        g.get("triplets", triplets);
        g.get("dictionary", dictionary);
        g.get("subjects", subjects);
        g.get("treatment", c.input.schema.treatment);
        get_optional(g, "outcome", c.input.schema.outcome);
        get_optional(g, "time", c.input.schema.time);
        get_optional(g, "event", c.input.schema.event);
        get_optional(g, "id", c.input.schema.id);
        g.finish();
        c.input.path = resolve(base, path);
        c.input.triplets = resolve(base, triplets);
        c.input.dictionary = resolve(base, dictionary);
        c.input.subjects = resolve(base, subjects);
    }
    if (const json* p = f.child("pipeline")) c.pipeline = pipeline_from_json(*p);
    f.get("exclude", c.exclude);
    f.finish();
    if (c.input.format != "dense" && c.input.format != "sparse")
        throw ConfigError("input.format must be \"dense\" or \"sparse\"");
    return c;
}

Sim1Study sim1_from_json(const json& j) {
    Sim1Study s;
    Fields f(j, "config");
    if (const json* c = f.child("sim1")) {
        Fields g(*c, "sim1");
        g.get("n", s.sim.n);
        g.get("m", s.sim.m);
        g.get("k_latent", s.sim.k_latent);
        g.get("beta_x_sd", s.sim.beta_x_sd);
        g.get("sparsity_u", s.sim.sparsity_u);
        g.get("sparsity_gamma", s.sim.sparsity_gamma);
        g.get("gamma_u", s.sim.gamma_u);
        g.get("eta_u", s.sim.eta_u);
        g.get("nu_true", s.sim.nu_true);
        g.get("outcome_noise_var", s.sim.outcome_noise_var);
        g.get("replicates", s.sim.replicates);
        g.get("master_seed", s.sim.master_seed);
        g.finish();
    }
    f.get("sigma2_grid", s.sigma2_grid);
    if (const json* p = f.child("pipeline")) s.pipeline = pipeline_from_json(*p);
    f.get("compute_r2", s.compute_r2);
    f.finish();
    if (s.sigma2_grid.empty()) throw ConfigError("sigma2_grid is empty");
    validate(s.sim);
    return s;
}

Sim2Study sim2_from_json(const json& j) {
    Sim2Study s;
    Fields f(j, "config");
    if (const json* c = f.child("sim2")) {
        Fields g(*c, "sim2");
        g.get("k_latent", s.sim.k_latent);
        g.get("gamma_u", s.sim.gamma_u);
        g.get("eta_u", s.sim.eta_u);
        g.get("nu_true", s.sim.nu_true);
        g.get("n_confounders", s.sim.n_confounders);
        g.get("replicates", s.sim.replicates);
        g.get("master_seed", s.sim.master_seed);
        g.finish();
    }
    f.get("n_grid", s.n_grid);
    f.get("m_grid", s.m_grid);
    if (const json* p = f.child("pipeline")) s.pipeline = pipeline_from_json(*p);
    f.get("compute_r2", s.compute_r2);
    f.finish();
    if (s.n_grid.empty() || s.m_grid.empty()) throw ConfigError("n_grid and m_grid must be nonempty");
    validate(s.sim);
    return s;
}

json to_json(const PipelineConfig& c) {
    return {{"strata", c.strata},
            {"cv_folds", c.cv_folds},
            {"cv_patience", c.cv_patience},
            {"lambda_count", c.lambda_count},
            {"lambda_min_ratio", c.lambda_min_ratio},
            {"lambda_grid", c.lambda_grid},
            {"trim", c.trim},
            {"instrument_treatment_threshold", c.instrument_treatment_threshold},
            {"instrument_outcome_threshold", c.instrument_outcome_threshold},
            {"seed", c.seed},
            {"threads", c.threads},
            {"logistic",
             {{"tolerance", c.logistic.tolerance},
              {"max_sweeps", c.logistic.max_sweeps},
              {"coefficient_guard", c.logistic.coefficient_guard},
              {"standardize", c.logistic.standardize}}}};
}

json to_json(const StudyConfig& c) {
    json in{{"format", c.input.format}, {"treatment", c.input.schema.treatment}};
    if (c.input.format == "dense") {
        in["path"] = c.input.path.string();
    } else {
        in["triplets"] = c.input.triplets.string();
        in["dictionary"] = c.input.dictionary.string();
        in["subjects"] = c.input.subjects.string();
    }
    if (c.input.schema.outcome) in["outcome"] = *c.input.schema.outcome;
    if (c.input.schema.time) in["time"] = *c.input.schema.time;
    if (c.input.schema.event) in["event"] = *c.input.schema.event;
    if (c.input.schema.id) in["id"] = *c.input.schema.id;
    return {{"input", in}, {"pipeline", to_json(c.pipeline)}, {"exclude", c.exclude}};
}

json to_json(const Sim1Study& s) {
    const auto& c = s.sim;
    return {{"sim1",
             {{"n", c.n},
              {"m", c.m},
              {"k_latent", c.k_latent},
              {"beta_x_sd", c.beta_x_sd},
              {"sparsity_u", c.sparsity_u},
              {"sparsity_gamma", c.sparsity_gamma},
              {"gamma_u", c.gamma_u},
              {"eta_u", c.eta_u},
              {"nu_true", c.nu_true},
              {"outcome_noise_var", c.outcome_noise_var},
              {"replicates", c.replicates},
              {"master_seed", c.master_seed}}},
            {"sigma2_grid", s.sigma2_grid},
            {"pipeline", to_json(s.pipeline)},
            {"compute_r2", s.compute_r2}};
}

json to_json(const Sim2Study& s) {
    const auto& c = s.sim;
    return {{"sim2",
             {{"k_latent", c.k_latent},
              {"gamma_u", c.gamma_u},
              {"eta_u", c.eta_u},
              {"nu_true", c.nu_true},
              {"n_confounders", c.n_confounders},
              {"replicates", c.replicates},
              {"master_seed", c.master_seed}}},
            {"n_grid", s.n_grid},
            {"m_grid", s.m_grid},
            {"pipeline", to_json(s.pipeline)},
            {"compute_r2", s.compute_r2}};
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

std::vector<std::string> read_name_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open exclude list " + path.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        names.push_back(line.substr(b, e - b + 1));
    }
    return names;
}

CohortDataset load_cohort(const InputSpec& input) {
    if (input.format == "sparse") {
        if (input.triplets.empty() || input.dictionary.empty() || input.subjects.empty())
            throw ConfigError("sparse input needs triplets, dictionary and subjects paths");
        return load_sparse(input.triplets, input.dictionary, input.subjects);
    }
    if (input.path.empty()) throw ConfigError("no input data path given");
    return load_dense_csv(input.path, input.schema);
}

namespace {

// JSON has no infinities; they are written as strings.
json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

json diagnostics_json(const Diagnostics& d) {
    json instruments = json::array();
    for (const auto& c : d.instruments.flagged)
        instruments.push_back({{"covariate", c.name},
                               {"treatment_correlation", number(c.treatment_correlation)},
                               {"outcome_correlation", number(c.outcome_correlation)}});
    const auto& cv = d.propensity.model.cv;
    json cv_curve = json::array();
    for (std::size_t g = 0; g < cv.evaluated; ++g)
        cv_curve.push_back({{"lambda", cv.lambda_grid[g]}, {"heldout_loglik", number(cv.mean_heldout_loglik[g])}});
    const auto& fit = d.propensity.model.fit;
    json sizes = json::array();
    for (auto s : d.strata.stratum_sizes()) sizes.push_back(s);
    std::size_t trimmed = std::count(d.strata.stratum_of.begin(), d.strata.stratum_of.end(),
                                     Stratification::kTrimmed);
    return {
        {"instruments",
         {{"flagged", instruments},
          {"treatment_threshold", d.instruments.treatment_threshold},
          {"outcome_threshold", d.instruments.outcome_threshold}}},
        {"propensity",
         {{"selected_lambda", cv.selected_lambda},
          {"cv_folds", cv.folds},
          {"cv_seed", cv.seed},
          {"cv_curve", cv_curve},
          {"nonzero_coefficients", fit.nonzeros()},
          {"converged", fit.converged},
          {"sweeps", fit.iterations}}},
        {"equipoise",
         {{"fraction_in_band", d.equipoise.fraction_in_band},
          {"band", {d.equipoise.band_low, d.equipoise.band_high}},
          {"pass", d.equipoise.pass}}},
        {"strata", {{"k", d.strata.k}, {"boundaries", d.strata.boundaries}, {"sizes", sizes}, {"trimmed", trimmed}}},
        {"balance",
         {{"max_abs_unadjusted_smd", number(d.balance.max_abs_unadjusted_smd)},
          {"max_abs_adjusted_smd", number(d.balance.max_abs_adjusted_smd)},
          {"threshold", BalanceReport::kThreshold},
          {"degenerate_strata", d.balance.degenerate_strata},
          {"pass", d.balance.pass}}},
    };
}

json effect_json(const EffectEstimate& e) {
    if (const auto* a = std::get_if<AteEstimate>(&e)) {
        json strata = json::array();
        for (const auto& s : a->per_stratum)
            strata.push_back({{"stratum", s.stratum}, {"nu", number(s.nu)}, {"se", number(s.se)},
                              {"weight", s.weight}, {"size", s.size}});
        return {{"type", "ate"},         {"nu_hat", number(a->nu_hat)}, {"se", number(a->se)},
                {"ci95", {number(a->ci_low), number(a->ci_high)}},
                {"per_stratum", strata}, {"dropped_strata", a->dropped_strata}};
    }
    const auto& h = std::get<HazardRatioEstimate>(e);
    json strata = json::array();
    for (const auto& s : h.per_stratum)
        strata.push_back({{"stratum", s.stratum}, {"zeta", s.zeta ? number(*s.zeta) : json(nullptr)},
                          {"size", s.size}, {"events", s.events}});
    return {{"type", "hazard_ratio"},
            {"hr", number(h.hr)},
            {"log_hr", number(h.zeta_hat)},
            {"se_log_hr", number(h.se_zeta)},
            {"ci95", {number(h.ci_low), number(h.ci_high)}},
            {"iterations", h.iterations},
            {"per_stratum", strata}};
}

json provenance(const std::string& command, const json& resolved, std::uint64_t seed) {
    return {{"tool", kToolName}, {"version", kToolVersion}, {"command", command},
            {"seed", seed},      {"resolved_config", resolved}};
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("failed writing " + path.string());
}

void write_rmse_svg(const SweepResult& result, std::span<const std::size_t> points,
                    const std::string& title, const std::string& x_label,
                    const std::filesystem::path& path) {
    constexpr double W = 640, H = 420, L = 70, R = 130, T = 40, B = 60;
    struct Series {
        Method method;
        const char* colour;
        std::vector<std::pair<double, double>> xy;
    };
    std::vector<Series> series{{Method::unadjusted, "#888888", {}},
                               {Method::lsps, "#1f77b4", {}},
                               {Method::oracle, "#d62728", {}}};
    double x0 = 1e300, x1 = -1e300, y1 = 0.0;
    for (auto& s : series) {
        for (std::size_t p : points) {
            const double v = result.points[p].value;
            const double rmse = result.row(p, s.method).summary.rmse;
            if (!(v > 0.0) || !std::isfinite(rmse)) continue;
            const double lx = std::log10(v);
            s.xy.emplace_back(lx, rmse);
            x0 = std::min(x0, lx);
            x1 = std::max(x1, lx);
            y1 = std::max(y1, rmse);
        }
    }
    if (x0 > x1) x0 = x1 = 0.0;
    if (x1 - x0 < 1e-9) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (!(y1 > 0.0)) y1 = 1.0;
    y1 *= 1.05;
    const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    const auto py = [&](double y) { return H - B - y / y1 * (H - T - B); };

    std::ostringstream svg;
    char buf[128];
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y1 * i / 4;
        std::snprintf(buf, sizeof buf, "%.3g", y);
        svg << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
        const double x = x0 + (x1 - x0) * i / 4;
        std::snprintf(buf, sizeof buf, "%.2g", x);
        svg << "<text x=\"" << px(x) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << buf
            << "</text>\n";
    }
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">" << x_label
        << "</text>\n";
    svg << "<text transform=\"translate(18," << (T + H - B) / 2
        << ") rotate(-90)\" text-anchor=\"middle\">RMSE</text>\n";
    int slot = 0;
    for (const auto& s : series) {
        if (!s.xy.empty()) {
            svg << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"2\" points=\"";
            for (const auto& [x, y] : s.xy) {
                std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
                svg << buf;
            }
            svg << "\"/>\n";
        }
        const double ly = T + 10 + 20 * slot++;
        svg << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 40 << "\" y2=\"" << ly
            << "\" stroke=\"" << s.colour << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << W - R + 46 << "\" y=\"" << ly + 4 << "\">" << method_name(s.method) << "</text>\n";
    }
    svg << "</svg>\n";
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << svg.str();
}

}  // namespace lsps::cli
