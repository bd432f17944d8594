#include "lsps/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "csv.hpp"
#include "lsps/error.hpp"
#include "lsps/rng.hpp"

namespace lsps {

namespace {

std::string where(const std::filesystem::path& file, std::size_t line, std::string_view column) {
    return file.filename().string() + ":" + std::to_string(line) + ", column '" +
           std::string(column) + "'";
}

std::size_t find_column(const csv::Table& t, const std::string& name,
                        const std::filesystem::path& file) {
    std::size_t hit = t.header.size();
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.header[c] != name) continue;
        if (hit != t.header.size())
            throw DataError(file.filename().string() + ": duplicate column '" + name + "'");
        hit = c;
    }
    if (hit == t.header.size())
        throw DataError(file.filename().string() + ": missing column '" + name + "'");
    return hit;
}

double number_at(const csv::Table& t, std::size_t r, std::size_t c,
                 const std::filesystem::path& file) {
    auto v = csv::parse_double(t.rows[r][c]);
    if (!v || !std::isfinite(*v))
        throw DataError(where(file, t.line[r], t.header[c]) + ": non-numeric value '" +
                        t.rows[r][c] + "'");
    return *v;
}

std::uint8_t binary_at(const csv::Table& t, std::size_t r, std::size_t c,
                       const std::filesystem::path& file, std::string_view role) {
    double v = number_at(t, r, c, file);
    if (v != 0.0 && v != 1.0)
        throw DataError(where(file, t.line[r], t.header[c]) + ": " + std::string(role) +
                        " must be 0 or 1, found '" + t.rows[r][c] + "'");
    return static_cast<std::uint8_t>(v);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::size_t outcome_size(const Outcome& outcome) {
    return std::visit(
        [](const auto& o) {
            if constexpr (std::is_same_v<std::decay_t<decltype(o)>, ContinuousOutcome>)
                return o.y.size();
            else
                return o.time.size();
        },
        outcome);
}

CohortDataset::CohortDataset(CovariateMatrix covariates, std::vector<std::string> covariate_names,
                             Treatment treatment, Outcome outcome,
                             std::vector<std::string> subject_ids)
    : covariates_(std::move(covariates)),
      names_(std::move(covariate_names)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      subject_ids_(std::move(subject_ids)) {
    const std::size_t n = treatment_.size();
    if (covariates_.rows() != n)
        throw DataError("covariate matrix has " + std::to_string(covariates_.rows()) +
                        " rows but treatment has " + std::to_string(n) + " entries");
    if (outcome_size(outcome_) != n) throw DataError("outcome length differs from treatment length");
    if (names_.size() != covariates_.cols())
        throw DataError("expected " + std::to_string(covariates_.cols()) + " covariate names, got " +
                        std::to_string(names_.size()));
    if (!subject_ids_.empty() && subject_ids_.size() != n)
        throw DataError("subject id count differs from subject count");
    std::unordered_set<std::string_view> seen;
    for (const auto& name : names_)
        if (!seen.insert(name).second) throw DataError("duplicate covariate name '" + name + "'");
    for (std::size_t i = 0; i < n; ++i) {
        if (treatment_[i] > 1)
            throw DataError("treatment of subject " + std::to_string(i) + " is not 0/1");
        n_treated_ += treatment_[i];
    }
    if (auto* s = std::get_if<SurvivalOutcome>(&outcome_)) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(s->time[i] > 0.0) || !std::isfinite(s->time[i]))
                throw DataError("time of subject " + std::to_string(i) + " must be positive");
            if (s->event[i] > 1)
                throw DataError("event flag of subject " + std::to_string(i) + " is not 0/1");
        }
    } else {
        for (double y : std::get<ContinuousOutcome>(outcome_).y)
            if (!std::isfinite(y)) throw DataError("outcome contains a non-finite value");
    }
}

std::optional<std::size_t> CohortDataset::covariate_index(std::string_view name) const {
    for (std::size_t j = 0; j < names_.size(); ++j)
        if (names_[j] == name) return j;
    return std::nullopt;
}

void CohortDataset::require_both_groups() const {
    if (n_treated_ == 0 || n_treated_ == n_subjects())
        throw DataError("both treated and control subjects are required (treated " +
                        std::to_string(n_treated_) + " of " + std::to_string(n_subjects()) + ")");
}

CohortDataset CohortDataset::without_covariates(std::span<const std::string> names) const {
    std::vector<bool> drop(n_covariates(), false);
    for (const auto& name : names) {
        auto j = covariate_index(name);
        if (!j) throw DataError("unknown covariate '" + name + "' in exclusion list");
        drop[*j] = true;
    }
    std::vector<std::size_t> keep;
    std::vector<std::string> kept_names;
    for (std::size_t j = 0; j < n_covariates(); ++j) {
        if (drop[j]) continue;
        keep.push_back(j);
        kept_names.push_back(names_[j]);
    }
    return CohortDataset(covariates_.select_columns(keep), std::move(kept_names), treatment_,
                         outcome_, subject_ids_);
}

CohortDataset load_dense_csv(const std::filesystem::path& path, const DenseSchema& schema) {
    const bool survival = schema.time.has_value() || schema.event.has_value();
    if (survival == schema.outcome.has_value())
        throw ConfigError("schema needs either an outcome column or a time/event pair");
    if (survival && !(schema.time && schema.event))
        throw ConfigError("schema needs both time and event columns");

    const csv::Table t = csv::read(path);
    if (t.rows.empty()) throw DataError("'" + path.string() + "' has no data rows");
    {
        std::unordered_set<std::string_view> seen;
        for (const auto& h : t.header)
            if (!seen.insert(h).second)
                throw DataError(path.filename().string() + ": duplicate column '" + h + "'");
    }

    const std::size_t tcol = find_column(t, schema.treatment, path);
    std::vector<std::size_t> role_cols{tcol};
    std::size_t ycol = 0, timecol = 0, eventcol = 0, idcol = t.header.size();
    if (survival) {
        timecol = find_column(t, *schema.time, path);
        eventcol = find_column(t, *schema.event, path);
        role_cols.push_back(timecol);
        role_cols.push_back(eventcol);
    } else {
        ycol = find_column(t, *schema.outcome, path);
        role_cols.push_back(ycol);
    }
    if (schema.id) {
        idcol = find_column(t, *schema.id, path);
        role_cols.push_back(idcol);
    }

    const std::size_t n = t.rows.size();
    Treatment treatment(n);
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < n; ++r) treatment[r] = binary_at(t, r, tcol, path, "treatment");
    if (idcol != t.header.size())
        for (std::size_t r = 0; r < n; ++r) ids.push_back(t.rows[r][idcol]);

    Outcome outcome;
    if (survival) {
        SurvivalOutcome s;
        s.time.resize(n);
        s.event.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            s.time[r] = number_at(t, r, timecol, path);
            if (!(s.time[r] > 0.0))
                throw DataError(where(path, t.line[r], t.header[timecol]) +
                                ": time must be positive");
            s.event[r] = binary_at(t, r, eventcol, path, "event");
        }
        outcome = std::move(s);
    } else {
        ContinuousOutcome c;
        c.y.resize(n);
        for (std::size_t r = 0; r < n; ++r) c.y[r] = number_at(t, r, ycol, path);
        outcome = std::move(c);
    }

    CovariateMatrix::Builder builder(n);
    std::vector<std::string> names;
    std::vector<std::uint32_t> rows;
    std::vector<double> values;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (std::find(role_cols.begin(), role_cols.end(), c) != role_cols.end()) continue;
        rows.clear();
        values.clear();
        for (std::size_t r = 0; r < n; ++r) {
            double v = number_at(t, r, c, path);
            if (v != 0.0) {
                rows.push_back(static_cast<std::uint32_t>(r));
                values.push_back(v);
            }
        }
        builder.add_column(rows, values);
        names.push_back(t.header[c]);
    }
    return CohortDataset(std::move(builder).build(), std::move(names), std::move(treatment),
                         std::move(outcome), std::move(ids));
}

void write_dense_csv(const CohortDataset& data, const std::filesystem::path& path,
                     const DenseSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    const bool survival = data.is_survival();
    const bool with_ids = schema.id.has_value() && !data.subject_ids().empty();
    if (with_ids) out << *schema.id << ',';
    out << schema.treatment;
    if (survival)
        out << ',' << schema.time.value_or("time") << ',' << schema.event.value_or("event");
    else
        out << ',' << schema.outcome.value_or("y");
    for (const auto& name : data.covariate_names()) out << ',' << name;
    out << '\n';

    const std::size_t n = data.n_subjects();
    const std::size_t m = data.n_covariates();
    std::vector<std::vector<double>> cols(m);
    for (std::size_t j = 0; j < m; ++j) cols[j] = data.covariates().dense_column(j);
    for (std::size_t i = 0; i < n; ++i) {
        if (with_ids) out << data.subject_ids()[i] << ',';
        out << int(data.treatment()[i]);
        if (survival) {
            const auto& s = std::get<SurvivalOutcome>(data.outcome());
            out << ',' << format_double(s.time[i]) << ',' << int(s.event[i]);
        } else {
            out << ',' << format_double(std::get<ContinuousOutcome>(data.outcome()).y[i]);
        }
        for (std::size_t j = 0; j < m; ++j) out << ',' << format_double(cols[j][i]);
        out << '\n';
    }
}

CohortDataset load_sparse(const std::filesystem::path& triplets,
                          const std::filesystem::path& dictionary,
                          const std::filesystem::path& subjects) {
    const csv::Table subj = csv::read(subjects);
    const csv::Table dict = csv::read(dictionary);
    const csv::Table trip = csv::read(triplets);

    const std::size_t sid = find_column(subj, "subject_id", subjects);
    const std::size_t str = find_column(subj, "treatment", subjects);
    const bool survival =
        std::find(subj.header.begin(), subj.header.end(), "time") != subj.header.end();
    const std::size_t n = subj.rows.size();
    if (n == 0) throw DataError("'" + subjects.string() + "' has no subjects");

    std::unordered_map<std::string, std::uint32_t> row_of;
    std::vector<std::string> ids(n);
    Treatment treatment(n);
    for (std::size_t r = 0; r < n; ++r) {
        ids[r] = subj.rows[r][sid];
        if (!row_of.emplace(ids[r], static_cast<std::uint32_t>(r)).second)
            throw DataError(where(subjects, subj.line[r], "subject_id") + ": duplicate subject '" +
                            ids[r] + "'");
        treatment[r] = binary_at(subj, r, str, subjects, "treatment");
    }
    Outcome outcome;
    if (survival) {
        const std::size_t tc = find_column(subj, "time", subjects);
        const std::size_t ec = find_column(subj, "event", subjects);
        SurvivalOutcome s;
        for (std::size_t r = 0; r < n; ++r) {
            s.time.push_back(number_at(subj, r, tc, subjects));
            if (!(s.time.back() > 0.0))
                throw DataError(where(subjects, subj.line[r], "time") + ": time must be positive");
            s.event.push_back(binary_at(subj, r, ec, subjects, "event"));
        }
        outcome = std::move(s);
    } else {
        const std::size_t yc = find_column(subj, "y", subjects);
        ContinuousOutcome c;
        for (std::size_t r = 0; r < n; ++r) c.y.push_back(number_at(subj, r, yc, subjects));
        outcome = std::move(c);
    }

    const std::size_t dc = find_column(dict, "covariate_id", dictionary);
    const std::size_t dn = find_column(dict, "name", dictionary);
    std::unordered_map<std::string, std::size_t> col_of;
    std::vector<std::string> names;
    for (std::size_t r = 0; r < dict.rows.size(); ++r) {
        if (!col_of.emplace(dict.rows[r][dc], names.size()).second)
            throw DataError(where(dictionary, dict.line[r], "covariate_id") +
                            ": duplicate covariate id '" + dict.rows[r][dc] + "'");
        names.push_back(dict.rows[r][dn]);
    }

    const std::size_t ts = find_column(trip, "subject_id", triplets);
    const std::size_t tc = find_column(trip, "covariate_id", triplets);
    const std::size_t tv = find_column(trip, "value", triplets);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> entries(names.size());
    for (std::size_t r = 0; r < trip.rows.size(); ++r) {
        auto s = row_of.find(trip.rows[r][ts]);
        if (s == row_of.end())
            throw DataError(where(triplets, trip.line[r], "subject_id") + ": unknown subject '" +
                            trip.rows[r][ts] + "'");
        auto c = col_of.find(trip.rows[r][tc]);
        if (c == col_of.end())
            throw DataError(where(triplets, trip.line[r], "covariate_id") +
                            ": unknown covariate id '" + trip.rows[r][tc] + "'");
        entries[c->second].emplace_back(s->second, number_at(trip, r, tv, triplets));
    }

    CovariateMatrix::Builder builder(n);
    std::vector<std::uint32_t> rows;
    std::vector<double> values;
    for (std::size_t j = 0; j < entries.size(); ++j) {
        auto& e = entries[j];
        std::sort(e.begin(), e.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = 1; k < e.size(); ++k)
            if (e[k].first == e[k - 1].first)
                throw DataError(triplets.filename().string() + ": duplicate entry for subject '" +
                                ids[e[k].first] + "' and covariate '" + names[j] + "'");
        rows.clear();
        values.clear();
        for (auto [r, v] : e) {
            rows.push_back(r);
            values.push_back(v);
        }
        builder.add_column(rows, values);
    }
    return CohortDataset(std::move(builder).build(), std::move(names), std::move(treatment),
                         std::move(outcome), std::move(ids));
}

std::vector<std::size_t> FoldAssignment::sizes() const {
    std::vector<std::size_t> s(static_cast<std::size_t>(k), 0);
    for (int f : fold_of) ++s[static_cast<std::size_t>(f)];
    return s;
}

FoldAssignment assign_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw ConfigError("fold count must satisfy 2 <= k <= n (k=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(seed, {label("folds"), n, static_cast<std::uint64_t>(k)});
    rng.shuffle(order.begin(), order.end());
    FoldAssignment a{std::vector<int>(n), k, seed};
    for (std::size_t pos = 0; pos < n; ++pos) a.fold_of[order[pos]] = static_cast<int>(pos % k);
    return a;
}

FoldAssignment assign_stratified_folds(std::span<const std::uint8_t> treatment, int k,
                                       std::uint64_t seed) {
    const std::size_t n = treatment.size();
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw ConfigError("fold count must satisfy 2 <= k <= n (k=" + std::to_string(k) +
                          ", n=" + std::to_string(n) + ")");
    std::vector<std::size_t> control, treated;
    for (std::size_t i = 0; i < n; ++i) (treatment[i] ? treated : control).push_back(i);
    if (control.size() < static_cast<std::size_t>(k) || treated.size() < static_cast<std::size_t>(k))
        throw DataError("cannot build " + std::to_string(k) +
                        " folds that each contain both treatment groups (treated " +
                        std::to_string(treated.size()) + ", control " +
                        std::to_string(control.size()) + ")");
    Rng rng = Rng::stream(seed, {label("stratified-folds"), n, static_cast<std::uint64_t>(k)});
    rng.shuffle(control.begin(), control.end());
    rng.shuffle(treated.begin(), treated.end());
    FoldAssignment a{std::vector<int>(n), k, seed};
    std::size_t pos = 0;
    for (std::size_t i : control) a.fold_of[i] = static_cast<int>(pos++ % k);
    for (std::size_t i : treated) a.fold_of[i] = static_cast<int>(pos++ % k);
    return a;
}

}  // namespace lsps
