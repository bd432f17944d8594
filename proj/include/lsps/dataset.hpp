#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lsps/covariates.hpp"

namespace lsps {

using Treatment = std::vector<std::uint8_t>;

struct ContinuousOutcome {
    std::vector<double> y;
};

struct SurvivalOutcome {
    std::vector<double> time;          // strictly positive
    std::vector<std::uint8_t> event;   // 1 = event observed, 0 = censored
};

using Outcome = std::variant<ContinuousOutcome, SurvivalOutcome>;

std::size_t outcome_size(const Outcome& outcome);

// N subjects with M covariates, a binary treatment and one outcome.
// Immutable once constructed; the constructor validates every invariant and
// throws DataError on violation.
class CohortDataset {
public:
    CohortDataset(CovariateMatrix covariates, std::vector<std::string> covariate_names,
                  Treatment treatment, Outcome outcome, std::vector<std::string> subject_ids = {});

    std::size_t n_subjects() const noexcept { return treatment_.size(); }
    std::size_t n_covariates() const noexcept { return covariates_.cols(); }
    std::size_t n_treated() const noexcept { return n_treated_; }

    const CovariateMatrix& covariates() const noexcept { return covariates_; }
    const std::vector<std::string>& covariate_names() const noexcept { return names_; }
    const Treatment& treatment() const noexcept { return treatment_; }
    const Outcome& outcome() const noexcept { return outcome_; }
    const std::vector<std::string>& subject_ids() const noexcept { return subject_ids_; }

    bool is_survival() const noexcept { return std::holds_alternative<SurvivalOutcome>(outcome_); }
    std::optional<std::size_t> covariate_index(std::string_view name) const;

    // Throws DataError unless both treatment groups are present.
    void require_both_groups() const;

    // Copy without the named covariates; unknown names are a DataError.
    CohortDataset without_covariates(std::span<const std::string> names) const;

private:
    CovariateMatrix covariates_;
    std::vector<std::string> names_;
    Treatment treatment_;
    Outcome outcome_;
    std::vector<std::string> subject_ids_;
    std::size_t n_treated_ = 0;
};

// Column roles for the dense CSV format. Exactly one of `outcome` or the
// (`time`, `event`) pair must be set. Every other column except `id` is a
// covariate, in file order.
struct DenseSchema {
    std::string treatment = "t";
    std::optional<std::string> outcome;
    std::optional<std::string> time;
    std::optional<std::string> event;
    std::optional<std::string> id;
};

CohortDataset load_dense_csv(const std::filesystem::path& path, const DenseSchema& schema);
void write_dense_csv(const CohortDataset& data, const std::filesystem::path& path,
                     const DenseSchema& schema);

// Triplets `subject_id,covariate_id,value`; dictionary `covariate_id,name`;
// subjects `subject_id,treatment` followed by `y` or `time,event`.
CohortDataset load_sparse(const std::filesystem::path& triplets,
                          const std::filesystem::path& dictionary,
                          const std::filesystem::path& subjects);

struct FoldAssignment {
    std::vector<int> fold_of;
    int k = 0;
    std::uint64_t seed = 0;

    std::vector<std::size_t> sizes() const;
};

FoldAssignment assign_folds(std::size_t n, int k, std::uint64_t seed);

// Folds balanced within each treatment group, so every fold holds both groups
// whenever each group has at least k members. Throws DataError otherwise.
FoldAssignment assign_stratified_folds(std::span<const std::uint8_t> treatment, int k,
                                       std::uint64_t seed);

}  // namespace lsps
