#pragma once

// JSON configuration and reports for the command-line front end.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsps/dataset.hpp"
#include "lsps/pipeline.hpp"
#include "lsps/simbench.hpp"

namespace lsps::cli {

using nlohmann::json;

inline constexpr const char* kToolName = "lsps";
inline constexpr const char* kToolVersion = "0.1.0";

struct InputSpec {
    std::string format = "dense";  // dense | sparse
    std::filesystem::path path;    // dense CSV
    std::filesystem::path triplets, dictionary, subjects;
    DenseSchema schema;
};

struct StudyConfig {
    InputSpec input;
    PipelineConfig pipeline;
    std::vector<std::string> exclude;
};

struct Sim1Study {
    Sim1Config sim;
    std::vector<double> sigma2_grid{1e-4, 1e-2, 1.0, 1e2, 1e4};
    PipelineConfig pipeline;
    bool compute_r2 = true;
};

struct Sim2Study {
    Sim2Config sim;
    std::vector<std::size_t> n_grid{1000, 10000};
    std::vector<std::size_t> m_grid{10, 100, 1000, 10000};
    PipelineConfig pipeline;
    bool compute_r2 = true;
};

// Unknown keys and wrongly typed values throw ConfigError. Relative input
// paths are resolved against `base`.
PipelineConfig pipeline_from_json(const json& j);
StudyConfig study_from_json(const json& j, const std::filesystem::path& base);
Sim1Study sim1_from_json(const json& j);
Sim2Study sim2_from_json(const json& j);

json to_json(const PipelineConfig& c);
json to_json(const StudyConfig& c);
json to_json(const Sim1Study& c);
json to_json(const Sim2Study& c);

json read_json_file(const std::filesystem::path& path);

// One covariate name per line; blank lines and '#' comments are skipped.
std::vector<std::string> read_name_list(const std::filesystem::path& path);

CohortDataset load_cohort(const InputSpec& input);

json diagnostics_json(const Diagnostics& d);
json effect_json(const EffectEstimate& e);
json provenance(const std::string& command, const json& resolved, std::uint64_t seed);

void write_json(const json& j, const std::filesystem::path& path);

// RMSE against log10(x) per method. `points` select the rows to draw.
void write_rmse_svg(const SweepResult& result, std::span<const std::size_t> points,
                    const std::string& title, const std::string& x_label,
                    const std::filesystem::path& path);

}  // namespace lsps::cli
