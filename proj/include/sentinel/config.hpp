#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sentinel/detection.hpp"
#include "sentinel/epidemic.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/population.hpp"
#include "sentinel/surveillance.hpp"

namespace sentinel {

struct EvaluationConfig {
    int maxlag = 15;
    std::vector<double> thresholds = threshold_sequence(0.10, 0.60, 0.05);
    MetricParams metrics;
    FitOptions fit;
};

/// Everything one pipeline run depends on. Defaults reproduce the reference
/// workflow (seed 656, 16 catchments, 10 seasons of 300 days, lags 1..15).
struct RunConfig {
    std::uint64_t seed = 656;
    PopulationSpec population;
    /// epidemic.N == 0 means "size of the simulated population".
    SsirParams epidemic = default_epidemic();
    AbsenteeismParams surveillance;
    EvaluationConfig evaluation;
    std::filesystem::path output_dir = "out";
    int threads = 1;
    /// Season shown in the figures.
    int plot_year = 4;

    static SsirParams default_epidemic();
    /// Checks every section; throws InvalidParameter with a dotted field path.
    void validate() const;
};

/// Reads a TOML or JSON document (chosen by extension, TOML otherwise).
/// Keys not listed here are rejected so that typos surface as config errors.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json toml_to_json(const std::string& toml_text);
/// Resolved configuration in the same layout load_config accepts.
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace sentinel
