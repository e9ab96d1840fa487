#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "sentinel/config.hpp"
#include "sentinel/io.hpp"

namespace sentinel {

// Each stage draws from its own root stream: derive(seed, "population"),
// derive(seed, "epidemic") and derive(seed, "surveillance").
SimulatedPopulation run_population_stage(const RunConfig& config);
/// `population_size` is used when the config leaves epidemic.N at 0.
std::vector<EpidemicSeries> run_epidemic_stage(const RunConfig& config, std::int64_t population_size);
SurveillanceDataset run_compile_stage(const RunConfig& config, std::span<const EpidemicSeries> epidemics,
                                      const PopulationFrame& population);
MetricGrid run_evaluate_stage(const RunConfig& config, const SurveillanceDataset& data);

/// Extension matching a table format ("csv" or "json").
const char* table_extension(TableFormat format);

void write_population_outputs(const std::filesystem::path& dir, const SimulatedPopulation& population,
                              TableFormat format);
void write_epidemic_outputs(const std::filesystem::path& dir, std::span<const EpidemicSeries> epidemics,
                            TableFormat format);
void write_surveillance_outputs(const std::filesystem::path& dir, const SurveillanceDataset& data, TableFormat format);
/// metrics_<METRIC>, alert_years, alert_summary.json and fits.json.
void write_evaluation_outputs(const std::filesystem::path& dir, const MetricGrid& grid, TableFormat format);

std::vector<StoredYearAlerts> stored_alerts(const MetricGrid& grid);

/// epidemic_year<k>.svg and, when that year has a reference date, alerts_year<k>.svg,
/// with k = config.plot_year (clamped to the last season). Returns notes about skipped figures.
std::vector<std::string> write_figures(const std::filesystem::path& dir, const RunConfig& config,
                                       std::span<const EpidemicSeries> epidemics, const SurveillanceDataset& data,
                                       std::span<const StoredYearAlerts> alerts);

struct PipelineResult {
    SimulatedPopulation population;
    std::vector<EpidemicSeries> epidemics;
    SurveillanceDataset surveillance;
    MetricGrid grid;
    std::vector<std::string> notes;
};

/// All stages plus every output file under config.output_dir.
PipelineResult run_pipeline(const RunConfig& config, TableFormat format = TableFormat::csv);

}  // namespace sentinel
