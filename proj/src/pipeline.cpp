#include "sentinel/pipeline.hpp"

#include <algorithm>

#include "sentinel/error.hpp"
#include "sentinel/figures.hpp"

namespace sentinel {

namespace fs = std::filesystem;

SimulatedPopulation run_population_stage(const RunConfig& config) {
    return simulate_population(config.population, RngStream::derive(config.seed, "population"));
}

std::vector<EpidemicSeries> run_epidemic_stage(const RunConfig& config, std::int64_t population_size) {
    SsirParams params = config.epidemic;
    if (params.N == 0) params.N = population_size;
    try {
        params.validate();
    } catch (const InvalidParameter& e) {
        const std::string what = e.what();
        throw InvalidParameter("epidemic." + e.field(), what.substr(std::min(what.size(), e.field().size() + 2)));
    }
    return simulate_ssir(params, RngStream::derive(config.seed, "epidemic"), config.threads);
}

SurveillanceDataset run_compile_stage(const RunConfig& config, std::span<const EpidemicSeries> epidemics,
                                      const PopulationFrame& population) {
    return compile_dataset(epidemics, population, config.surveillance, RngStream::derive(config.seed, "surveillance"),
                           config.threads);
}

MetricGrid run_evaluate_stage(const RunConfig& config, const SurveillanceDataset& data) {
    GridOptions options;
    options.threads = config.threads;
    options.fit = config.evaluation.fit;
    return evaluate_grid(data, config.evaluation.maxlag, config.evaluation.thresholds, config.evaluation.metrics,
                         options);
}

const char* table_extension(TableFormat format) { return format == TableFormat::csv ? "csv" : "json"; }

namespace {

fs::path table_path(const fs::path& dir, const std::string& stem, TableFormat format) {
    return dir / (stem + "." + table_extension(format));
}

}  // namespace

void write_population_outputs(const fs::path& dir, const SimulatedPopulation& population, TableFormat format) {
    write_table(individuals_table(population.frame), table_path(dir, "individuals", format), format);
    write_table(households_table(population.frame), table_path(dir, "households", format), format);
}

void write_epidemic_outputs(const fs::path& dir, std::span<const EpidemicSeries> epidemics, TableFormat format) {
    write_table(epidemic_table({epidemics.begin(), epidemics.end()}), table_path(dir, "epidemic", format), format);
    write_json(epidemic_summary_json(summarize(epidemics)), dir / "epidemic_summary.json");
}

void write_surveillance_outputs(const fs::path& dir, const SurveillanceDataset& data, TableFormat format) {
    write_table(surveillance_table(data), table_path(dir, "surveillance", format), format);
}

void write_evaluation_outputs(const fs::path& dir, const MetricGrid& grid, TableFormat format) {
    for (Metric m : kAllMetrics)
        write_table(metric_matrix_table(grid, m), table_path(dir, std::string("metrics_") + metric_name(m), format),
                    format);
    write_table(alert_years_table(grid), table_path(dir, "alert_years", format), format);
    write_json(alert_summary_json(grid), dir / "alert_summary.json");

    nlohmann::json fits = nlohmann::json::array();
    for (const auto& f : grid.fits) {
        nlohmann::json entry = fit_json(f.fit);
        entry["target_year"] = f.target_year;
        fits.push_back(std::move(entry));
    }
    write_json(fits, dir / "fits.json");
}

std::vector<StoredYearAlerts> stored_alerts(const MetricGrid& grid) {
    std::vector<StoredYearAlerts> out;
    for (const auto& y : grid.years) out.push_back({y.year, y.ref, y.alert_days});
    return out;
}

std::vector<std::string> write_figures(const fs::path& dir, const RunConfig& config,
                                       std::span<const EpidemicSeries> epidemics, const SurveillanceDataset& data,
                                       std::span<const StoredYearAlerts> alerts) {
    std::vector<std::string> notes;
    if (epidemics.empty()) throw ContractError("no epidemic seasons to plot");
    const int year = std::min(config.plot_year, static_cast<int>(epidemics.size()));
    if (year != config.plot_year)
        notes.push_back("plot_year " + std::to_string(config.plot_year) + " exceeds the number of seasons; plotting " +
                        std::to_string(year));
    const std::string suffix = "year" + std::to_string(year);

    const auto series = std::find_if(epidemics.begin(), epidemics.end(),
                                     [&](const EpidemicSeries& s) { return s.replicate_id == year; });
    emit_epidemic_figure(series != epidemics.end() ? *series : epidemics[static_cast<std::size_t>(year - 1)],
                         dir / ("epidemic_" + suffix + ".svg"));

    const auto ref = data.reference_date(year);
    if (!ref) {
        notes.push_back("season " + std::to_string(year) + " has no reference date; alert figure skipped");
        return notes;
    }
    std::map<Metric, std::vector<int>> days;
    for (const auto& a : alerts)
        if (a.year == year) days = a.alert_days;
    emit_alert_figure(data.year_rows(year), days, *ref, dir / ("alerts_" + suffix + ".svg"));
    return notes;
}

PipelineResult run_pipeline(const RunConfig& config, TableFormat format) {
    config.validate();
    const fs::path& dir = config.output_dir;
    PipelineResult r;
    r.population = run_population_stage(config);
    write_population_outputs(dir, r.population, format);

    r.epidemics = run_epidemic_stage(config, static_cast<std::int64_t>(r.population.frame.individuals.size()));
    write_epidemic_outputs(dir, r.epidemics, format);

    r.surveillance = run_compile_stage(config, r.epidemics, r.population.frame);
    write_surveillance_outputs(dir, r.surveillance, format);
    r.notes = r.surveillance.warnings;

    r.grid = run_evaluate_stage(config, r.surveillance);
    write_evaluation_outputs(dir, r.grid, format);

    const auto alerts = stored_alerts(r.grid);
    for (auto& note : write_figures(dir, config, r.epidemics, r.surveillance, alerts)) r.notes.push_back(note);
    return r;
}

}  // namespace sentinel
