#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "sentinel/detection.hpp"
#include "sentinel/epidemic.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/population.hpp"
#include "sentinel/surveillance.hpp"

namespace sentinel {

/// A table cell; monostate is a missing value (empty CSV field, JSON null).
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

enum class TableFormat { csv, json };

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

void write_csv(const Table& table, std::ostream& out);
/// Array of {column: value} records.
nlohmann::json table_to_json(const Table& table);

void write_table(const Table& table, const std::filesystem::path& path, TableFormat format);
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// A parsed CSV file: header plus raw string fields.
struct CsvData {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    /// Index of `name`; throws IoError if absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;
};

CsvData parse_csv(std::istream& in);
CsvData read_csv(const std::filesystem::path& path);

std::int64_t parse_int(std::string_view field, std::string_view column);
double parse_double(std::string_view field, std::string_view column);
std::optional<double> parse_optional_double(std::string_view field, std::string_view column);

// Population
Table households_table(const PopulationFrame& frame);
Table individuals_table(const PopulationFrame& frame);
/// Individuals only (households are not needed downstream).
PopulationFrame read_individuals(const std::filesystem::path& path);

// Epidemic
Table epidemic_table(const std::vector<EpidemicSeries>& series);
/// Rebuilds series from the epidemic CSV; reference dates are recomputed.
std::vector<EpidemicSeries> read_epidemic(const std::filesystem::path& path, int inf_period);
nlohmann::json epidemic_summary_json(const EpidemicSummary& summary);

// Surveillance
Table surveillance_table(const SurveillanceDataset& data);
SurveillanceDataset surveillance_from_csv(const CsvData& csv);
SurveillanceDataset read_surveillance(const std::filesystem::path& path);

// Detection / metrics
nlohmann::json fit_json(const ModelFit& fit);
Table metric_matrix_table(const MetricGrid& grid, Metric m);
/// Per-metric mean, variance, optimal lag/threshold and minimum plus the per-year table.
nlohmann::json alert_summary_json(const MetricGrid& grid);
/// year, ref_date, first alert day per metric (missing where untrainable or no alert).
Table alert_years_table(const MetricGrid& grid);

/// Per-year metric alert days as stored in alert_summary.json.
struct StoredYearAlerts {
    int year = 0;
    std::optional<int> ref;
    std::map<Metric, std::vector<int>> alert_days;
};
std::vector<StoredYearAlerts> read_alert_summary(const std::filesystem::path& path);

}  // namespace sentinel
