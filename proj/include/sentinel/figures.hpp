#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sentinel/epidemic.hpp"
#include "sentinel/metrics.hpp"
#include "sentinel/surveillance.hpp"

namespace sentinel {

// SVG figures. Bars, areas, markers and the reference line carry `data-day`
// (and `data-value` / `data-metric`) attributes so their placement can be
// checked without rasterizing.

/// Two stacked bar panels: new infections (top) and reported cases (bottom) per day.
std::string render_epidemic_figure(const EpidemicSeries& series);

/// Absenteeism percentage and reported cases as areas, a dashed line at the
/// reference date, and one marker row per metric with alerts. Metrics without
/// alerts get a legend note instead of a row.
std::string render_alert_figure(std::span<const SurveillanceRow> year_rows,
                                const std::map<Metric, std::vector<int>>& alert_days, int ref);

void emit_epidemic_figure(const EpidemicSeries& series, const std::filesystem::path& path);
void emit_alert_figure(std::span<const SurveillanceRow> year_rows, const std::map<Metric, std::vector<int>>& alert_days,
                       int ref, const std::filesystem::path& path);

}  // namespace sentinel
