#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentinel/detection.hpp"
#include "sentinel/surveillance.hpp"

namespace sentinel {

enum class Metric { FAR, ADD, AATQ, FATQ, WAATQ, WFATQ };

inline constexpr std::array<Metric, 6> kAllMetrics{Metric::FAR,  Metric::ADD,   Metric::AATQ,
                                                   Metric::FATQ, Metric::WAATQ, Metric::WFATQ};

const char* metric_name(Metric m);

struct MetricParams {
    int tau_opt = 14;
    double tau_max = 14.0;
    double k = 1.0;
    double a = 1.0;
    /// ADD measures the first alert overall instead of the first true alert.
    bool add_uses_first_alert = false;
    /// First day on which alerts count.
    int year_start = 1;

    void validate() const;
};

// Per-year alert metrics. `alert_taus` are ref - alert_day, in alert-day order.

/// n_f / (n_f + 1) when some alert has 0 <= tau <= tau_opt, else 1.
double far(std::span<const int> alert_taus, int tau_opt);
/// tau_opt - tau of the first true alert, else tau_max.
double add(std::span<const int> alert_taus, const MetricParams& params);
/// Alert time quality of one alert. Deviation d = |tau_opt - tau| / (k tau_opt)
/// costs d^(2a) for early-window alerts and d^a for late ones; 1 beyond (k+1) tau_opt.
double atq(double tau, const MetricParams& params);
double aatq(std::span<const double> atqs);
double fatq(std::span<const double> atqs_by_day);

/// Training-year counts normalized to sum to 1.
std::vector<double> year_weights(std::span<const int> training_counts);
double weighted_aggregate(std::span<const double> values, std::span<const double> weights);

struct YearEvaluation {
    int year = 0;
    int ref = 0;
    std::vector<int> alert_days;
    std::vector<int> alert_taus;
    std::vector<int> true_alert_taus;
    int false_count = 0;
    double far = 1.0;
    double add = 0.0;
    double aatq = 1.0;
    double fatq = 1.0;
};

YearEvaluation evaluate_year(int year, int ref, std::span<const int> alert_days, const MetricParams& params);

/// A row x column matrix indexed [lag][threshold].
using MetricMatrix = std::vector<std::vector<double>>;

struct BestModel {
    int lag = 0;
    double threshold = 0.0;
    double value = 0.0;
    std::size_t lag_index = 0;
    std::size_t threshold_index = 0;
};

struct MetricStats {
    double mean = 0.0;
    double variance = 0.0;  // sample variance over non-failed cells
};

struct YearAlerts {
    int year = 0;
    std::optional<int> ref;
    bool trainable = false;
    /// Alert days under each metric's selected (lag, threshold); empty when none.
    std::map<Metric, std::vector<int>> alert_days;

    std::optional<int> first_alert(Metric m) const;
};

struct TargetedFit {
    int target_year = 0;
    ModelFit fit;
};

struct MetricGrid {
    std::vector<int> lags;
    std::vector<double> thresholds;
    std::map<Metric, MetricMatrix> matrices;
    std::map<Metric, std::optional<BestModel>> best;
    std::map<Metric, MetricStats> stats;
    std::vector<YearAlerts> years;
    std::vector<int> evaluable_years;
    std::vector<double> weights;  // parallel to evaluable_years
    /// (lag index, threshold index) of cells relying on a non-converged fit.
    std::vector<std::pair<std::size_t, std::size_t>> failed_cells;
    /// Fits made by evaluate_grid, ordered by (lag, target year).
    std::vector<TargetedFit> fits;

    bool failed(std::size_t lag_index, std::size_t threshold_index) const;
};

/// Predictions for `target_year` from a model of the given lag; sets `failed`
/// when the underlying fit did not converge.
using RiskSource = std::function<std::vector<DailyRisk>(int lag, int target_year, bool& failed)>;

struct GridOptions {
    int threads = 1;
    FitOptions fit;
};

/// Thresholds from..to (inclusive) in steps of `by`, rounded to 1e-12.
std::vector<double> threshold_sequence(double from, double to, double by);
/// Non-empty, strictly increasing, each inside (0, 1).
void validate_thresholds(std::span<const double> thresholds);

/// Full search: lag 1..maxlag x thresholds, each target year j >= 2 modelled
/// from years before it. Fits are computed once per (lag, year).
MetricGrid evaluate_grid(const SurveillanceDataset& data, int maxlag, std::span<const double> thresholds,
                         const MetricParams& params, const GridOptions& options = {});

/// Same search with predictions supplied by `source` (no model fitting).
MetricGrid evaluate_grid_with(const SurveillanceDataset& data, std::span<const int> lags,
                              std::span<const double> thresholds, const MetricParams& params,
                              const RiskSource& source, int threads = 1);

}  // namespace sentinel
