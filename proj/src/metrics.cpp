#include "sentinel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "sentinel/error.hpp"
#include "sentinel/parallel.hpp"

namespace sentinel {

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::FAR: return "FAR";
        case Metric::ADD: return "ADD";
        case Metric::AATQ: return "AATQ";
        case Metric::FATQ: return "FATQ";
        case Metric::WAATQ: return "WAATQ";
        case Metric::WFATQ: return "WFATQ";
    }
    return "?";
}

void MetricParams::validate() const {
    if (tau_opt < 1) throw InvalidParameter("tau_opt", "must be >= 1");
    if (!(tau_max >= 0.0)) throw InvalidParameter("tau_max", "must be >= 0");
    if (!(k > 0.0)) throw InvalidParameter("k", "must be > 0");
    if (!(a > 0.0)) throw InvalidParameter("a", "must be > 0");
}

double far(std::span<const int> alert_taus, int tau_opt) {
    int false_alerts = 0;
    bool any_true = false;
    for (int tau : alert_taus) {
        if (tau > tau_opt) ++false_alerts;
        else if (tau >= 0) any_true = true;
    }
    if (!any_true) return 1.0;
    return static_cast<double>(false_alerts) / static_cast<double>(false_alerts + 1);
}

double add(std::span<const int> alert_taus, const MetricParams& params) {
    if (params.add_uses_first_alert) {
        const bool any_true = std::any_of(alert_taus.begin(), alert_taus.end(),
                                          [&](int t) { return t >= 0 && t <= params.tau_opt; });
        if (!any_true) return params.tau_max;
        return params.tau_opt - alert_taus.front();
    }
    for (int tau : alert_taus) {
        if (tau >= 0 && tau <= params.tau_opt) return params.tau_opt - tau;
    }
    return params.tau_max;
}

double atq(double tau, const MetricParams& params) {
    if (tau < 0.0) throw ContractError("ATQ is undefined for alerts after the reference date (tau < 0)");
    const double opt = params.tau_opt;
    if (tau > (params.k + 1.0) * opt) return 1.0;
    const double d = std::fabs(opt - tau) / (params.k * opt);
    const double value = tau <= opt ? std::pow(d, 2.0 * params.a) : std::pow(d, params.a);
    return std::clamp(value, 0.0, 1.0);
}

double aatq(std::span<const double> atqs) {
    if (atqs.empty()) return 1.0;
    return std::accumulate(atqs.begin(), atqs.end(), 0.0) / static_cast<double>(atqs.size());
}

double fatq(std::span<const double> atqs_by_day) { return atqs_by_day.empty() ? 1.0 : atqs_by_day.front(); }

std::vector<double> year_weights(std::span<const int> training_counts) {
    if (training_counts.empty()) throw EvaluationError("year weights need at least one evaluable year");
    const double total = std::accumulate(training_counts.begin(), training_counts.end(), 0.0);
    if (!(total > 0.0)) throw EvaluationError("year weights need a positive total training count");
    std::vector<double> w;
    w.reserve(training_counts.size());
    for (int c : training_counts) w.push_back(static_cast<double>(c) / total);
    return w;
}

double weighted_aggregate(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size())
        throw ContractError("weighted aggregate: " + std::to_string(values.size()) + " values vs " +
                            std::to_string(weights.size()) + " weights");
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::fabs(wsum - 1.0) > 1e-9) throw ContractError("weights must sum to 1");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) total += weights[i] * values[i];
    return total;
}

YearEvaluation evaluate_year(int year, int ref, std::span<const int> alert_days, const MetricParams& params) {
    YearEvaluation ev;
    ev.year = year;
    ev.ref = ref;
    ev.alert_days.assign(alert_days.begin(), alert_days.end());
    std::sort(ev.alert_days.begin(), ev.alert_days.end());
    std::vector<double> atqs;
    for (int day : ev.alert_days) {
        const int tau = ref - day;
        if (tau < 0) throw ContractError("alert on day " + std::to_string(day) + " is after the reference date");
        ev.alert_taus.push_back(tau);
        if (tau <= params.tau_opt) ev.true_alert_taus.push_back(tau);
        else ++ev.false_count;
        atqs.push_back(atq(tau, params));
    }
    ev.far = far(ev.alert_taus, params.tau_opt);
    ev.add = add(ev.alert_taus, params);
    ev.aatq = aatq(atqs);
    ev.fatq = fatq(atqs);
    return ev;
}

std::optional<int> YearAlerts::first_alert(Metric m) const {
    auto it = alert_days.find(m);
    if (it == alert_days.end() || it->second.empty()) return std::nullopt;
    return it->second.front();
}

bool MetricGrid::failed(std::size_t lag_index, std::size_t threshold_index) const {
    return std::find(failed_cells.begin(), failed_cells.end(), std::make_pair(lag_index, threshold_index)) !=
           failed_cells.end();
}

std::vector<double> threshold_sequence(double from, double to, double by) {
    if (!(by > 0.0)) throw InvalidParameter("thresholds.by", "must be > 0");
    std::vector<double> out;
    for (long i = 0;; ++i) {
        double v = from + static_cast<double>(i) * by;
        v = std::round(v * 1e12) / 1e12;
        if (v > to + 1e-12) break;
        out.push_back(v);
    }
    return out;
}

void validate_thresholds(std::span<const double> thresholds) {
    if (thresholds.empty()) throw InvalidParameter("thresholds", "must be non-empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
            throw InvalidParameter("thresholds", "every threshold must lie strictly inside (0, 1)");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
            throw InvalidParameter("thresholds", "must be strictly increasing");
    }
}

// Argmin over non-failed cells; ties go to the smaller lag, then the smaller threshold.
namespace {

std::optional<BestModel> select_best(const MetricGrid& grid, const MetricMatrix& m) {
    std::optional<BestModel> best;
    for (std::size_t li = 0; li < grid.lags.size(); ++li) {
        for (std::size_t ti = 0; ti < grid.thresholds.size(); ++ti) {
            if (grid.failed(li, ti)) continue;
            const double v = m[li][ti];
            if (!std::isfinite(v)) continue;
            if (!best || v < best->value) best = BestModel{grid.lags[li], grid.thresholds[ti], v, li, ti};
        }
    }
    return best;
}

MetricStats cell_stats(const MetricGrid& grid, const MetricMatrix& m) {
    std::vector<double> values;
    for (std::size_t li = 0; li < grid.lags.size(); ++li)
        for (std::size_t ti = 0; ti < grid.thresholds.size(); ++ti)
            if (!grid.failed(li, ti) && std::isfinite(m[li][ti])) values.push_back(m[li][ti]);
    MetricStats s;
    if (values.empty()) {
        s.mean = s.variance = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() < 2) {
        s.variance = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(values.size() - 1);
    return s;
}

}  // namespace

MetricGrid evaluate_grid_with(const SurveillanceDataset& data, std::span<const int> lags,
                              std::span<const double> thresholds, const MetricParams& params,
                              const RiskSource& source, int threads) {
    params.validate();
    validate_thresholds(thresholds);
    if (lags.empty()) throw InvalidParameter("maxlag", "at least one lag is required");

    MetricGrid grid;
    grid.lags.assign(lags.begin(), lags.end());
    grid.thresholds.assign(thresholds.begin(), thresholds.end());

    const std::vector<int> years = data.years();
    int with_reference = 0;
    std::vector<int> training_counts;
    for (std::size_t idx = 0; idx < years.size(); ++idx) {
        YearAlerts ya;
        ya.year = years[idx];
        ya.ref = data.reference_date(years[idx]);
        ya.trainable = idx >= 1;
        if (ya.ref) ++with_reference;
        if (ya.trainable && ya.ref) {
            grid.evaluable_years.push_back(ya.year);
            training_counts.push_back(static_cast<int>(idx));
        }
        grid.years.push_back(std::move(ya));
    }
    if (with_reference < 2 || grid.evaluable_years.empty())
        throw Error(Stage::config, "alert evaluation needs at least 2 school years with reference dates and one "
                                   "evaluable year after the first (found " + std::to_string(years.size()) +
                                   " years, " + std::to_string(with_reference) + " with reference dates)");
    grid.weights = year_weights(training_counts);

    // predictions per (lag, evaluable year)
    const std::size_t n_years = grid.evaluable_years.size();
    std::vector<std::vector<DailyRisk>> risk(grid.lags.size() * n_years);
    std::vector<char> fit_failed(risk.size(), 0);
    parallel_for(risk.size(), threads, [&](std::size_t i) {
        const std::size_t li = i / n_years, yi = i % n_years;
        bool failed = false;
        risk[i] = source(grid.lags[li], grid.evaluable_years[yi], failed);
        fit_failed[i] = failed ? 1 : 0;
    });

    for (Metric m : kAllMetrics)
        grid.matrices[m] = MetricMatrix(grid.lags.size(), std::vector<double>(grid.thresholds.size(), 0.0));

    auto alerts_for = [&](std::size_t li, std::size_t yi, double threshold) {
        const int year = grid.evaluable_years[yi];
        const int ref = *data.reference_date(year);
        return raise_alerts(risk[li * n_years + yi], LagLogisticSpec{grid.lags[li], threshold}, params.year_start, ref)
            .alert_days;
    };

    for (std::size_t li = 0; li < grid.lags.size(); ++li) {
        bool lag_failed = false;
        for (std::size_t yi = 0; yi < n_years; ++yi) lag_failed = lag_failed || fit_failed[li * n_years + yi];
        for (std::size_t ti = 0; ti < grid.thresholds.size(); ++ti) {
            if (lag_failed) grid.failed_cells.emplace_back(li, ti);
            std::vector<double> fars, adds, aatqs, fatqs;
            for (std::size_t yi = 0; yi < n_years; ++yi) {
                const int year = grid.evaluable_years[yi];
                const auto days = alerts_for(li, yi, grid.thresholds[ti]);
                const auto ev = evaluate_year(year, *data.reference_date(year), days, params);
                fars.push_back(ev.far);
                adds.push_back(ev.add);
                aatqs.push_back(ev.aatq);
                fatqs.push_back(ev.fatq);
            }
            const double n = static_cast<double>(n_years);
            grid.matrices[Metric::FAR][li][ti] = std::accumulate(fars.begin(), fars.end(), 0.0) / n;
            grid.matrices[Metric::ADD][li][ti] = std::accumulate(adds.begin(), adds.end(), 0.0) / n;
            grid.matrices[Metric::AATQ][li][ti] = std::accumulate(aatqs.begin(), aatqs.end(), 0.0) / n;
            grid.matrices[Metric::FATQ][li][ti] = std::accumulate(fatqs.begin(), fatqs.end(), 0.0) / n;
            grid.matrices[Metric::WAATQ][li][ti] = weighted_aggregate(aatqs, grid.weights);
            grid.matrices[Metric::WFATQ][li][ti] = weighted_aggregate(fatqs, grid.weights);
        }
    }

    for (Metric m : kAllMetrics) {
        grid.best[m] = select_best(grid, grid.matrices[m]);
        grid.stats[m] = cell_stats(grid, grid.matrices[m]);
    }

    for (auto& ya : grid.years) {
        if (!ya.trainable || !ya.ref) continue;
        const auto pos = std::find(grid.evaluable_years.begin(), grid.evaluable_years.end(), ya.year);
        const auto yi = static_cast<std::size_t>(pos - grid.evaluable_years.begin());
        for (Metric m : kAllMetrics) {
            const auto& best = grid.best[m];
            if (!best) continue;
            ya.alert_days[m] = alerts_for(best->lag_index, yi, best->threshold);
        }
    }
    return grid;
}

MetricGrid evaluate_grid(const SurveillanceDataset& data, int maxlag, std::span<const double> thresholds,
                         const MetricParams& params, const GridOptions& options) {
    if (maxlag < 1) throw InvalidParameter("maxlag", "must be >= 1");
    if (maxlag > data.maxlag)
        throw InvalidParameter("maxlag", "exceeds the dataset's " + std::to_string(data.maxlag) + " lag columns");
    std::vector<int> lags(static_cast<std::size_t>(maxlag));
    std::iota(lags.begin(), lags.end(), 1);

    const std::vector<int> years = data.years();
    std::mutex fits_mutex;
    std::map<std::pair<int, int>, ModelFit> fits;
    RiskSource source = [&](int lag, int target_year, bool& failed) {
        std::vector<int> training;
        for (int y : years)
            if (y < target_year) training.push_back(y);
        ModelFit model = fit(data, training, lag, options.fit);
        failed = !model.converged;
        auto risk = predict_daily_risk(model, data.year_rows(target_year), lag);
        std::lock_guard lock(fits_mutex);
        fits.emplace(std::pair{lag, target_year}, std::move(model));
        return risk;
    };
    MetricGrid grid = evaluate_grid_with(data, lags, thresholds, params, source, options.threads);
    for (auto& [key, model] : fits) grid.fits.push_back({key.second, std::move(model)});
    return grid;
}

}  // namespace sentinel
