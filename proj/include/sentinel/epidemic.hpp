#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sentinel/rng.hpp"

namespace sentinel {

/// Parameters of the population-level stochastic SIR with under-reporting.
struct SsirParams {
    std::int64_t N = 0;
    int T = 300;
    double alpha = 0.298;
    double spark = 0.0;  // constant per-day external pressure
    double avg_start = 45.0;
    double min_start = 20.0;
    /// Standard deviation of the start-day draw; defaults to (avg_start - min_start) / 3.
    std::optional<double> start_sd;
    int inf_period = 4;
    std::int64_t inf_init = 32;
    double report_prop = 0.02;
    double report_delay_mean = 7.0;
    int rep = 10;

    void validate() const;
    double start_spread() const;
};

/// One simulated season. Day vectors hold days 1..T at indices 0..T-1.
struct EpidemicSeries {
    int replicate_id = 1;
    int start_day = 0;
    int inf_period = 1;
    std::vector<std::int64_t> S, I, R;
    std::vector<std::int64_t> new_inf;
    std::vector<std::int64_t> reported;
    std::optional<int> reference_date;

    int horizon() const { return static_cast<int>(new_inf.size()); }
    std::int64_t population() const { return S.empty() ? 0 : S.front() + I.front() + R.front(); }
    std::int64_t total_infected() const;
    std::int64_t total_reported() const;
    std::int64_t peak_infected() const;
};

/// P(S -> I | t) = 1 - exp(-alpha * I / N - spark).
double infection_probability(double alpha, std::int64_t infectious, std::int64_t N, double spark);

/// Replicates 1..rep, replicate r on stream `root.child("rep-<r>")`.
std::vector<EpidemicSeries> simulate_ssir(const SsirParams& params, const RngStream& root, int threads = 1);

EpidemicSeries simulate_replicate(const SsirParams& params, int replicate_id, const RngStream& stream);

/// Thins daily infections by Binomial(new_inf, report_prop) and shifts each
/// reported case by round(Exp(1 / delay_mean)) days; cases past the horizon are dropped.
/// delay_mean == 0 means no delay.
std::vector<std::int64_t> apply_reporting(std::span<const std::int64_t> new_inf, double report_prop,
                                          double delay_mean, RngStream& stream);

/// Day (1-based) of the second case of the earliest consecutive pair of
/// reported cases at most 7 days apart.
std::optional<int> compute_reference_date(std::span<const std::int64_t> reported);

struct EpidemicSummary {
    std::size_t n_sims = 0;
    double avg_total_infected = 0.0;
    double avg_total_reported = 0.0;
    double avg_peak_infected = 0.0;
};

EpidemicSummary summarize(std::span<const EpidemicSeries> series);

}  // namespace sentinel
