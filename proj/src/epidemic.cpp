#include "sentinel/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sentinel/error.hpp"
#include "sentinel/parallel.hpp"

namespace sentinel {

void SsirParams::validate() const {
    if (N < 1) throw InvalidParameter("N", "must be >= 1");
    if (T < 1) throw InvalidParameter("T", "must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidParameter("alpha", "must be finite and >= 0");
    if (!(spark >= 0.0) || !std::isfinite(spark)) throw InvalidParameter("spark", "must be finite and >= 0");
    if (!(report_prop >= 0.0 && report_prop <= 1.0)) throw InvalidParameter("report_prop", "must lie in [0, 1]");
    if (!(min_start <= avg_start)) throw InvalidParameter("min_start", "must be <= avg_start");
    if (!(avg_start < T)) throw InvalidParameter("avg_start", "must be < T");
    if (inf_period < 1) throw InvalidParameter("inf_period", "must be >= 1");
    if (inf_init < 0 || inf_init > N) throw InvalidParameter("inf_init", "must lie in [0, N]");
    if (!(report_delay_mean >= 0.0)) throw InvalidParameter("report_delay_mean", "must be >= 0");
    if (start_sd && !(*start_sd >= 0.0)) throw InvalidParameter("start_sd", "must be >= 0");
    if (rep < 1) throw InvalidParameter("rep", "must be >= 1");
}

double SsirParams::start_spread() const { return start_sd ? *start_sd : (avg_start - min_start) / 3.0; }

std::int64_t EpidemicSeries::total_infected() const {
    std::int64_t total = 0;
    for (auto v : new_inf) total += v;
    return total;
}

std::int64_t EpidemicSeries::total_reported() const {
    std::int64_t total = 0;
    for (auto v : reported) total += v;
    return total;
}

std::int64_t EpidemicSeries::peak_infected() const {
    return I.empty() ? 0 : *std::max_element(I.begin(), I.end());
}

double infection_probability(double alpha, std::int64_t infectious, std::int64_t N, double spark) {
    if (N <= 0) throw SimulationError("infection_probability: population size must be >= 1");
    const double pressure = alpha * static_cast<double>(infectious) / static_cast<double>(N) + spark;
    return -std::expm1(-pressure);
}

std::vector<std::int64_t> apply_reporting(std::span<const std::int64_t> new_inf, double report_prop,
                                          double delay_mean, RngStream& stream) {
    const auto horizon = static_cast<std::int64_t>(new_inf.size());
    std::vector<std::int64_t> reported(new_inf.size(), 0);
    if (report_prop <= 0.0) return reported;
    for (std::int64_t day = 0; day < horizon; ++day) {
        const std::int64_t cases = sample_binomial(stream, new_inf[static_cast<std::size_t>(day)], report_prop);
        for (std::int64_t c = 0; c < cases; ++c) {
            std::int64_t delay = 0;
            if (delay_mean > 0.0) delay = std::llround(sample_exponential(stream, 1.0 / delay_mean));
            const std::int64_t lands = day + delay;
            if (lands < horizon) ++reported[static_cast<std::size_t>(lands)];
        }
    }
    return reported;
}

std::optional<int> compute_reference_date(std::span<const std::int64_t> reported) {
    // Walk case dates in order; same-day cases count as separate cases.
    std::optional<int> previous;
    for (std::size_t i = 0; i < reported.size(); ++i) {
        const int day = static_cast<int>(i) + 1;
        for (std::int64_t c = 0; c < reported[i]; ++c) {
            if (previous && day - *previous <= 7) return day;
            previous = day;
        }
    }
    return std::nullopt;
}

EpidemicSeries simulate_replicate(const SsirParams& params, int replicate_id, const RngStream& stream) {
    params.validate();
    RngStream rng = stream;
    EpidemicSeries s;
    s.replicate_id = replicate_id;
    s.inf_period = params.inf_period;
    const auto T = static_cast<std::size_t>(params.T);
    s.S.assign(T, 0);
    s.I.assign(T, 0);
    s.R.assign(T, 0);
    s.new_inf.assign(T, 0);

    const double start_draw = sample_normal(rng, params.avg_start, params.start_spread());
    s.start_day = std::max(static_cast<int>(std::ceil(params.min_start)), static_cast<int>(std::lround(start_draw)));

    std::vector<std::int64_t> cohorts(static_cast<std::size_t>(params.inf_period), 0);
    std::int64_t S = params.N, I = 0, R = 0;
    for (int day = 1; day <= params.T; ++day) {
        std::int64_t infections = 0;
        if (day == s.start_day) {
            infections = std::min(params.inf_init, S);
        } else if (day > s.start_day) {
            // one uniform per day keeps draws aligned across parameter values
            const double u = rng.uniform01();
            const double p = infection_probability(params.alpha, I, params.N, params.spark);
            infections = binomial_inversion(S, p, u);
        }
        auto& slot = cohorts[static_cast<std::size_t>(day % params.inf_period)];
        const std::int64_t removed = slot;
        slot = infections;
        S -= infections;
        I += infections - removed;
        R += removed;
        const auto idx = static_cast<std::size_t>(day - 1);
        s.S[idx] = S;
        s.I[idx] = I;
        s.R[idx] = R;
        s.new_inf[idx] = infections;
    }

    RngStream reporting = stream.child("reporting");
    s.reported = apply_reporting(s.new_inf, params.report_prop, params.report_delay_mean, reporting);
    s.reference_date = compute_reference_date(s.reported);
    return s;
}

std::vector<EpidemicSeries> simulate_ssir(const SsirParams& params, const RngStream& root, int threads) {
    params.validate();
    std::vector<EpidemicSeries> out(static_cast<std::size_t>(params.rep));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        const int id = static_cast<int>(i) + 1;
        out[i] = simulate_replicate(params, id, root.child("rep-" + std::to_string(id)));
    });
    return out;
}

EpidemicSummary summarize(std::span<const EpidemicSeries> series) {
    EpidemicSummary sum;
    sum.n_sims = series.size();
    if (series.empty()) return sum;
    for (const auto& s : series) {
        sum.avg_total_infected += static_cast<double>(s.total_infected());
        sum.avg_total_reported += static_cast<double>(s.total_reported());
        sum.avg_peak_infected += static_cast<double>(s.peak_infected());
    }
    const auto n = static_cast<double>(series.size());
    sum.avg_total_infected /= n;
    sum.avg_total_reported /= n;
    sum.avg_peak_infected /= n;
    return sum;
}

}  // namespace sentinel
