#include "sentinel/surveillance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "sentinel/error.hpp"
#include "sentinel/parallel.hpp"

namespace sentinel {

void AbsenteeismParams::validate() const {
    if (!(p_base >= 0.0 && p_base <= 1.0)) throw InvalidParameter("p_base", "must lie in [0, 1]");
    if (!(p_sick >= 0.0 && p_sick <= 1.0)) throw InvalidParameter("p_sick", "must lie in [0, 1]");
    if (p_base > p_sick) throw InvalidParameter("p_base", "must be <= p_sick");
    if (maxlag < 0) throw InvalidParameter("maxlag", "must be >= 0");
    if (window_days < 1) throw InvalidParameter("window_days", "must be >= 1");
    if (!(year_length > 0.0)) throw InvalidParameter("year_length", "must be > 0");
}

StudentInfections allocate_student_infections(const EpidemicSeries& series, const PopulationFrame& population,
                                              RngStream& stream) {
    const auto& people = population.individuals;
    if (static_cast<std::int64_t>(people.size()) != series.population())
        throw SimulationError("epidemic population size " + std::to_string(series.population()) +
                              " does not match the population frame (" + std::to_string(people.size()) + ")");

    StudentInfections out;
    out.horizon = series.horizon();
    out.inf_period = series.inf_period;
    std::vector<std::ptrdiff_t> slot_of(people.size(), -1);
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (people[i].school_id) {
            slot_of[i] = static_cast<std::ptrdiff_t>(out.students.size());
            out.students.push_back(i);
        }
    }
    out.infection_day.assign(out.students.size(), std::nullopt);

    std::vector<std::size_t> susceptible(people.size());
    for (std::size_t i = 0; i < susceptible.size(); ++i) susceptible[i] = i;
    std::size_t remaining = susceptible.size();

    for (int day = 1; day <= series.horizon(); ++day) {
        const std::int64_t count = series.new_inf[static_cast<std::size_t>(day - 1)];
        if (count > static_cast<std::int64_t>(remaining))
            throw SimulationError("day " + std::to_string(day) + ": " + std::to_string(count) +
                                  " new infections exceed " + std::to_string(remaining) + " susceptibles");
        for (std::int64_t c = 0; c < count; ++c) {
            const std::size_t pick = sample_index(stream, remaining);
            const std::size_t person = susceptible[pick];
            susceptible[pick] = susceptible[--remaining];
            if (slot_of[person] >= 0) out.infection_day[static_cast<std::size_t>(slot_of[person])] = day;
        }
    }
    return out;
}

DailyAbsence simulate_absences(const StudentInfections& infections, const PopulationFrame& population,
                               const AbsenteeismParams& params, RngStream& stream) {
    params.validate();
    const int horizon = infections.horizon;

    // Dense school index in ascending school id order.
    std::map<int, std::size_t> school_index;
    for (std::size_t s : infections.students) school_index.emplace(*population.individuals[s].school_id, 0);
    std::size_t next = 0;
    for (auto& [id, idx] : school_index) idx = next++;

    const std::size_t n_schools = school_index.size();
    std::vector<std::int64_t> enrolled(n_schools, 0);
    // infected[s][d] built as a difference array over days 1..horizon
    std::vector<std::vector<std::int64_t>> infected(n_schools, std::vector<std::int64_t>(static_cast<std::size_t>(horizon) + 2, 0));
    for (std::size_t k = 0; k < infections.students.size(); ++k) {
        const std::size_t s = school_index.at(*population.individuals[infections.students[k]].school_id);
        ++enrolled[s];
        if (const auto& d = infections.infection_day[k]) {
            const int first = *d;
            const int last = std::min(horizon, *d + infections.inf_period - 1);
            if (first > horizon) continue;
            ++infected[s][static_cast<std::size_t>(first)];
            --infected[s][static_cast<std::size_t>(last) + 1];
        }
    }

    DailyAbsence out;
    out.absent.assign(static_cast<std::size_t>(horizon), 0);
    out.absent_sick.assign(static_cast<std::size_t>(horizon), 0);
    out.pct_absent.assign(static_cast<std::size_t>(horizon), 0.0);
    for (auto e : enrolled) out.enrolled += e;

    std::vector<std::int64_t> running(n_schools, 0);
    for (int day = 1; day <= horizon; ++day) {
        const auto d = static_cast<std::size_t>(day);
        std::int64_t absent = 0, sick = 0;
        for (std::size_t s = 0; s < n_schools; ++s) {
            running[s] += infected[s][d];
            const std::int64_t absent_sick = sample_binomial(stream, running[s], params.p_sick);
            const std::int64_t absent_other = sample_binomial(stream, enrolled[s] - running[s], params.p_base);
            sick += absent_sick;
            absent += absent_sick + absent_other;
        }
        out.absent[d - 1] = absent;
        out.absent_sick[d - 1] = sick;
        out.pct_absent[d - 1] =
            out.enrolled > 0 ? static_cast<double>(absent) / static_cast<double>(out.enrolled) : 0.0;
    }
    return out;
}

std::vector<std::string> SurveillanceDataset::column_names(int maxlag) {
    std::vector<std::string> names{"Date",  "ScYr",           "pct_absent", "absent",  "absent_sick", "new_inf",
                                   "reported_cases", "Case", "sinterm",    "costerm", "window",      "ref_date"};
    for (int k = 0; k <= maxlag; ++k) names.push_back("lag" + std::to_string(k));
    return names;
}

std::vector<int> SurveillanceDataset::years() const {
    std::vector<int> ys;
    for (const auto& r : rows) {
        if (ys.empty() || ys.back() != r.school_year) ys.push_back(r.school_year);
    }
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    return ys;
}

std::span<const SurveillanceRow> SurveillanceDataset::year_rows(int year) const {
    auto lo = std::find_if(rows.begin(), rows.end(), [&](const SurveillanceRow& r) { return r.school_year == year; });
    auto hi = std::find_if(lo, rows.end(), [&](const SurveillanceRow& r) { return r.school_year != year; });
    return {rows.data() + (lo - rows.begin()), static_cast<std::size_t>(hi - lo)};
}

std::optional<int> SurveillanceDataset::reference_date(int year) const {
    for (const auto& r : year_rows(year)) {
        if (r.ref_date == 1) return r.date;
    }
    return std::nullopt;
}

void SurveillanceDataset::normalize() {
    std::stable_sort(rows.begin(), rows.end(), [](const SurveillanceRow& a, const SurveillanceRow& b) {
        return a.school_year != b.school_year ? a.school_year < b.school_year : a.date < b.date;
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.lags.size() != static_cast<std::size_t>(maxlag) + 1)
            throw InvalidParameter("lags", "row has " + std::to_string(r.lags.size()) + " lag columns, expected " +
                                                std::to_string(maxlag + 1));
        if (i > 0 && rows[i - 1].school_year == r.school_year && rows[i - 1].date == r.date)
            throw InvalidParameter("Date", "duplicate Date " + std::to_string(r.date) + " in year " +
                                               std::to_string(r.school_year));
    }
    for (int year : years()) {
        int flags = 0;
        for (const auto& r : year_rows(year)) flags += r.ref_date;
        if (flags > 1)
            throw InvalidParameter("ref_date", "year " + std::to_string(year) + " has more than one reference date");
    }
}

double seasonal_sin(int day, double year_length) {
    return std::sin(2.0 * std::numbers::pi * static_cast<double>(day) / year_length);
}

double seasonal_cos(int day, double year_length) {
    return std::cos(2.0 * std::numbers::pi * static_cast<double>(day) / year_length);
}

std::vector<SurveillanceRow> build_year_rows(const EpidemicSeries& series, const DailyAbsence& absence,
                                             const AbsenteeismParams& params) {
    const int horizon = series.horizon();
    const auto ref = series.reference_date;
    std::vector<SurveillanceRow> rows(static_cast<std::size_t>(horizon));
    for (int day = 1; day <= horizon; ++day) {
        const auto i = static_cast<std::size_t>(day - 1);
        SurveillanceRow& r = rows[i];
        r.date = day;
        r.school_year = series.replicate_id;
        r.pct_absent = absence.pct_absent[i];
        r.absent = absence.absent[i];
        r.absent_sick = absence.absent_sick[i];
        r.new_inf = series.new_inf[i];
        r.reported_cases = series.reported[i];
        const std::int64_t driver = params.case_source == CaseSource::reported ? r.reported_cases : r.new_inf;
        r.case_flag = driver >= 1 ? 1 : 0;
        r.sinterm = seasonal_sin(day, params.year_length);
        r.costerm = seasonal_cos(day, params.year_length);
        if (ref) {
            r.window = (day >= *ref - params.window_days && day <= *ref) ? 1 : 0;
            r.ref_date = day == *ref ? 1 : 0;
        }
        r.lags.resize(static_cast<std::size_t>(params.maxlag) + 1);
        for (int k = 0; k <= params.maxlag; ++k) {
            if (day > k) r.lags[static_cast<std::size_t>(k)] = absence.pct_absent[i - static_cast<std::size_t>(k)];
        }
    }
    return rows;
}

SurveillanceDataset compile_dataset(std::span<const EpidemicSeries> epidemics, const PopulationFrame& population,
                                    const AbsenteeismParams& params, const RngStream& root, int threads) {
    params.validate();
    std::vector<std::vector<SurveillanceRow>> blocks(epidemics.size());
    parallel_for(epidemics.size(), threads, [&](std::size_t i) {
        const auto& series = epidemics[i];
        const RngStream year = root.child("year-" + std::to_string(series.replicate_id));
        RngStream allocation = year.child("allocation");
        RngStream absence_rng = year.child("absence");
        const auto infections = allocate_student_infections(series, population, allocation);
        const auto absence = simulate_absences(infections, population, params, absence_rng);
        blocks[i] = build_year_rows(series, absence, params);
    });

    SurveillanceDataset ds;
    ds.maxlag = params.maxlag;
    for (std::size_t i = 0; i < epidemics.size(); ++i) {
        if (!epidemics[i].reference_date)
            ds.warnings.push_back("school year " + std::to_string(epidemics[i].replicate_id) +
                                  " has no reference date; it is excluded from alert evaluation");
        ds.rows.insert(ds.rows.end(), blocks[i].begin(), blocks[i].end());
    }
    ds.normalize();
    return ds;
}

}  // namespace sentinel
