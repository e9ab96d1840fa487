#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentinel/epidemic.hpp"
#include "sentinel/population.hpp"
#include "sentinel/rng.hpp"

namespace sentinel {

/// Which daily count drives the binary Case indicator.
enum class CaseSource { reported, new_infections };

struct AbsenteeismParams {
    double p_base = 0.05;
    double p_sick = 0.95;
    int maxlag = 15;
    int window_days = 14;
    double year_length = 365.25;
    CaseSource case_source = CaseSource::reported;

    void validate() const;
};

/// Infection start day of every enrolled student (individual order).
struct StudentInfections {
    int horizon = 0;
    int inf_period = 1;
    std::vector<std::size_t> students;            // indices into PopulationFrame::individuals
    std::vector<std::optional<int>> infection_day;  // parallel to students

    bool infected_on(std::size_t k, int day) const {
        const auto& d = infection_day[k];
        return d && day >= *d && day < *d + inf_period;
    }
};

/// Distributes each day's new infections over individuals drawn uniformly
/// without replacement from those still susceptible.
StudentInfections allocate_student_infections(const EpidemicSeries& series, const PopulationFrame& population,
                                              RngStream& stream);

struct DailyAbsence {
    std::vector<std::int64_t> absent;
    std::vector<std::int64_t> absent_sick;
    std::vector<double> pct_absent;  // fraction of enrolled students
    std::int64_t enrolled = 0;
};

/// Per school and day: infected students are absent with p_sick, the rest with p_base.
DailyAbsence simulate_absences(const StudentInfections& infections, const PopulationFrame& population,
                               const AbsenteeismParams& params, RngStream& stream);

struct SurveillanceRow {
    int date = 1;
    int school_year = 1;
    double pct_absent = 0.0;
    std::int64_t absent = 0;
    std::int64_t absent_sick = 0;
    std::int64_t new_inf = 0;
    std::int64_t reported_cases = 0;
    int case_flag = 0;
    double sinterm = 0.0;
    double costerm = 0.0;
    int window = 0;
    int ref_date = 0;
    std::vector<std::optional<double>> lags;  // lag0..lag{maxlag}
};

/// The daily table, one contiguous block per school year ordered by Date.
struct SurveillanceDataset {
    int maxlag = 15;
    std::vector<SurveillanceRow> rows;
    std::vector<std::string> warnings;

    static std::vector<std::string> column_names(int maxlag);
    std::size_t column_count() const { return 12 + static_cast<std::size_t>(maxlag) + 1; }

    /// Distinct school years in ascending order.
    std::vector<int> years() const;
    std::span<const SurveillanceRow> year_rows(int year) const;
    /// Date flagged ref_date == 1 in that year, if any.
    std::optional<int> reference_date(int year) const;

    /// Sorts rows by (ScYr, Date) and checks structural invariants. Used after ingestion.
    void normalize();
};

double seasonal_sin(int day, double year_length);
double seasonal_cos(int day, double year_length);

/// Builds one year's block of rows from its series and absence counts.
std::vector<SurveillanceRow> build_year_rows(const EpidemicSeries& series, const DailyAbsence& absence,
                                             const AbsenteeismParams& params);

/// Replicate r uses streams `root.child("year-<r>")/{allocation,absence}`.
SurveillanceDataset compile_dataset(std::span<const EpidemicSeries> epidemics, const PopulationFrame& population,
                                    const AbsenteeismParams& params, const RngStream& root, int threads = 1);

}  // namespace sentinel
