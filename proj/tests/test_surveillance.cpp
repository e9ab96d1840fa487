#include "doctest.h"

#include <cmath>
#include <numeric>

#include "sentinel/error.hpp"
#include "sentinel/surveillance.hpp"

using namespace sentinel;

namespace {

// `total` individuals; the first `students` attend schools 1..n_schools round-robin.
PopulationFrame frame_with(std::size_t total, std::size_t students, int n_schools = 1) {
    PopulationFrame f;
    for (std::size_t i = 0; i < total; ++i) {
        Individual p;
        p.id = static_cast<int>(i) + 1;
        p.household_id = p.id;
        p.catchment_id = 1;
        if (i < students) {
            p.is_elem_child = true;
            p.school_id = 1 + static_cast<int>(i % static_cast<std::size_t>(n_schools));
        }
        f.individuals.push_back(p);
    }
    return f;
}

EpidemicSeries series_with(std::int64_t N, std::vector<std::int64_t> new_inf, int inf_period = 4,
                           std::vector<std::int64_t> reported = {}) {
    EpidemicSeries s;
    s.inf_period = inf_period;
    const auto T = new_inf.size();
    s.new_inf = std::move(new_inf);
    s.reported = reported.empty() ? std::vector<std::int64_t>(T, 0) : std::move(reported);
    std::int64_t S = N;
    std::vector<std::int64_t> ring(static_cast<std::size_t>(inf_period), 0);
    std::int64_t I = 0, R = 0;
    for (std::size_t t = 0; t < T; ++t) {
        auto& slot = ring[(t + 1) % static_cast<std::size_t>(inf_period)];
        R += slot;
        I += s.new_inf[t] - slot;
        slot = s.new_inf[t];
        S -= s.new_inf[t];
        s.S.push_back(S);
        s.I.push_back(I);
        s.R.push_back(R);
    }
    s.reference_date = compute_reference_date(s.reported);
    return s;
}

}  // namespace

TEST_CASE("no new infections means no student infections") {
    const auto f = frame_with(500, 50);
    auto s = RngStream::derive(1, "a");
    const auto inf = allocate_student_infections(series_with(500, std::vector<std::int64_t>(30, 0)), f, s);
    CHECK(inf.students.size() == 50);
    CHECK(std::none_of(inf.infection_day.begin(), inf.infection_day.end(), [](const auto& d) { return d.has_value(); }));
}

TEST_CASE("student share of infections is hypergeometric") {
    // 1000 individuals, 100 students, 100 infections on day 1.
    const auto f = frame_with(1000, 100);
    std::vector<std::int64_t> inf(5, 0);
    inf[0] = 100;
    const auto series = series_with(1000, inf);
    const double mean = 10.0;
    const double var = 100.0 * 100.0 * 900.0 * 900.0 / (1000.0 * 1000.0 * 999.0);

    auto s = RngStream::derive(656, "hyper");
    const auto one = allocate_student_infections(series, f, s);
    const auto hits = std::count_if(one.infection_day.begin(), one.infection_day.end(), [](const auto& d) { return d.has_value(); });
    CHECK(std::abs(static_cast<double>(hits) - mean) <= 3.0 * std::sqrt(var));

    constexpr int trials = 4000;
    double total = 0.0;
    for (int i = 0; i < trials; ++i) {
        const auto r = allocate_student_infections(series, f, s);
        total += static_cast<double>(std::count_if(r.infection_day.begin(), r.infection_day.end(), [](const auto& d) { return d.has_value(); }));
    }
    CHECK(std::abs(total / trials - mean) <= 3.0 * std::sqrt(var / trials));
}

TEST_CASE("every new infection is assigned to a distinct individual") {
    const auto f = frame_with(300, 300);
    std::vector<std::int64_t> inf{0, 5, 40, 100, 20, 0, 135};
    auto s = RngStream::derive(3, "all");
    const auto r = allocate_student_infections(series_with(300, inf), f, s);
    std::vector<int> per_day(inf.size() + 1, 0);
    for (const auto& d : r.infection_day) {
        REQUIRE(d.has_value());
        ++per_day[static_cast<std::size_t>(*d)];
    }
    for (std::size_t t = 0; t < inf.size(); ++t) CHECK(per_day[t + 1] == inf[t]);
}

TEST_CASE("allocation errors") {
    auto s = RngStream::derive(3, "err");
    CHECK_THROWS_AS(allocate_student_infections(series_with(400, {1, 2}), frame_with(300, 10), s), SimulationError);
    auto broken = series_with(10, {5, 8});  // more infections than people
    CHECK_THROWS_AS(allocate_student_infections(broken, frame_with(10, 5), s), SimulationError);
}

TEST_CASE("absences without infections") {
    const auto f = frame_with(20000, 20000, 40);
    auto a = RngStream::derive(1, "alloc");
    const auto infections = allocate_student_infections(series_with(20000, std::vector<std::int64_t>(60, 0)), f, a);

    AbsenteeismParams zero;
    zero.p_base = 0.0;
    auto s = RngStream::derive(1, "abs");
    const auto none = simulate_absences(infections, f, zero, s);
    CHECK(std::all_of(none.absent.begin(), none.absent.end(), [](auto v) { return v == 0; }));

    const AbsenteeismParams base;
    const auto daily = simulate_absences(infections, f, base, s);
    CHECK(daily.enrolled == 20000);
    for (double pct : daily.pct_absent) {
        CHECK(pct >= 0.045);
        CHECK(pct <= 0.055);
    }
}

TEST_CASE("everyone infected with p_sick 1 is absent") {
    const auto f = frame_with(200, 200, 3);
    std::vector<std::int64_t> inf(10, 0);
    inf[0] = 200;
    auto a = RngStream::derive(1, "alloc");
    const auto infections = allocate_student_infections(series_with(200, inf, 10), f, a);
    AbsenteeismParams p;
    p.p_sick = 1.0;
    auto s = RngStream::derive(1, "abs");
    const auto daily = simulate_absences(infections, f, p, s);
    for (std::size_t d = 0; d < 10; ++d) {
        CHECK(daily.pct_absent[d] == 1.0);
        CHECK(daily.absent_sick[d] == 200);
    }
}

TEST_CASE("absence counts are bounded by infections and enrollment") {
    const auto f = frame_with(5000, 1200, 5);
    std::vector<std::int64_t> inf(120, 0);
    for (std::size_t t = 10; t < 80; ++t) inf[t] = 30;
    const auto series = series_with(5000, inf, 4);
    auto a = RngStream::derive(2, "alloc");
    const auto infections = allocate_student_infections(series, f, a);
    auto s = RngStream::derive(2, "abs");
    const auto daily = simulate_absences(infections, f, AbsenteeismParams{}, s);
    for (int day = 1; day <= 120; ++day) {
        std::int64_t infected = 0;
        for (std::size_t k = 0; k < infections.students.size(); ++k) infected += infections.infected_on(k, day) ? 1 : 0;
        const auto i = static_cast<std::size_t>(day - 1);
        CHECK(daily.absent_sick[i] <= infected);
        CHECK(daily.absent_sick[i] <= daily.absent[i]);
        CHECK(daily.absent[i] <= daily.enrolled);
        CHECK(daily.pct_absent[i] == static_cast<double>(daily.absent[i]) / 1200.0);
    }
}

TEST_CASE("seasonal terms at Date 1") {
    CHECK(std::abs(seasonal_sin(1, 365.25) - 0.01720158) < 1e-7);
    CHECK(std::abs(seasonal_cos(1, 365.25) - 0.9998520) < 1e-7);
    CHECK(seasonal_sin(1, 365.25) == doctest::Approx(0.017201575418260506).epsilon(1e-13));
    CHECK(seasonal_cos(1, 365.25) == doctest::Approx(0.9998520419557735).epsilon(1e-13));
}

TEST_CASE("year rows: flags, case indicator and lags") {
    std::vector<std::int64_t> inf(40, 0), rep(40, 0);
    inf[9] = 5;
    inf[14] = 3;
    rep[16] = 1;
    rep[19] = 1;  // reference date 20
    const auto series = series_with(1000, inf, 4, rep);
    REQUIRE(series.reference_date == 20);
    DailyAbsence absence;
    for (int d = 1; d <= 40; ++d) {
        absence.absent.push_back(d);
        absence.absent_sick.push_back(0);
        absence.pct_absent.push_back(d / 1000.0);
    }
    absence.enrolled = 1000;
    const AbsenteeismParams params;
    const auto rows = build_year_rows(series, absence, params);
    REQUIRE(rows.size() == 40);
    int window_sum = 0;
    for (const auto& r : rows) {
        CHECK(r.window == (r.date >= 6 && r.date <= 20 ? 1 : 0));
        CHECK(r.ref_date == (r.date == 20 ? 1 : 0));
        CHECK(r.case_flag == (r.date == 17 || r.date == 20 ? 1 : 0));
        window_sum += r.window;
        REQUIRE(r.lags.size() == 16);
        CHECK(r.lags[0] == r.pct_absent);
        for (int k = 1; k <= 15; ++k) {
            const auto& lag = r.lags[static_cast<std::size_t>(k)];
            if (r.date <= k) {
                CHECK_FALSE(lag.has_value());
            } else {
                REQUIRE(lag.has_value());
                CHECK(*lag == (r.date - k) / 1000.0);
            }
        }
    }
    CHECK(window_sum == params.window_days + 1);

    AbsenteeismParams by_infection;
    by_infection.case_source = CaseSource::new_infections;
    const auto alt = build_year_rows(series, absence, by_infection);
    for (const auto& r : alt) CHECK(r.case_flag == (r.date == 10 || r.date == 15 ? 1 : 0));
}

TEST_CASE("compiled dataset shape, blocks and warnings") {
    const auto f = frame_with(3000, 600, 3);
    std::vector<EpidemicSeries> eps;
    for (int r = 1; r <= 10; ++r) {
        std::vector<std::int64_t> inf(300, 0), rep(300, 0);
        for (int t = 40; t < 80; ++t) inf[static_cast<std::size_t>(t)] = 10;
        if (r != 5) {
            rep[static_cast<std::size_t>(50 + r)] = 1;
            rep[static_cast<std::size_t>(53 + r)] = 1;
        }
        auto s = series_with(3000, inf, 4, rep);
        s.replicate_id = r;
        eps.push_back(s);
    }
    const auto ds = compile_dataset(eps, f, AbsenteeismParams{}, RngStream::derive(656, "surveillance"), 1);
    CHECK(ds.rows.size() == 3000);
    CHECK(ds.column_count() == 28);
    const auto names = SurveillanceDataset::column_names(15);
    REQUIRE(names.size() == 28);
    CHECK(names[0] == "Date");
    CHECK(names[11] == "ref_date");
    CHECK(names[12] == "lag0");
    CHECK(names[27] == "lag15");
    CHECK(ds.years() == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.warnings[0].find("school year 5") != std::string::npos);
    CHECK_FALSE(ds.reference_date(5).has_value());
    for (const auto& r : ds.year_rows(5)) {
        CHECK(r.window == 0);
        CHECK(r.ref_date == 0);
    }
    CHECK(ds.reference_date(3) == 57);
    for (const auto& r : ds.rows) {
        CHECK(r.pct_absent >= 0.0);
        CHECK(r.pct_absent <= 1.0);
    }
    // first row of each year has no lag1: shifting stays within a year
    for (int y : ds.years()) CHECK_FALSE(ds.year_rows(y).front().lags[1].has_value());

    const auto parallel = compile_dataset(eps, f, AbsenteeismParams{}, RngStream::derive(656, "surveillance"), 3);
    bool same = parallel.rows.size() == ds.rows.size();
    for (std::size_t i = 0; same && i < ds.rows.size(); ++i) same = ds.rows[i].absent == parallel.rows[i].absent;
    CHECK(same);
}

TEST_CASE("column count follows maxlag") {
    SurveillanceDataset ds;
    ds.maxlag = 3;
    CHECK(ds.column_count() == 16);
    CHECK(SurveillanceDataset::column_names(0).size() == 13);
}

TEST_CASE("normalize orders rows and rejects malformed tables") {
    SurveillanceDataset ds;
    ds.maxlag = 0;
    for (int y : {2, 1})
        for (int d : {2, 1}) {
            SurveillanceRow r;
            r.date = d;
            r.school_year = y;
            r.lags = {0.1};
            ds.rows.push_back(r);
        }
    ds.normalize();
    CHECK(ds.rows[0].school_year == 1);
    CHECK(ds.rows[0].date == 1);
    CHECK(ds.rows[3].school_year == 2);
    CHECK(ds.rows[3].date == 2);

    auto dup = ds;
    dup.rows.push_back(dup.rows[0]);
    CHECK_THROWS_AS(dup.normalize(), InvalidParameter);
    auto badlag = ds;
    badlag.rows[0].lags.push_back(0.2);
    CHECK_THROWS_AS(badlag.normalize(), InvalidParameter);
    auto tworefs = ds;
    tworefs.rows[0].ref_date = 1;
    tworefs.rows[1].ref_date = 1;
    CHECK_THROWS_AS(tworefs.normalize(), InvalidParameter);
}

TEST_CASE("absenteeism parameter validation") {
    AbsenteeismParams p;
    p.p_base = 0.5;
    p.p_sick = 0.4;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    AbsenteeismParams q;
    q.window_days = 0;
    CHECK_THROWS_AS(q.validate(), InvalidParameter);
    AbsenteeismParams r;
    r.maxlag = -1;
    CHECK_THROWS_AS(r.validate(), InvalidParameter);
}
