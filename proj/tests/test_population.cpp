#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "sentinel/error.hpp"
#include "sentinel/population.hpp"

using namespace sentinel;

namespace {

PopulationConfig reference_config() { return PopulationConfig{}; }

std::vector<School> one_school(int target, int catchment_id = 1) {
    School s;
    s.id = 1;
    s.catchment_id = catchment_id;
    s.target_enrollment = target;
    return {s};
}

}  // namespace

TEST_CASE("catchments tile a ceil(sqrt(n))-column grid") {
    auto s = RngStream::derive(656, "pop/catchments");
    const auto cs = simulate_catchments(16, 80.0, DistributionSpec::normal(3, 1), s);
    REQUIRE(cs.size() == 16);
    std::set<std::pair<double, double>> origins;
    for (const auto& c : cs) {
        CHECK(c.num_schools >= 1);
        CHECK(c.bounds.side == 80.0);
        CHECK(std::fmod(c.bounds.x0, 80.0) == 0.0);
        CHECK(std::fmod(c.bounds.y0, 80.0) == 0.0);
        CHECK(c.bounds.x0 < 320.0);
        CHECK(c.bounds.y0 < 320.0);
        origins.insert({c.bounds.x0, c.bounds.y0});
    }
    CHECK(origins.size() == 16);  // no overlap

    auto s5 = RngStream::derive(656, "five");
    const auto five = simulate_catchments(5, 10.0, DistributionSpec::normal(1, 0), s5);
    CHECK(five[2].bounds.x0 == 20.0);  // 3 columns
    CHECK(five[3].bounds.x0 == 0.0);
    CHECK(five[3].bounds.y0 == 10.0);
}

TEST_CASE("school counts: zero-variance draw and the floor at one") {
    auto s = RngStream::derive(1, "c");
    const auto single = simulate_catchments(1, 1.0, DistributionSpec::normal(5, 0), s);
    REQUIRE(single.size() == 1);
    CHECK(single[0].num_schools == 5);

    auto s2 = RngStream::derive(2, "c");
    auto replay = RngStream::derive(2, "c");
    const auto small = simulate_catchments(4, 10.0, DistributionSpec::normal(0, 0.1), s2);
    const auto draws = sample(DistributionSpec::normal(0, 0.1), 4, replay);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(small[i].num_schools == std::max(1L, std::lround(draws[i])));
        CHECK(small[i].num_schools == 1);
    }
}

TEST_CASE("catchment arguments are validated") {
    auto s = RngStream::derive(1, "c");
    CHECK_THROWS_AS(simulate_catchments(0, 1.0, DistributionSpec::normal(1, 1), s), InvalidParameter);
    CHECK_THROWS_AS(simulate_catchments(2, 0.0, DistributionSpec::normal(1, 1), s), InvalidParameter);
    CHECK_THROWS_AS(simulate_catchments(2, 1.0, DistributionSpec::normal(1, -1), s), InvalidParameter);
}

TEST_CASE("gamma(7.86, 0.032) enrollments over 48 schools average near 245.6") {
    std::vector<Catchment> cs(16);
    for (int i = 0; i < 16; ++i) cs[static_cast<std::size_t>(i)] = {i + 1, 3, {0, 0, 1}};
    auto s = RngStream::derive(656, "pop/enrollment");
    const auto schools = simulate_school_enrollments(cs, DistributionSpec::gamma(7.86, 0.032), s);
    REQUIRE(schools.size() == 48);
    double total = 0;
    for (const auto& sc : schools) {
        CHECK(sc.target_enrollment >= 1);
        total += sc.target_enrollment;
    }
    const double mean = total / 48.0;
    CHECK(mean >= 200.0);
    CHECK(mean <= 295.0);
}

TEST_CASE("degenerate enrollment draw fills both schools of a catchment with 100") {
    std::vector<Catchment> cs{{1, 2, {0, 0, 10}}};
    auto s = RngStream::derive(1, "e");
    const auto schools = simulate_school_enrollments(cs, DistributionSpec::normal(100, 0), s);
    REQUIRE(schools.size() == 2);
    CHECK(schools[0].target_enrollment == 100);
    CHECK(schools[1].target_enrollment == 100);
    CHECK(schools[0].catchment_id == 1);
    CHECK(schools[1].id == 2);
    CHECK_THROWS_AS(simulate_school_enrollments({}, DistributionSpec::normal(1, 0), s), InvalidParameter);
}

TEST_CASE("households with children fill every school exactly") {
    std::vector<Catchment> cs;
    for (int i = 0; i < 4; ++i) cs.push_back({i + 1, 1 + i % 3, {0, 0, 1}});
    auto se = RngStream::derive(656, "e");
    auto schools = simulate_school_enrollments(cs, DistributionSpec::gamma(7.86, 0.032), se);
    const auto households = simulate_households_with_children(schools, reference_config(), RngStream::derive(656, "w"));

    std::map<int, int> placed;
    std::map<int, int> school_catchment;
    for (const auto& sc : schools) school_catchment[sc.id] = sc.catchment_id;
    for (const auto& h : households) {
        CHECK(h.has_children);
        CHECK(h.num_children >= 1);
        CHECK(h.num_elem_children >= 0);
        CHECK(h.num_elem_children <= h.num_children);
        CHECK(h.size == h.num_children + (h.parent_type == ParentType::couple ? 2 : 1));
        CHECK(static_cast<int>(h.child_schools.size()) == h.num_elem_children);
        for (int sid : h.child_schools) {
            ++placed[sid];
            CHECK(school_catchment[sid] == h.catchment_id);
        }
    }
    for (const auto& sc : schools) {
        CHECK(sc.realized_enrollment == sc.target_enrollment);
        CHECK(placed[sc.id] == sc.target_enrollment);
    }
}

TEST_CASE("one-child households with prop_elem_age 1 give one household per seat") {
    PopulationConfig c;
    c.prop_elem_age = 1.0;
    c.prop_children_couple = {1, 0, 0};
    c.prop_children_lone = {1, 0, 0};
    auto schools = one_school(5);
    const auto hh = simulate_households_with_children(schools, c, RngStream::derive(1, "w"));
    CHECK(hh.size() == 5);
    CHECK(schools[0].realized_enrollment == 5);
}

TEST_CASE("prop_elem_age 0 cannot fill schools") {
    PopulationConfig c;
    c.prop_elem_age = 0.0;
    auto schools = one_school(5);
    CHECK_THROWS_AS(simulate_households_with_children(schools, c, RngStream::derive(1, "w")), SimulationError);
}

TEST_CASE("children per household follow the parent-type mixture") {
    // Analytic mixture mean: 0.77 * E[children | couple] + 0.23 * E[children | lone].
    const PopulationConfig c = reference_config();
    const double couple_mean = 1 * 0.36 + 2 * 0.43 + 3 * 0.21;
    const double lone_mean = 1 * 0.58 + 2 * 0.31 + 3 * 0.11;
    const double expected = 0.77 * couple_mean + 0.23 * lone_mean;
    CHECK(expected == doctest::Approx(1.7764).epsilon(1e-12));

    // About 0.94 elementary children per household, so ~10^5 households.
    auto schools = one_school(94000);
    const auto hh = simulate_households_with_children(schools, c, RngStream::derive(656, "mixture"));
    CHECK(hh.size() > 95000);
    double children = 0, elem = 0, couples = 0;
    for (const auto& h : hh) {
        children += h.num_children;
        elem += h.num_elem_children;
        couples += h.parent_type == ParentType::couple ? 1 : 0;
    }
    const double n = static_cast<double>(hh.size());
    CHECK(std::abs(children / n - expected) / expected < 0.02);
    CHECK(std::abs(couples / n - 0.77) < 0.01);
    CHECK(std::abs(elem / children - 0.53) < 0.01);
}

TEST_CASE("childless household counts are proportional per catchment") {
    std::vector<Household> with;
    for (int i = 0; i < 430; ++i) {
        Household h;
        h.id = i + 1;
        h.catchment_id = 1;
        h.has_children = true;
        h.parent_type = ParentType::lone;
        h.num_children = 1;
        h.size = 2;
        with.push_back(h);
    }
    std::vector<Catchment> cs{{1, 1, {0, 0, 80}}};
    PopulationConfig c;
    c.prop_house_children = 0.43;
    const auto without = simulate_households_without_children(with, cs, c, RngStream::derive(656, "wo"));
    CHECK(without.size() == 570);
    for (const auto& h : without) {
        CHECK_FALSE(h.has_children);
        CHECK(h.num_children == 0);
        CHECK(h.size >= 1);
        CHECK(h.size <= 5);
        REQUIRE(h.location.has_value());
        CHECK(cs[0].bounds.contains(*h.location));
        CHECK(h.id > 430);
    }

    c.prop_house_children = 1.0;
    CHECK(simulate_households_without_children(with, cs, c, RngStream::derive(656, "wo")).empty());
    c.prop_house_children = 0.0;
    CHECK_THROWS_AS(simulate_households_without_children(with, cs, c, RngStream::derive(656, "wo")), InvalidParameter);
}

TEST_CASE("childless household sizes match prop_house_size within 1%") {
    std::vector<Household> with;
    for (int i = 0; i < 100000; ++i) {
        Household h;
        h.id = i + 1;
        h.catchment_id = 1 + i % 2;
        h.has_children = true;
        h.num_children = 1;
        with.push_back(h);
    }
    std::vector<Catchment> cs{{1, 1, {0, 0, 1}}, {2, 1, {1, 0, 1}}};
    PopulationConfig c;
    c.prop_house_children = 0.5;  // one childless household per with-children household
    const auto without = simulate_households_without_children(with, cs, c, RngStream::derive(656, "sizes"));
    REQUIRE(without.size() == 100000);
    std::vector<double> freq(5, 0.0);
    for (const auto& h : without) freq[static_cast<std::size_t>(h.size - 1)] += 1.0 / 100000.0;
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(freq[k] - c.prop_house_size[k]) < 0.01);
}

TEST_CASE("assembling a couple with two children, one elementary") {
    Household h;
    h.id = 7;
    h.catchment_id = 1;
    h.has_children = true;
    h.parent_type = ParentType::couple;
    h.num_children = 2;
    h.num_elem_children = 1;
    h.size = 4;
    h.child_schools = {3};
    std::vector<Catchment> cs{{1, 1, {10, 20, 5}}};
    auto s = RngStream::derive(1, "loc");
    const auto frame = assemble_individuals({h}, cs, s);
    REQUIRE(frame.individuals.size() == 4);
    int with_school = 0;
    for (const auto& p : frame.individuals) {
        CHECK(p.household_id == 7);
        CHECK(p.is_elem_child == p.school_id.has_value());
        with_school += p.school_id ? 1 : 0;
        CHECK(cs[0].bounds.contains(p.location));
        CHECK(p.location.x == frame.individuals[0].location.x);
    }
    CHECK(with_school == 1);
    REQUIRE(frame.households.size() == 1);
    CHECK(frame.households[0].location.has_value());
}

TEST_CASE("simulated population invariants") {
    PopulationSpec spec;
    spec.num_catchments = 4;
    spec.enrollment = DistributionSpec::gamma(7.86, 0.1);
    const auto pop = simulate_population(spec, RngStream::derive(656, "population"));

    std::map<int, const Catchment*> catchment;
    for (const auto& c : pop.catchments) catchment[c.id] = &c;
    std::map<int, int> school_catchment, enrolled;
    long target = 0;
    for (const auto& s : pop.schools) {
        school_catchment[s.id] = s.catchment_id;
        target += s.target_enrollment;
        CHECK(s.realized_enrollment == s.target_enrollment);
    }
    std::map<int, int> household_members;
    for (const auto& p : pop.frame.individuals) {
        CHECK(p.is_elem_child == p.school_id.has_value());
        if (p.school_id) {
            CHECK(school_catchment.at(*p.school_id) == p.catchment_id);
            ++enrolled[*p.school_id];
        }
        CHECK(catchment.at(p.catchment_id)->bounds.contains(p.location));
        ++household_members[p.household_id];
    }
    long students = 0;
    for (const auto& [id, n] : enrolled) students += n;
    CHECK(students == target);
    for (const auto& h : pop.frame.households) {
        CHECK(household_members[h.id] == h.size);
        REQUIRE(h.location.has_value());
        CHECK(catchment.at(h.catchment_id)->bounds.contains(*h.location));
        if (!h.has_children) {
            CHECK(h.size >= 1);
            CHECK(h.size <= 5);
        }
    }
    // ids are 1..n in order
    for (std::size_t i = 0; i < pop.frame.individuals.size(); ++i)
        CHECK(pop.frame.individuals[i].id == static_cast<int>(i + 1));
}

TEST_CASE("population generation is deterministic") {
    PopulationSpec spec;
    spec.num_catchments = 3;
    const auto a = simulate_population(spec, RngStream::derive(42, "population"));
    const auto b = simulate_population(spec, RngStream::derive(42, "population"));
    REQUIRE(a.frame.individuals.size() == b.frame.individuals.size());
    bool same = true;
    for (std::size_t i = 0; i < a.frame.individuals.size(); ++i) {
        const auto& x = a.frame.individuals[i];
        const auto& y = b.frame.individuals[i];
        same = same && x.household_id == y.household_id && x.school_id == y.school_id &&
               x.location.x == y.location.x && x.location.y == y.location.y;
    }
    CHECK(same);
    const auto c = simulate_population(spec, RngStream::derive(43, "population"));
    CHECK(c.frame.individuals.size() != a.frame.individuals.size());
}

TEST_CASE("household locations pass a 4x4 chi-square test for spatial randomness") {
    // 10^4 childless households in one catchment.
    std::vector<Household> with(10000);
    for (int i = 0; i < 10000; ++i) {
        with[static_cast<std::size_t>(i)].id = i + 1;
        with[static_cast<std::size_t>(i)].catchment_id = 1;
        with[static_cast<std::size_t>(i)].has_children = true;
    }
    std::vector<Catchment> cs{{1, 1, {160, 80, 80}}};
    PopulationConfig c;
    c.prop_house_children = 0.5;
    const auto hh = simulate_households_without_children(with, cs, c, RngStream::derive(656, "csr"));
    REQUIRE(hh.size() == 10000);
    std::vector<double> counts(16, 0.0);
    for (const auto& h : hh) {
        const int cx = static_cast<int>((h.location->x - 160.0) / 20.0);
        const int cy = static_cast<int>((h.location->y - 80.0) / 20.0);
        counts[static_cast<std::size_t>(cy * 4 + cx)] += 1.0;
    }
    double chi = 0.0;
    for (double o : counts) chi += (o - 625.0) * (o - 625.0) / 625.0;
    CHECK(chi < 37.697);  // chi-square(15) at alpha = 0.001

    // Locations assigned during assembly are uniform too.
    std::vector<Household> unplaced(10000);
    for (int i = 0; i < 10000; ++i) {
        unplaced[static_cast<std::size_t>(i)].id = i + 1;
        unplaced[static_cast<std::size_t>(i)].catchment_id = 1;
    }
    auto s = RngStream::derive(656, "assemble");
    const auto frame = assemble_individuals(unplaced, cs, s);
    std::fill(counts.begin(), counts.end(), 0.0);
    for (const auto& h : frame.households) {
        const int cx = static_cast<int>((h.location->x - 160.0) / 20.0);
        const int cy = static_cast<int>((h.location->y - 80.0) / 20.0);
        counts[static_cast<std::size_t>(cy * 4 + cx)] += 1.0;
    }
    chi = 0.0;
    for (double o : counts) chi += (o - 625.0) * (o - 625.0) / 625.0;
    CHECK(chi < 37.697);
}

TEST_CASE("population config validation") {
    PopulationConfig c;
    c.prop_children_couple = {0.5, 0.4, 0.2};
    CHECK_THROWS_AS(c.validate(), InvalidParameter);
    PopulationConfig d;
    d.prop_parent_couple = 1.5;
    CHECK_THROWS_AS(d.validate(), InvalidParameter);
    PopulationConfig e;
    e.prop_house_size = {0.2, 0.2, 0.2, 0.2, 0.2 + 1e-12};
    CHECK_NOTHROW(e.validate());
}
