#include "doctest.h"

#include "sentinel/population.hpp"

using namespace sentinel;

// End-to-end size of the reference population (16 catchments of side 80,
// normal(3, 1) schools, gamma(7.86, 0.032) enrollments, default household mix).
TEST_CASE("reference configuration yields between 150000 and 350000 individuals") {
    const PopulationSpec spec;
    const auto pop = simulate_population(spec, RngStream::derive(656, "population"));
    const auto n = pop.frame.individuals.size();
    MESSAGE("individuals: ", n, ", schools: ", pop.schools.size(), ", households: ", pop.frame.households.size());
    CHECK(n >= 150000);
    CHECK(n <= 350000);
}
