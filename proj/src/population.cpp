#include "sentinel/population.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

void check_probability(double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter(field, "must lie in [0, 1]");
}

int count_from_draw(double x) {
    if (!std::isfinite(x)) throw SimulationError("non-finite draw while generating counts");
    return std::max(1, static_cast<int>(std::lround(x)));
}

Point uniform_point(RngStream& rng, const Square& sq) {
    const double x = sample_uniform(rng, sq.x0, sq.x0 + sq.side);
    const double y = sample_uniform(rng, sq.y0, sq.y0 + sq.side);
    return {x, y};
}

std::string catchment_label(int id) { return "catchment-" + std::to_string(id); }

}  // namespace

void PopulationConfig::validate() const {
    check_probability(prop_parent_couple, "prop_parent_couple");
    check_probability(prop_elem_age, "prop_elem_age");
    check_probability(prop_house_children, "prop_house_children");
    validate_probability_vector(prop_children_couple, "prop_children_couple");
    validate_probability_vector(prop_children_lone, "prop_children_lone");
    validate_probability_vector(prop_house_size, "prop_house_size");
}

void PopulationSpec::validate() const {
    if (num_catchments < 1) throw InvalidParameter("num_catchments", "must be >= 1");
    if (!(catchment_side > 0.0)) throw InvalidParameter("catchment_side", "must be > 0");
    school_count.validate();
    enrollment.validate();
    households.validate();
    if (households.prop_house_children == 0.0)
        throw InvalidParameter("prop_house_children", "must be > 0 to size childless households");
}

std::vector<Catchment> simulate_catchments(int n, double side, const DistributionSpec& school_count_dist,
                                           RngStream& stream) {
    if (n < 1) throw InvalidParameter("catchments", "must be >= 1");
    if (!(side > 0.0)) throw InvalidParameter("side", "must be > 0");
    school_count_dist.validate();

    const int columns = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const auto draws = sample(school_count_dist, static_cast<std::size_t>(n), stream);
    std::vector<Catchment> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Catchment c;
        c.id = i + 1;
        c.num_schools = count_from_draw(draws[static_cast<std::size_t>(i)]);
        c.bounds = {static_cast<double>(i % columns) * side, static_cast<double>(i / columns) * side, side};
        out.push_back(c);
    }
    return out;
}

std::vector<School> simulate_school_enrollments(const std::vector<Catchment>& catchments,
                                                const DistributionSpec& enroll_dist, RngStream& stream) {
    if (catchments.empty()) throw InvalidParameter("catchments", "must be non-empty");
    enroll_dist.validate();
    std::vector<School> schools;
    for (const auto& c : catchments) {
        for (int slot = 0; slot < c.num_schools; ++slot) {
            School s;
            s.id = static_cast<int>(schools.size()) + 1;
            s.catchment_id = c.id;
            schools.push_back(s);
        }
    }
    const auto draws = sample(enroll_dist, schools.size(), stream);
    for (std::size_t i = 0; i < schools.size(); ++i) schools[i].target_enrollment = count_from_draw(draws[i]);
    return schools;
}

std::vector<Household> simulate_households_with_children(std::vector<School>& schools,
                                                         const PopulationConfig& config,
                                                         const RngStream& stream) {
    config.validate();
    if (config.prop_elem_age == 0.0 && !schools.empty())
        throw SimulationError("prop_elem_age is 0: school enrollments can never be filled");

    // Schools grouped by catchment, catchments in ascending id order.
    std::map<int, std::vector<std::size_t>> by_catchment;
    for (std::size_t i = 0; i < schools.size(); ++i) {
        schools[i].realized_enrollment = 0;
        by_catchment[schools[i].catchment_id].push_back(i);
    }

    std::vector<Household> out;
    for (const auto& [catchment_id, members] : by_catchment) {
        RngStream rng = stream.child(catchment_label(catchment_id));
        long remaining = 0;
        for (std::size_t i : members) remaining += schools[i].target_enrollment;
        std::size_t cursor = 0;

        while (remaining > 0) {
            Household h;
            h.id = static_cast<int>(out.size()) + 1;
            h.catchment_id = catchment_id;
            h.has_children = true;
            const bool couple = sample_bernoulli(rng, config.prop_parent_couple);
            h.parent_type = couple ? ParentType::couple : ParentType::lone;
            const auto& child_probs = couple ? config.prop_children_couple : config.prop_children_lone;
            h.num_children = static_cast<int>(sample_categorical(rng, child_probs)) + 1;
            int elem = 0;
            for (int k = 0; k < h.num_children; ++k) elem += sample_bernoulli(rng, config.prop_elem_age) ? 1 : 0;

            int truncated = 0;
            for (int k = 0; k < elem; ++k) {
                if (remaining == 0) {
                    ++truncated;
                    continue;
                }
                // round-robin over under-filled schools
                while (schools[members[cursor]].realized_enrollment >= schools[members[cursor]].target_enrollment)
                    cursor = (cursor + 1) % members.size();
                School& s = schools[members[cursor]];
                ++s.realized_enrollment;
                h.child_schools.push_back(s.id);
                --remaining;
                cursor = (cursor + 1) % members.size();
            }
            h.num_children -= truncated;
            h.num_elem_children = elem - truncated;
            h.size = h.num_children + (couple ? 2 : 1);
            out.push_back(std::move(h));
        }
    }
    return out;
}

std::vector<Household> simulate_households_without_children(const std::vector<Household>& with_children,
                                                            const std::vector<Catchment>& catchments,
                                                            const PopulationConfig& config,
                                                            const RngStream& stream) {
    config.validate();
    if (with_children.empty()) throw InvalidParameter("with_children", "must be non-empty");
    if (config.prop_house_children == 0.0)
        throw InvalidParameter("prop_house_children", "must be > 0 to size childless households");

    std::map<int, long> counts;
    for (const auto& h : with_children) ++counts[h.catchment_id];
    std::map<int, const Catchment*> lookup;
    for (const auto& c : catchments) lookup[c.id] = &c;

    int next_id = 0;
    for (const auto& h : with_children) next_id = std::max(next_id, h.id);

    const double ratio = (1.0 - config.prop_house_children) / config.prop_house_children;
    std::vector<Household> out;
    for (const auto& [catchment_id, n_with] : counts) {
        auto found = lookup.find(catchment_id);
        if (found == lookup.end())
            throw SimulationError("household references unknown catchment " + std::to_string(catchment_id));
        RngStream rng = stream.child(catchment_label(catchment_id));
        const long n = std::lround(static_cast<double>(n_with) * ratio);
        for (long i = 0; i < n; ++i) {
            Household h;
            h.id = ++next_id;
            h.catchment_id = catchment_id;
            h.size = static_cast<int>(sample_categorical(rng, config.prop_house_size)) + 1;
            h.location = uniform_point(rng, found->second->bounds);
            out.push_back(std::move(h));
        }
    }
    return out;
}

PopulationFrame assemble_individuals(std::vector<Household> households, const std::vector<Catchment>& catchments,
                                     RngStream& stream) {
    std::map<int, Square> bounds;
    for (const auto& c : catchments) bounds[c.id] = c.bounds;

    PopulationFrame frame;
    for (auto& h : households) {
        if (!h.location) {
            auto it = bounds.find(h.catchment_id);
            if (it == bounds.end())
                throw SimulationError("household references unknown catchment " + std::to_string(h.catchment_id));
            h.location = uniform_point(stream, it->second);
        }
        auto add = [&](bool elem, std::optional<int> school) {
            Individual p;
            p.id = static_cast<int>(frame.individuals.size()) + 1;
            p.household_id = h.id;
            p.catchment_id = h.catchment_id;
            p.is_elem_child = elem;
            p.school_id = school;
            p.location = *h.location;
            frame.individuals.push_back(p);
        };
        if (h.has_children) {
            const int parents = h.parent_type == ParentType::couple ? 2 : 1;
            for (int k = 0; k < parents; ++k) add(false, std::nullopt);
            for (int school : h.child_schools) add(true, school);
            for (int k = h.num_elem_children; k < h.num_children; ++k) add(false, std::nullopt);
        } else {
            for (int k = 0; k < h.size; ++k) add(false, std::nullopt);
        }
    }
    frame.households = std::move(households);
    return frame;
}

SimulatedPopulation simulate_population(const PopulationSpec& spec, const RngStream& root) {
    spec.validate();
    SimulatedPopulation pop;
    RngStream catchment_rng = root.child("catchments");
    pop.catchments = simulate_catchments(spec.num_catchments, spec.catchment_side, spec.school_count, catchment_rng);
    RngStream enrollment_rng = root.child("enrollment");
    pop.schools = simulate_school_enrollments(pop.catchments, spec.enrollment, enrollment_rng);
    auto with_children = simulate_households_with_children(pop.schools, spec.households, root.child("with-children"));
    auto without_children = simulate_households_without_children(with_children, pop.catchments, spec.households,
                                                                 root.child("without-children"));
    std::vector<Household> all = std::move(with_children);
    all.insert(all.end(), std::make_move_iterator(without_children.begin()),
               std::make_move_iterator(without_children.end()));
    RngStream location_rng = root.child("locations");
    pop.frame = assemble_individuals(std::move(all), pop.catchments, location_rng);
    return pop;
}

}  // namespace sentinel
