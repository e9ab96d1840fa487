#pragma once

#include <optional>
#include <vector>

#include "sentinel/rng.hpp"

namespace sentinel {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned square [x0, x0 + side) x [y0, y0 + side).
struct Square {
    double x0 = 0.0;
    double y0 = 0.0;
    double side = 0.0;

    bool contains(Point p) const {
        return p.x >= x0 && p.x < x0 + side && p.y >= y0 && p.y < y0 + side;
    }
};

struct Catchment {
    int id = 0;
    int num_schools = 1;
    Square bounds;
};

struct School {
    int id = 0;
    int catchment_id = 0;
    int target_enrollment = 1;
    int realized_enrollment = 0;
};

enum class ParentType { couple, lone };

struct Household {
    int id = 0;
    int catchment_id = 0;
    bool has_children = false;
    std::optional<ParentType> parent_type;
    int num_children = 0;
    int num_elem_children = 0;
    int size = 1;
    std::optional<Point> location;
    /// School of each elementary-aged child, length num_elem_children.
    std::vector<int> child_schools;
};

struct Individual {
    int id = 0;
    int household_id = 0;
    int catchment_id = 0;
    bool is_elem_child = false;
    std::optional<int> school_id;
    Point location;
};

struct PopulationFrame {
    std::vector<Household> households;
    std::vector<Individual> individuals;
};

/// Demographic proportions for household generation. Category vectors are
/// indexed by count: prop_children_* over {1, 2, 3}, prop_house_size over {1..5}.
struct PopulationConfig {
    double prop_parent_couple = 0.77;
    std::vector<double> prop_children_couple{0.36, 0.43, 0.21};
    std::vector<double> prop_children_lone{0.58, 0.31, 0.11};
    double prop_elem_age = 0.53;
    std::vector<double> prop_house_size{0.23, 0.35, 0.17, 0.16, 0.09};
    double prop_house_children = 0.43;

    void validate() const;
};

/// n catchments of side x side laid out row-major on a ceil(sqrt(n))-column grid.
/// School counts are max(1, round(draw)).
std::vector<Catchment> simulate_catchments(int n, double side, const DistributionSpec& school_count_dist,
                                           RngStream& stream);

/// One school per (catchment, slot), ids 1.. in catchment order.
std::vector<School> simulate_school_enrollments(const std::vector<Catchment>& catchments,
                                                const DistributionSpec& enroll_dist, RngStream& stream);

/// Generates households with children catchment by catchment until every school
/// reaches its target enrollment. `schools[i].realized_enrollment` is filled in.
/// Each catchment uses the derived stream `stream.child("catchment-<id>")`.
std::vector<Household> simulate_households_with_children(std::vector<School>& schools,
                                                         const PopulationConfig& config,
                                                         const RngStream& stream);

/// Childless households, allocated to catchments in proportion to the
/// with-children counts and placed uniformly inside catchment bounds.
std::vector<Household> simulate_households_without_children(const std::vector<Household>& with_children,
                                                            const std::vector<Catchment>& catchments,
                                                            const PopulationConfig& config,
                                                            const RngStream& stream);

/// Expands households into individuals. Households lacking a location are
/// placed uniformly in their catchment first.
PopulationFrame assemble_individuals(std::vector<Household> households, const std::vector<Catchment>& catchments,
                                     RngStream& stream);

/// Inputs of the full hierarchical generator.
struct PopulationSpec {
    int num_catchments = 16;
    double catchment_side = 80.0;
    DistributionSpec school_count = DistributionSpec::normal(3.0, 1.0);
    DistributionSpec enrollment = DistributionSpec::gamma(7.86, 0.032);
    PopulationConfig households;

    void validate() const;
};

struct SimulatedPopulation {
    std::vector<Catchment> catchments;
    std::vector<School> schools;
    PopulationFrame frame;
};

/// catchments -> schools -> households -> individuals, each stage on its own
/// stream below `root` ("catchments", "enrollment", "with-children", ...).
SimulatedPopulation simulate_population(const PopulationSpec& spec, const RngStream& root);

}  // namespace sentinel
