#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sentinel {

/// A deterministic random stream identified by (master seed, label path).
///
/// Streams are derived, never advanced into one another: `derive(656, "epidemic/rep-3")`
/// yields the same sequence no matter which other streams were created or sampled
/// before, so replicate- and cell-level work can be scheduled on any thread.
/// The engine is xoshiro256** seeded through SplitMix64.
class RngStream {
public:
    using result_type = std::uint64_t;

    static RngStream derive(std::uint64_t master_seed, std::string_view label);

    /// Stream for `label() + "/" + sublabel` under the same master seed.
    RngStream child(std::string_view sublabel) const;

    std::uint64_t master_seed() const { return master_seed_; }
    const std::string& label() const { return label_; }

    std::uint64_t next_u64();
    result_type operator()() { return next_u64(); }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform01();

private:
    RngStream(std::uint64_t master_seed, std::string label);

    std::uint64_t master_seed_;
    std::string label_;
    std::array<std::uint64_t, 4> state_{};
};

// Scalar samplers. Each advances `rng` and never leaves the analytic support.
double sample_uniform(RngStream& rng, double lo, double hi);
double sample_normal(RngStream& rng, double mean, double sd);
double sample_exponential(RngStream& rng, double rate);
double sample_gamma(RngStream& rng, double shape, double rate);
std::int64_t sample_poisson(RngStream& rng, double mean);
std::int64_t sample_binomial(RngStream& rng, std::int64_t n, double p);
bool sample_bernoulli(RngStream& rng, double p);
/// Uniform integer in [0, n), n > 0.
std::uint64_t sample_index(RngStream& rng, std::uint64_t n);
/// 0-based category index.
std::size_t sample_categorical(RngStream& rng, const std::vector<double>& probs);

/// Binomial quantile at `u`: the smallest k with P(X <= k) >= u. Non-decreasing
/// in u, n and p, which makes it suitable for common-random-number coupling.
std::int64_t binomial_inversion(std::int64_t n, double p, double u);

enum class Family { normal, gamma, poisson, exponential, binomial, categorical, uniform };

const char* family_name(Family f);
Family parse_family(std::string_view name);

/// A distribution family plus named parameters.
///
/// Parameter names: normal {mean, sd}; gamma {shape, rate}; poisson {mean};
/// exponential {rate}; binomial {n, p}; categorical {probs}; uniform {lo, hi}.
struct DistributionSpec {
    Family family = Family::normal;
    std::map<std::string, double> params;
    std::vector<double> probs;  // categorical only

    static DistributionSpec normal(double mean, double sd);
    static DistributionSpec gamma(double shape, double rate);
    static DistributionSpec poisson(double mean);
    static DistributionSpec exponential(double rate);
    static DistributionSpec binomial(std::int64_t n, double p);
    static DistributionSpec categorical(std::vector<double> probs);
    static DistributionSpec uniform(double lo, double hi);

    double param(const std::string& name) const;

    /// Throws InvalidParameter naming the first offending field.
    void validate() const;

    /// Analytic mean (categorical: mean 0-based index).
    double mean() const;
    double variance() const;
};

/// n i.i.d. draws. Discrete families return integer-valued doubles.
std::vector<double> sample(const DistributionSpec& spec, std::size_t n, RngStream& rng);

/// Validates a probability vector: non-negative entries summing to 1 within 1e-9.
void validate_probability_vector(const std::vector<double>& probs, const std::string& field);

}  // namespace sentinel
