#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "sentinel/error.hpp"
#include "sentinel/rng.hpp"

using namespace sentinel;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Kolmogorov-Smirnov statistic of `draws` against a continuous CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> draws, Cdf cdf) {
    std::sort(draws.begin(), draws.end());
    const double n = static_cast<double>(draws.size());
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double f = cdf(draws[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace

TEST_CASE("derived streams are reproducible and label-separated") {
    auto a = RngStream::derive(656, "epidemic/rep-1");
    auto b = RngStream::derive(656, "epidemic/rep-1");
    auto c = RngStream::derive(656, "epidemic/rep-2");
    auto d = RngStream::derive(657, "epidemic/rep-1");
    const auto first_c = c.next_u64();
    const auto first_d = d.next_u64();
    bool identical = true;
    std::uint64_t first_a = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        if (i == 0) first_a = x;
        identical = identical && x == b.next_u64();
    }
    CHECK(identical);
    CHECK(first_a != first_c);
    CHECK(first_a != first_d);
}

TEST_CASE("child streams equal streams derived from the joined label") {
    auto parent = RngStream::derive(656, "pop");
    auto via_child = parent.child("catchments");
    auto direct = RngStream::derive(656, "pop/catchments");
    CHECK(via_child.label() == "pop/catchments");
    for (int i = 0; i < 50; ++i) CHECK(via_child.next_u64() == direct.next_u64());

    // Sampling the parent first does not change the child.
    auto p2 = RngStream::derive(656, "pop");
    for (int i = 0; i < 10; ++i) p2.next_u64();
    auto c2 = p2.child("catchments");
    auto c3 = RngStream::derive(656, "pop/catchments");
    CHECK(c2.next_u64() == c3.next_u64());
}

TEST_CASE("a prefix replays exactly") {
    auto s = RngStream::derive(656, "pop/catchments");
    const auto draws = sample(DistributionSpec::normal(3, 1), 200, s);
    auto t = RngStream::derive(656, "pop/catchments");
    const auto prefix = sample(DistributionSpec::normal(3, 1), 50, t);
    CHECK(std::equal(prefix.begin(), prefix.end(), draws.begin()));
}

TEST_CASE("uniform01 stays in the open unit interval") {
    auto s = RngStream::derive(1, "u");
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform01();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
}

TEST_CASE("degenerate distributions") {
    auto s = RngStream::derive(656, "degenerate");
    CHECK(sample(DistributionSpec::binomial(10, 0.0), 5, s) == std::vector<double>(5, 0.0));
    CHECK(sample(DistributionSpec::categorical({1, 0, 0}), 3, s) == std::vector<double>(3, 0.0));
    CHECK(sample(DistributionSpec::normal(5, 0), 4, s) == std::vector<double>(4, 5.0));
    CHECK(sample(DistributionSpec::binomial(7, 1.0), 3, s) == std::vector<double>(3, 7.0));
    CHECK(sample(DistributionSpec::categorical({0, 0, 1}), 2, s) == std::vector<double>(2, 2.0));
}

TEST_CASE("exponential with rate 1/7 has sample mean near 7") {
    auto s = RngStream::derive(656, "exp");
    const auto draws = sample(DistributionSpec::exponential(1.0 / 7.0), 100000, s);
    const double m = mean_of(draws);
    CHECK(m >= 6.9);
    CHECK(m <= 7.1);
}

TEST_CASE("empirical means lie within 3 standard errors for every family") {
    const std::vector<DistributionSpec> specs{
        DistributionSpec::normal(3, 1),        DistributionSpec::normal(-2, 0.1),
        DistributionSpec::gamma(7.86, 0.032),  DistributionSpec::gamma(0.5, 2.0),
        DistributionSpec::gamma(1.0, 1.0),     DistributionSpec::poisson(3.2),
        DistributionSpec::poisson(45.0),       DistributionSpec::poisson(2000.0),
        DistributionSpec::exponential(0.25),   DistributionSpec::binomial(20, 0.3),
        DistributionSpec::binomial(5000, 0.02), DistributionSpec::binomial(400, 0.8),
        DistributionSpec::binomial(1000000, 0.4), DistributionSpec::categorical({0.23, 0.35, 0.17, 0.16, 0.09}),
        DistributionSpec::uniform(-1, 3)};
    constexpr std::size_t n = 100000;
    int index = 0;
    for (const auto& spec : specs) {
        auto s = RngStream::derive(656, "moments-" + std::to_string(index++));
        const auto draws = sample(spec, n, s);
        const double se = std::sqrt(spec.variance() / static_cast<double>(n));
        INFO(family_name(spec.family), " case ", index);
        CHECK(std::abs(mean_of(draws) - spec.mean()) <= 3.0 * se);
    }
}

TEST_CASE("samplers stay inside their support") {
    auto s = RngStream::derive(656, "support");
    for (double shape : {0.05, 0.5, 1.0, 7.86}) {
        const auto g = sample(DistributionSpec::gamma(shape, 3.0), 20000, s);
        CHECK(std::all_of(g.begin(), g.end(), [](double x) { return x > 0.0 && std::isfinite(x); }));
    }
    for (auto [n, p] : {std::pair{10L, 0.5}, std::pair{37L, 0.03}, std::pair{100000L, 0.999}, std::pair{3L, 0.99}}) {
        const auto b = sample(DistributionSpec::binomial(n, p), 20000, s);
        CHECK(std::all_of(b.begin(), b.end(), [n = n](double x) { return x >= 0 && x <= n && x == std::floor(x); }));
    }
    const auto e = sample(DistributionSpec::exponential(2.0), 20000, s);
    CHECK(std::all_of(e.begin(), e.end(), [](double x) { return x >= 0.0; }));
    const auto pz = sample(DistributionSpec::poisson(700.0), 20000, s);
    CHECK(std::all_of(pz.begin(), pz.end(), [](double x) { return x >= 0 && x == std::floor(x); }));
    const auto u = sample(DistributionSpec::uniform(2, 5), 20000, s);
    CHECK(std::all_of(u.begin(), u.end(), [](double x) { return x >= 2 && x <= 5; }));
    for (std::uint64_t bound : {1ULL, 2ULL, 7ULL, 1000003ULL}) {
        bool ok = true;
        for (int i = 0; i < 5000; ++i) ok = ok && sample_index(s, bound) < bound;
        CHECK(ok);
    }
}

TEST_CASE("continuous samplers agree with reference CDFs (KS, alpha = 0.001)") {
    constexpr std::size_t n = 100000;
    const double critical = 1.95 / std::sqrt(static_cast<double>(n));
    auto s = RngStream::derive(656, "ks");

    const auto g = sample(DistributionSpec::gamma(7.86, 0.032), n, s);
    const boost::math::gamma_distribution<double> gd(7.86, 1.0 / 0.032);
    CHECK(ks_statistic(g, [&](double x) { return boost::math::cdf(gd, x); }) < critical);

    const auto g_small = sample(DistributionSpec::gamma(0.4, 1.0), n, s);
    const boost::math::gamma_distribution<double> gs(0.4, 1.0);
    CHECK(ks_statistic(g_small, [&](double x) { return boost::math::cdf(gs, x); }) < critical);

    const auto z = sample(DistributionSpec::normal(3, 1), n, s);
    const boost::math::normal_distribution<double> nd(3, 1);
    CHECK(ks_statistic(z, [&](double x) { return boost::math::cdf(nd, x); }) < critical);
}

TEST_CASE("binomial and poisson frequencies match their pmf (chi-square)") {
    constexpr int n = 200000;
    auto check = [&](auto draw, auto pmf, long lo, long hi) {
        std::map<long, double> counts;
        for (int i = 0; i < n; ++i) counts[static_cast<long>(draw())] += 1.0;
        // cells with expected count < 20 (and anything outside [lo, hi]) are pooled
        double chi = 0.0, pooled_obs = n, pooled_exp = n;
        int cells = 0;
        for (long k = lo; k <= hi; ++k) {
            const double e = n * pmf(k);
            if (e < 20.0) continue;
            const double o = counts[k];
            chi += (o - e) * (o - e) / e;
            pooled_obs -= o;
            pooled_exp -= e;
            ++cells;
        }
        if (pooled_exp > 1.0) {
            chi += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
            ++cells;
        }
        // chi-square critical value at alpha = 0.001 (Wilson-Hilferty)
        const double df = cells - 1;
        const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + 3.09 * std::sqrt(2.0 / (9.0 * df)), 3.0);
        CHECK(chi < crit);
    };

    auto s = RngStream::derive(656, "chisq");
    for (auto [bn, bp] : {std::pair{30L, 0.2}, std::pair{500L, 0.05}, std::pair{2000L, 0.3}}) {
        const boost::math::binomial_distribution<double> bd(static_cast<double>(bn), bp);
        check([&] { return sample_binomial(s, bn, bp); }, [&](long k) { return boost::math::pdf(bd, static_cast<double>(k)); }, 0, bn);
    }
    for (double mu : {4.0, 60.0}) {
        const boost::math::poisson_distribution<double> pd(mu);
        check([&] { return sample_poisson(s, mu); }, [&](long k) { return boost::math::pdf(pd, static_cast<double>(k)); }, 0,
              static_cast<long>(mu * 4 + 40));
    }
}

TEST_CASE("binomial inversion is the exact quantile and monotone") {
    const boost::math::binomial_distribution<double> bd(250, 0.3);
    for (double u : {1e-9, 0.01, 0.2, 0.5, 0.77, 0.999, 1 - 1e-12}) {
        const auto k = binomial_inversion(250, 0.3, u);
        CHECK(boost::math::cdf(bd, static_cast<double>(k)) >= u);
        if (k > 0) CHECK(boost::math::cdf(bd, static_cast<double>(k - 1)) < u);
    }
    auto s = RngStream::derive(9, "inv");
    for (int i = 0; i < 500; ++i) {
        const double u = s.uniform01();
        const double p1 = 0.5 * s.uniform01();
        const double p2 = p1 + 0.5 * s.uniform01();
        const auto n = static_cast<std::int64_t>(sample_index(s, 5000));
        CHECK(binomial_inversion(n, p1, u) <= binomial_inversion(n, p2, u));
        CHECK(binomial_inversion(n, p1, u) <= binomial_inversion(n + 10, p1, u));
    }
    CHECK(binomial_inversion(0, 0.5, 0.3) == 0);
    CHECK(binomial_inversion(10, 1.0, 0.3) == 10);
}

TEST_CASE("invalid parameters name the offending field") {
    auto field_of = [](const DistributionSpec& spec) {
        try {
            spec.validate();
        } catch (const InvalidParameter& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    CHECK(field_of(DistributionSpec::normal(0, -1)) == "sd");
    CHECK(field_of(DistributionSpec::gamma(0, 1)) == "shape");
    CHECK(field_of(DistributionSpec::gamma(1, -2)) == "rate");
    CHECK(field_of(DistributionSpec::exponential(0)) == "rate");
    CHECK(field_of(DistributionSpec::binomial(10, 1.5)) == "p");
    CHECK(field_of(DistributionSpec::categorical({0.5, 0.6})) == "probs");
    CHECK(field_of(DistributionSpec::categorical({1.2, -0.2})) == "probs");
    CHECK(field_of(DistributionSpec::uniform(3, 1)) == "hi");
    CHECK(field_of(DistributionSpec::poisson(-1)) == "mean");
    CHECK(field_of(DistributionSpec::categorical({0.3, 0.7})) == "<none>");
    CHECK_THROWS_AS(parse_family("cauchy"), InvalidParameter);
    auto s = RngStream::derive(1, "x");
    CHECK_THROWS_AS(sample(DistributionSpec::gamma(-1, 1), 3, s), InvalidParameter);
}

TEST_CASE("family names round-trip") {
    for (Family f : {Family::normal, Family::gamma, Family::poisson, Family::exponential, Family::binomial,
                     Family::categorical, Family::uniform})
        CHECK(parse_family(family_name(f)) == f);
}
