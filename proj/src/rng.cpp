#include "sentinel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/binomial.hpp>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::string label)
    : master_seed_(master_seed), label_(std::move(label)) {
    std::uint64_t sm = master_seed_;
    std::uint64_t seed_mix = splitmix64(sm);
    std::uint64_t x = seed_mix ^ rotl(fnv1a64(label_), 17) ^ 0x6a09e667f3bcc909ULL;
    for (auto& word : state_) word = splitmix64(x);
    // xoshiro must not start from the all-zero state
    if (std::all_of(state_.begin(), state_.end(), [](std::uint64_t w) { return w == 0; }))
        state_[0] = 1;
}

RngStream RngStream::derive(std::uint64_t master_seed, std::string_view label) {
    return RngStream(master_seed, std::string(label));
}

RngStream RngStream::child(std::string_view sublabel) const {
    std::string path = label_;
    if (!path.empty()) path += '/';
    path += sublabel;
    return RngStream(master_seed_, std::move(path));
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double sample_uniform(RngStream& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.uniform01();
}

double sample_normal(RngStream& rng, double mean, double sd) {
    if (sd == 0.0) return mean;
    // Marsaglia polar method; the second variate is discarded so each call
    // consumes a self-contained block of the stream.
    double u, v, s;
    do {
        u = 2.0 * rng.uniform01() - 1.0;
        v = 2.0 * rng.uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return mean + sd * u * std::sqrt(-2.0 * std::log(s) / s);
}

double sample_exponential(RngStream& rng, double rate) {
    return -std::log(rng.uniform01()) / rate;
}

namespace {

double gamma_unit_rate(RngStream& rng, double shape) {
    if (shape < 1.0) {
        double g = gamma_unit_rate(rng, shape + 1.0);
        return g * std::pow(rng.uniform01(), 1.0 / shape);
    }
    // Marsaglia & Tsang (2000)
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = sample_normal(rng, 0.0, 1.0);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::int64_t poisson_inversion(RngStream& rng, double mean) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double prod = rng.uniform01();
    while (prod > limit) {
        ++k;
        prod *= rng.uniform01();
    }
    return k;
}

// Hörmann (1993) transformed rejection with squeeze, mean >= 10.
std::int64_t poisson_ptrs(RngStream& rng, double lam) {
    const double slam = std::sqrt(lam);
    const double loglam = std::log(lam);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform01() - 0.5;
        const double v = rng.uniform01();
        const double us = 0.5 - std::fabs(u);
        const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + lam + 0.43));
        if (us >= 0.07 && v <= vr) return k;
        if (k < 0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -lam + static_cast<double>(k) * loglam - std::lgamma(static_cast<double>(k) + 1.0))
            return k;
    }
}

// Sequential inversion from zero; used when n*p is small.
std::int64_t binomial_small_mean(RngStream& rng, std::int64_t n, double p) {
    const double q = 1.0 - p;
    const double s = p / q;
    const double a = static_cast<double>(n + 1) * s;
    double r = std::pow(q, static_cast<double>(n));
    double u = rng.uniform01();
    std::int64_t x = 0;
    while (u > r) {
        u -= r;
        ++x;
        if (x > n) {
            // round-off ran past the support; restart with a fresh uniform
            x = 0;
            r = std::pow(q, static_cast<double>(n));
            u = rng.uniform01();
            continue;
        }
        r *= a / static_cast<double>(x) - s;
    }
    return x;
}

// Hörmann (1993) BTRS, valid for n*p >= 10 with p <= 0.5.
std::int64_t binomial_btrs(RngStream& rng, std::int64_t n, double p) {
    const double nd = static_cast<double>(n);
    const double q = 1.0 - p;
    const double spq = std::sqrt(nd * p * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double vr = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(p / q);
    const double m = std::floor((nd + 1.0) * p);
    const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
    for (;;) {
        const double u = rng.uniform01() - 0.5;
        double v = rng.uniform01();
        const double us = 0.5 - std::fabs(u);
        const double kd = std::floor((2.0 * a / us + b) * u + c);
        if (kd < 0.0 || kd > nd) continue;
        if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kd);
        v = std::log(v * alpha / (a / (us * us) + b));
        if (v <= h - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) + (kd - m) * lpq)
            return static_cast<std::int64_t>(kd);
    }
}

}  // namespace

double sample_gamma(RngStream& rng, double shape, double rate) {
    return gamma_unit_rate(rng, shape) / rate;
}

std::int64_t sample_poisson(RngStream& rng, double mean) {
    if (mean <= 0.0) return 0;
    return mean < 10.0 ? poisson_inversion(rng, mean) : poisson_ptrs(rng, mean);
}

std::int64_t sample_binomial(RngStream& rng, std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - sample_binomial(rng, n, 1.0 - p);
    if (static_cast<double>(n) * p < 10.0) return binomial_small_mean(rng, n, p);
    return binomial_btrs(rng, n, p);
}

bool sample_bernoulli(RngStream& rng, double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return rng.uniform01() < p;
}

std::uint64_t sample_index(RngStream& rng, std::uint64_t n) {
    // Lemire's nearly-divisionless bounded integer
    unsigned __int128 m = static_cast<unsigned __int128>(rng.next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(rng.next_u64()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::size_t sample_categorical(RngStream& rng, const std::vector<double>& probs) {
    const double u = rng.uniform01();
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        cum += probs[i];
        if (u < cum) return i;
    }
    return last_positive;
}

std::int64_t binomial_inversion(std::int64_t n, double p, double u) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    namespace bm = boost::math;
    const bm::binomial_distribution<double> dist(static_cast<double>(n), p);
    const double nd = static_cast<double>(n);
    const double mean = nd * p;
    const double sd = std::sqrt(nd * p * (1.0 - p));
    // Normal-approximation starting point, then walk to the exact quantile.
    const double z = std::sqrt(2.0) * bm::erf_inv(2.0 * u - 1.0);
    auto k = static_cast<std::int64_t>(std::floor(mean + z * sd));
    k = std::clamp<std::int64_t>(k, 0, n);
    while (k > 0 && bm::cdf(dist, static_cast<double>(k - 1)) >= u) --k;
    while (k < n && bm::cdf(dist, static_cast<double>(k)) < u) ++k;
    return k;
}

const char* family_name(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::gamma: return "gamma";
        case Family::poisson: return "poisson";
        case Family::exponential: return "exponential";
        case Family::binomial: return "binomial";
        case Family::categorical: return "categorical";
        case Family::uniform: return "uniform";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::normal, Family::gamma, Family::poisson, Family::exponential,
                     Family::binomial, Family::categorical, Family::uniform}) {
        if (name == family_name(f)) return f;
    }
    throw InvalidParameter("family", "unknown distribution family '" + std::string(name) + "'");
}

DistributionSpec DistributionSpec::normal(double mean, double sd) {
    return {Family::normal, {{"mean", mean}, {"sd", sd}}, {}};
}
DistributionSpec DistributionSpec::gamma(double shape, double rate) {
    return {Family::gamma, {{"shape", shape}, {"rate", rate}}, {}};
}
DistributionSpec DistributionSpec::poisson(double mean) { return {Family::poisson, {{"mean", mean}}, {}}; }
DistributionSpec DistributionSpec::exponential(double rate) {
    return {Family::exponential, {{"rate", rate}}, {}};
}
DistributionSpec DistributionSpec::binomial(std::int64_t n, double p) {
    return {Family::binomial, {{"n", static_cast<double>(n)}, {"p", p}}, {}};
}
DistributionSpec DistributionSpec::categorical(std::vector<double> probs) {
    return {Family::categorical, {}, std::move(probs)};
}
DistributionSpec DistributionSpec::uniform(double lo, double hi) {
    return {Family::uniform, {{"lo", lo}, {"hi", hi}}, {}};
}

double DistributionSpec::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
        throw InvalidParameter(name, std::string("missing parameter for ") + family_name(family));
    return it->second;
}

void validate_probability_vector(const std::vector<double>& probs, const std::string& field) {
    if (probs.empty()) throw InvalidParameter(field, "probability vector is empty");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw InvalidParameter(field, "probabilities must be finite and non-negative");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw InvalidParameter(field, "probabilities must sum to 1");
}

void DistributionSpec::validate() const {
    auto finite = [&](const char* name) {
        double v = param(name);
        if (!std::isfinite(v)) throw InvalidParameter(name, "must be finite");
        return v;
    };
    switch (family) {
        case Family::normal:
            finite("mean");
            if (!(finite("sd") >= 0.0)) throw InvalidParameter("sd", "must be >= 0");
            break;
        case Family::gamma:
            if (!(finite("shape") > 0.0)) throw InvalidParameter("shape", "must be > 0");
            if (!(finite("rate") > 0.0)) throw InvalidParameter("rate", "must be > 0");
            break;
        case Family::poisson:
            if (!(finite("mean") >= 0.0)) throw InvalidParameter("mean", "must be >= 0");
            break;
        case Family::exponential:
            if (!(finite("rate") > 0.0)) throw InvalidParameter("rate", "must be > 0");
            break;
        case Family::binomial: {
            double n = finite("n");
            if (n < 0.0 || n != std::floor(n)) throw InvalidParameter("n", "must be a non-negative integer");
            double p = finite("p");
            if (p < 0.0 || p > 1.0) throw InvalidParameter("p", "must lie in [0, 1]");
            break;
        }
        case Family::categorical: validate_probability_vector(probs, "probs"); break;
        case Family::uniform:
            if (!(finite("hi") >= finite("lo"))) throw InvalidParameter("hi", "must be >= lo");
            break;
    }
}

double DistributionSpec::mean() const {
    switch (family) {
        case Family::normal: return param("mean");
        case Family::gamma: return param("shape") / param("rate");
        case Family::poisson: return param("mean");
        case Family::exponential: return 1.0 / param("rate");
        case Family::binomial: return param("n") * param("p");
        case Family::categorical: {
            double m = 0.0;
            for (std::size_t i = 0; i < probs.size(); ++i) m += static_cast<double>(i) * probs[i];
            return m;
        }
        case Family::uniform: return 0.5 * (param("lo") + param("hi"));
    }
    return 0.0;
}

double DistributionSpec::variance() const {
    switch (family) {
        case Family::normal: return param("sd") * param("sd");
        case Family::gamma: return param("shape") / (param("rate") * param("rate"));
        case Family::poisson: return param("mean");
        case Family::exponential: return 1.0 / (param("rate") * param("rate"));
        case Family::binomial: return param("n") * param("p") * (1.0 - param("p"));
        case Family::categorical: {
            double m = mean(), v = 0.0;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                double d = static_cast<double>(i) - m;
                v += d * d * probs[i];
            }
            return v;
        }
        case Family::uniform: {
            double w = param("hi") - param("lo");
            return w * w / 12.0;
        }
    }
    return 0.0;
}

std::vector<double> sample(const DistributionSpec& spec, std::size_t n, RngStream& rng) {
    spec.validate();
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (spec.family) {
            case Family::normal:
                out.push_back(sample_normal(rng, spec.param("mean"), spec.param("sd")));
                break;
            case Family::gamma:
                out.push_back(sample_gamma(rng, spec.param("shape"), spec.param("rate")));
                break;
            case Family::poisson:
                out.push_back(static_cast<double>(sample_poisson(rng, spec.param("mean"))));
                break;
            case Family::exponential: out.push_back(sample_exponential(rng, spec.param("rate"))); break;
            case Family::binomial:
                out.push_back(static_cast<double>(
                    sample_binomial(rng, static_cast<std::int64_t>(spec.param("n")), spec.param("p"))));
                break;
            case Family::categorical:
                out.push_back(static_cast<double>(sample_categorical(rng, spec.probs)));
                break;
            case Family::uniform:
                out.push_back(sample_uniform(rng, spec.param("lo"), spec.param("hi")));
                break;
        }
    }
    return out;
}

}  // namespace sentinel
