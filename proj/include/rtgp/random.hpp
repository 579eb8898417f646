#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace rtgp {

enum class Link : std::uint8_t { probit = 0, logit = 1 };

Link parse_link(const std::string& name);
std::string to_string(Link link);

/// Pr(Y = 1) for a linear predictor.
double link_inverse(Link link, double mu);
/// log Pr(Y = y | mu) for y in {0, 1}.
double bernoulli_loglik(Link link, int y, double mu);

// Standard normal helpers, accurate far into both tails.
double norm_cdf(double x);
double norm_sf(double x);
double log_norm_cdf(double x);
double log_norm_sf(double x);
double norm_quantile(double u);
/// log(Phi(b) - Phi(a)) for a <= b; -inf when the interval is empty.
double log_norm_interval(double a, double b);

/// Stateful generator. One instance per chain; never shared across threads.
class Random {
public:
    explicit Random(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform();
    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
    double exponential() { return -std::log(uniform()); }
    /// Gamma with the given shape and rate.
    double gamma(double shape, double rate);

    /// N(mean, sd^2) restricted to (lo, hi); infinite bounds allowed.
    double truncated_normal(double mean, double sd, double lo, double hi);

    /// Polya-Gamma PG(1, z) variate.
    double polya_gamma(double z);

    std::mt19937_64& engine() { return engine_; }

private:
    double standard_truncated(double a, double b);

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Deterministic 64-bit seed derived from a list of integers.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

/// Outcome of the two-region draw for a relaxed field value.
struct RelaxedDraw {
    double value = 0.0;
    bool active = false;  ///< |value| > omega
};

/// Draws u ~ N(mean, sd^2) jointly with its region: the active region
/// {|u| > omega} is weighted by exp(loglik_active), the inactive region
/// {|u| <= omega} by exp(loglik_inactive). Falls back to prior region
/// probabilities when the weights are not finite.
RelaxedDraw sample_relaxed(Random& rng, double mean, double sd, double omega,
                           double loglik_active, double loglik_inactive);

/// Prior probability that N(mean, sd^2) lands in the active region.
double active_region_probability(double mean, double sd, double omega);

}  // namespace rtgp
