#include "rtgp/random.hpp"

#include "rtgp/error.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rtgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailSwitch = 6.0;
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double log_add(double a, double b)
{
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log Q(x) for large positive x, where erfc underflows.
double log_sf_asymptotic(double x)
{
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(x) - kLogSqrt2Pi + std::log(series);
}

}  // namespace

Link parse_link(const std::string& name)
{
    if (name == "probit") return Link::probit;
    if (name == "logit") return Link::logit;
    throw InvalidInput("unknown link '" + name + "' (expected probit or logit)");
}

std::string to_string(Link link)
{
    return link == Link::probit ? "probit" : "logit";
}

double link_inverse(Link link, double mu)
{
    if (link == Link::probit) {
        return norm_cdf(mu);
    }
    return mu >= 0 ? 1.0 / (1.0 + std::exp(-mu)) : std::exp(mu) / (1.0 + std::exp(mu));
}

double bernoulli_loglik(Link link, int y, double mu)
{
    const double signed_mu = y == 1 ? mu : -mu;
    if (link == Link::probit) {
        return log_norm_cdf(signed_mu);
    }
    // log sigmoid
    return signed_mu >= 0 ? -std::log1p(std::exp(-signed_mu)) : signed_mu - std::log1p(std::exp(signed_mu));
}

double norm_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double norm_sf(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double log_norm_sf(double x)
{
    if (x == kInf) return -kInf;
    if (x == -kInf) return 0.0;
    if (x > 37.0) {
        return log_sf_asymptotic(x);
    }
    if (x < -5.0) {
        return std::log1p(-norm_cdf(x));
    }
    return std::log(norm_sf(x));
}

double log_norm_cdf(double x)
{
    return log_norm_sf(-x);
}

double norm_quantile(double u)
{
    if (!(u > 0.0 && u < 1.0)) {
        if (u == 0.0) return -kInf;
        if (u == 1.0) return kInf;
        throw InvalidInput("norm_quantile: probability outside [0, 1]");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double log_norm_interval(double a, double b)
{
    if (!(a < b)) {
        return -kInf;
    }
    if (a >= 0.0) {
        // Q(a) - Q(b), both upper tails
        const double la = log_norm_sf(a);
        const double lb = log_norm_sf(b);
        return la + std::log1p(-std::exp(lb - la));
    }
    if (b <= 0.0) {
        const double la = log_norm_cdf(a);
        const double lb = log_norm_cdf(b);
        return lb + std::log1p(-std::exp(la - lb));
    }
    // Interval straddles zero: mass >= min(Phi(b)-1/2, 1/2-Phi(a)) is well conditioned.
    return std::log(1.0 - norm_sf(b) - norm_cdf(a));
}

double Random::uniform()
{
    // 53 random bits centred in their bin: never 0 or 1.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Random::gamma(double shape, double rate)
{
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw InvalidInput("gamma: shape and rate must be positive");
    }
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
}

double Random::truncated_normal(double mean, double sd, double lo, double hi)
{
    if (!(sd > 0.0)) {
        throw InvalidInput("truncated_normal: sd must be positive");
    }
    if (!(lo < hi)) {
        throw InvalidInput("truncated_normal: empty interval");
    }
    const double a = (lo - mean) / sd;
    const double b = (hi - mean) / sd;
    return mean + sd * standard_truncated(a, b);
}

double Random::standard_truncated(double a, double b)
{
    if (b <= 0.0) {
        return -standard_truncated(-b, -a);
    }
    if (b - a < 1e-9) {
        return a + uniform() * (b - a);
    }
    const double U = uniform();
    if (a < 0.0) {
        // Straddles or reaches below zero: plain inverse CDF is well conditioned.
        const double pa = norm_cdf(a);
        const double pb = norm_cdf(b);
        const double x = norm_quantile(pa + U * (pb - pa));
        return std::clamp(x, a, b);
    }
    if (a <= kTailSwitch) {
        const double qa = norm_sf(a);
        const double qb = norm_sf(b);
        const double x = -norm_quantile(qb + U * (qa - qb));
        return std::clamp(x, a, b);
    }
    // Far upper tail: invert log Q by Newton from the exponential-tail guess.
    const double lqa = log_norm_sf(a);
    const double lqb = log_norm_sf(b);
    const double target = lqa + std::log1p(-U * (1.0 - std::exp(lqb - lqa)));
    double x = std::sqrt(a * a - 2.0 * (target - lqa));
    for (int it = 0; it < 50; ++it) {
        const double f = log_norm_sf(x) - target;
        // d/dx log Q(x) = -phi(x) / Q(x)
        const double slope = -std::exp(-0.5 * x * x - kLogSqrt2Pi - log_norm_sf(x));
        const double step = f / slope;
        x -= step;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x))) {
            break;
        }
    }
    return std::clamp(x, a, b);
}

namespace {

constexpr double kPgTrunc = 0.64;

// Alternating-series coefficient of the Jacobi density.
double pg_coef(int n, double x)
{
    const double k = (n + 0.5) * std::numbers::pi;
    if (x > kPgTrunc) {
        return k * std::exp(-0.5 * k * k * x);
    }
    if (x > 0.0) {
        const double expnt = -1.5 * (std::log(0.5 * std::numbers::pi) + std::log(x)) + std::log(k) -
                             2.0 * (n + 0.5) * (n + 0.5) / x;
        return std::exp(expnt);
    }
    return 0.0;
}

double pg_mass_texpon(double z)
{
    const double t = kPgTrunc;
    const double fz = 0.125 * std::numbers::pi * std::numbers::pi + 0.5 * z * z;
    const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
    const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
    const double x0 = std::log(fz) + fz * t;
    const double xb = x0 - z + log_norm_cdf(b);
    const double xa = x0 + z + log_norm_cdf(a);
    const double qdivp = 4.0 / std::numbers::pi * (std::exp(xb) + std::exp(xa));
    return 1.0 / (1.0 + qdivp);
}

}  // namespace

double Random::polya_gamma(double z)
{
    // Devroye-type sampler for J*(1, z/2); PG(1, z) = J*(1, z/2) / 4.
    z = 0.5 * std::abs(z);
    const double fz = 0.125 * std::numbers::pi * std::numbers::pi + 0.5 * z * z;
    const double t = kPgTrunc;
    for (;;) {
        double X = 0.0;
        if (uniform() < pg_mass_texpon(z)) {
            X = t + exponential() / fz;
        } else if (1.0 / t > z) {
            // Truncated inverse-Gaussian with mean >= t: inverse chi-square proposal.
            double alpha = 0.0;
            while (uniform() > alpha) {
                double e1 = exponential();
                double e2 = exponential();
                while (e1 * e1 > 2.0 * e2 / t) {
                    e1 = exponential();
                    e2 = exponential();
                }
                X = 1.0 + e1 * t;
                X = t / (X * X);
                alpha = std::exp(-0.5 * z * z * X);
            }
        } else {
            const double mu = 1.0 / z;
            X = t + 1.0;
            while (X > t) {
                double y = normal();
                y *= y;
                const double half_mu = 0.5 * mu;
                const double mu_y = mu * y;
                X = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
                if (uniform() > mu / (mu + X)) {
                    X = mu * mu / X;
                }
            }
        }

        double S = pg_coef(0, X);
        const double Y = uniform() * S;
        for (int n = 1;; ++n) {
            if (n % 2 == 1) {
                S -= pg_coef(n, X);
                if (Y <= S) {
                    return 0.25 * X;
                }
            } else {
                S += pg_coef(n, X);
                if (Y > S) {
                    break;
                }
            }
        }
    }
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts)
{
    // splitmix64 finaliser folded over the parts
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (std::uint64_t v : parts) {
        h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        h ^= h >> 30;
        h *= 0xBF58476D1CE4E5B9ULL;
        h ^= h >> 27;
        h *= 0x94D049BB133111EBULL;
        h ^= h >> 31;
    }
    return h;
}

double active_region_probability(double mean, double sd, double omega)
{
    const double left = log_norm_cdf((-omega - mean) / sd);
    const double right = log_norm_sf((omega - mean) / sd);
    return std::exp(log_add(left, right));
}

RelaxedDraw sample_relaxed(Random& rng, double mean, double sd, double omega,
                           double loglik_active, double loglik_inactive)
{
    const double zl = (-omega - mean) / sd;
    const double zr = (omega - mean) / sd;
    const double log_left = log_norm_cdf(zl);
    const double log_right = log_norm_sf(zr);
    const double log_out = log_add(log_left, log_right);
    const double log_in = omega > 0.0 ? log_norm_interval(zl, zr) : -kInf;

    double w_out = log_out + loglik_active;
    double w_in = log_in + loglik_inactive;
    if (std::isnan(w_out) || std::isnan(w_in) || (w_out == -kInf && w_in == -kInf) ||
        w_out == kInf || w_in == kInf) {
        w_out = log_out;
        w_in = log_in;
    }
    const double p_out = std::exp(w_out - log_add(w_out, w_in));

    RelaxedDraw d;
    d.active = rng.uniform() < p_out;
    if (d.active) {
        const double p_left = std::exp(log_left - log_out);
        if (rng.uniform() < p_left) {
            d.value = rng.truncated_normal(mean, sd, -kInf, -omega);
        } else {
            d.value = rng.truncated_normal(mean, sd, omega, kInf);
        }
        // Boundary values count as inactive; nudge off the threshold.
        if (std::abs(d.value) <= omega) {
            d.value = std::nextafter(d.value < 0 ? -omega : omega, d.value < 0 ? -kInf : kInf);
        }
    } else {
        d.value = rng.truncated_normal(mean, sd, -omega, omega);
    }
    return d;
}

}  // namespace rtgp
