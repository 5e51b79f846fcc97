#include "spider/mcmc.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spider::mcmc {

namespace {

constexpr double kPi = std::numbers::pi;
// truncation point separating the two series representations of the
// Jacobi density; 0.64 is the usual choice near 2/pi
constexpr double kT = 0.64;

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double log_norm_cdf(double x) {
    if (x > -10.0) return std::log(norm_cdf(x));
    // asymptotic expansion of the Gaussian tail
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * kPi) +
           std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// CDF at kT of the inverse Gaussian with mean 1/z and shape 1
double igauss_cdf_at_t(double z) {
    const double rt = std::sqrt(kT);
    const double first = norm_cdf((kT * z - 1.0) / rt);
    const double arg = -(kT * z + 1.0) / rt;
    double second;
    if (z < 40.0)
        second = std::exp(2.0 * z) * norm_cdf(arg);
    else
        second = std::exp(2.0 * z + log_norm_cdf(arg));
    return first + second;
}

// piecewise coefficients of the alternating series for the Jacobi density
double series_coef(int n, double x) {
    const double np = static_cast<double>(n) + 0.5;
    if (x <= kT)
        return kPi * np * std::pow(2.0 / (kPi * x), 1.5) *
               std::exp(-2.0 * np * np / x);
    return kPi * np * std::exp(-np * np * kPi * kPi * x / 2.0);
}

// inverse Gaussian with mean 1/z and shape 1, truncated to (0, kT]
double truncated_inverse_gaussian(double z, rng::Stream& stream) {
    if (z < 1.0 / kT) {
        // mean beyond the truncation point: rejection from the scaled
        // reciprocal-chi proposal
        while (true) {
            double e1;
            double e2;
            do {
                e1 = stream.exponential();
                e2 = stream.exponential();
            } while (e1 * e1 > 2.0 * e2 / kT);
            const double x = kT / ((1.0 + kT * e1) * (1.0 + kT * e1));
            if (stream.uniform() <= std::exp(-0.5 * z * z * x)) return x;
        }
    }
    const double mu = 1.0 / z;
    while (true) {
        const double y = stream.gaussian();
        const double muy = mu * y * y;
        double x = mu + 0.5 * mu * muy -
                   0.5 * mu * std::sqrt(4.0 * muy + muy * muy);
        if (stream.uniform() > mu / (mu + x)) x = mu * mu / x;
        if (x <= kT) return x;
    }
}

}  // namespace

double sample_pg1(double c, rng::Stream& stream) {
    if (!std::isfinite(c)) throw std::invalid_argument("sample_pg1: c not finite");
    const double z = 0.5 * std::abs(c);
    const double big_k = kPi * kPi / 8.0 + 0.5 * z * z;
    const double p = kPi / (2.0 * big_k) * std::exp(-big_k * kT);
    const double q = 2.0 * std::exp(-z) * igauss_cdf_at_t(z);
    const double tail_prob = p / (p + q);

    for (int attempt = 0; attempt < 10000; ++attempt) {
        double x;
        if (stream.uniform() < tail_prob)
            x = kT + stream.exponential() / big_k;  // exponential right tail
        else
            x = truncated_inverse_gaussian(z, stream);

        // squeeze on the alternating partial sums
        double s = series_coef(0, x);
        const double y = stream.uniform() * s;
        int n = 0;
        bool decided = false;
        bool accepted = false;
        while (!decided && n < 500) {
            ++n;
            if (n % 2 == 1) {
                s -= series_coef(n, x);
                if (y <= s) {
                    decided = true;
                    accepted = true;
                }
            } else {
                s += series_coef(n, x);
                if (y > s) decided = true;
            }
        }
        if (accepted) return 0.25 * x;
    }
    throw std::runtime_error("sample_pg1: rejection sampler failed to accept");
}

double sample_pg1(double c, std::uint64_t seed) {
    rng::Stream stream(seed);
    return sample_pg1(c, stream);
}

namespace {
constexpr std::uint64_t kTagOmega = 50;
constexpr std::uint64_t kTagZ = 51;
constexpr std::uint64_t kTagChain = 52;
}  // namespace

ChainOutput gibbs_chain(const GibbsTarget& target, std::int64_t m,
                        std::int64_t burn_in, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("gibbs_chain: budget must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("gibbs_chain: negative burn-in");
    if (!(target.sigma2 > 0.0) || !std::isfinite(target.a) ||
        !std::isfinite(target.c))
        throw std::invalid_argument("gibbs_chain: invalid target");

    const double a = target.a;
    const double c = target.c;
    const double s2 = target.sigma2;
    const double c2 = c * c;
    const double drift = a + 0.5 * c * s2;

    ChainOutput out;
    out.z_samples.reserve(static_cast<std::size_t>(m));
    out.accepted_budget = m;
    out.seed_used = seed;

    double z = a;  // mode-adjacent start
    for (std::int64_t r = 0; r < burn_in + m; ++r) {
        // per-sweep substreams keep coupled chains aligned even though the
        // rejection sampler consumes a variable number of uniforms
        rng::Stream omega_stream(
            rng::derive(seed, {kTagOmega, static_cast<std::uint64_t>(r)}));
        rng::Stream z_stream(
            rng::derive(seed, {kTagZ, static_cast<std::uint64_t>(r)}));
        const double omega = sample_pg1(std::abs(c) * z, omega_stream);
        const double denom = 1.0 + omega * s2 * c2;
        z = drift / denom + std::sqrt(s2 / denom) * z_stream.gaussian();
        if (r >= burn_in) out.z_samples.push_back(z);
    }
    return out;
}

namespace {
// numerically stable (1 + exp(x))^{-1}
double inv_one_plus_exp(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}
}  // namespace

Vec mc_hbar_estimate(const Vec& s, int i, const McModelContext& ctx,
                     std::int64_t budget, std::uint64_t seed,
                     std::optional<std::uint64_t> crn_partner) {
    if (!ctx.X || !ctx.y || !ctx.B)
        throw std::invalid_argument("mc_hbar_estimate: incomplete context");
    if (i < 0 || i >= ctx.X->cols())
        throw std::invalid_argument("mc_hbar_estimate: index out of range");
    if (budget < 1) throw std::invalid_argument("mc_hbar_estimate: budget >= 1");

    const Vec theta = ctx.B->apply(s);
    const Vec x = ctx.X->col(i);
    const double norm = x.norm();
    const double yi = static_cast<double>((*ctx.y)(i));
    const double a = x.dot(theta) / norm;
    const double c = yi * norm;

    const std::uint64_t chain_seed =
        crn_partner ? *crn_partner : rng::derive(seed, {kTagChain});
    const ChainOutput chain =
        gibbs_chain({a, c, ctx.sigma2}, budget, ctx.burn_in, chain_seed);

    double wsum = 0.0;
    for (double z : chain.z_samples) wsum += inv_one_plus_exp(c * z);
    const double wmean = wsum / static_cast<double>(budget);

    return -s + x * (x.dot(theta) / (ctx.sigma2 * norm * norm)) + (yi * wmean) * x;
}

}  // namespace spider::mcmc
