#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "spider/metric.hpp"
#include "spider/rng.hpp"

namespace spider::mcmc {

/// One exact draw from the Polya-Gamma distribution PG(1, c); the law
/// depends on c only through |c|. Alternating-series rejection sampler.
double sample_pg1(double c, rng::Stream& stream);
double sample_pg1(double c, std::uint64_t seed);

/// Parameters of the augmented target: a Gaussian location a, the signed
/// logistic scale c = y |x|, and the latent variance sigma2. The two-block
/// chain alternates omega | z ~ PG(1, |c| z) with
/// z | omega ~ N((a + c sigma2/2) / (1 + omega sigma2 c^2),
///              sigma2 / (1 + omega sigma2 c^2)).
struct GibbsTarget {
    double a = 0.0;
    double c = 0.0;
    double sigma2 = 1.0;
};

struct ChainOutput {
    std::vector<double> z_samples;  // post burn-in, length = budget
    std::int64_t accepted_budget = 0;
    std::uint64_t seed_used = 0;
};

/// Runs the chain from z0 = a. Each sweep r draws from streams derived
/// from (seed, r), so two chains sharing a seed consume identical uniform
/// streams sweep by sweep whatever their parameters (the coupling used by
/// the correlated difference estimates).
ChainOutput gibbs_chain(const GibbsTarget& target, std::int64_t m,
                        std::int64_t burn_in, std::uint64_t seed);

/// Data needed to turn Gibbs output into a statistic-space field estimate.
struct McModelContext {
    const Mat* X = nullptr;               // d x n covariates, columns X_i
    const Eigen::VectorXi* y = nullptr;   // labels in {-1, +1}
    double sigma2 = 1.0;
    const MetricOperator* B = nullptr;    // statistic-to-parameter map
    std::int64_t burn_in = 100;
};

/// Monte Carlo estimate of the statistic-space field
///   -s + X_i <X_i, Bs> / (sigma2 |X_i|^2) + y_i X_i m^{-1} sum_r w(Z_r),
/// w(z) = (1 + exp(y_i |X_i| z))^{-1}. When crn_partner is set the chain
/// runs on that seed instead, coupling it to the partner estimate.
Vec mc_hbar_estimate(const Vec& s, int i, const McModelContext& ctx,
                     std::int64_t budget, std::uint64_t seed,
                     std::optional<std::uint64_t> crn_partner = {});

}  // namespace spider::mcmc
