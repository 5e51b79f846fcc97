#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spider/metric.hpp"
#include "spider/oracle.hpp"
#include "spider/prox.hpp"
#include "spider/trace.hpp"

namespace spider {

/// Uniform index batch of size b over {0,...,n-1}, ascending order,
/// deterministic in the seed.
std::vector<int> sample_batch(int n, int b, bool with_replacement,
                              std::uint64_t seed);

/// Exhaustive enumeration of all without-replacement batches (test
/// utility, n <= 12): the batch-mean expectation and its dispersion
/// against the subsampling variance bound.
struct BatchMeanProperties {
    Vec mean_of_batch_means;
    double variance_of_batch_means = 0.0;  // E |batch mean - full mean|^2
    double variance_bound = 0.0;           // (b n)^{-1} sum |f_i - fbar|^2
};
BatchMeanProperties batch_mean_properties(const std::vector<Vec>& values, int b);

/// gamma^{-2} |prox_{gamma g}^B(s + gamma field) - s|_B^2
double stationarity_delta(const ProxFunction& g, double gamma,
                          const MetricOperator& B, const Vec& s, const Vec& field);

/// Largest admissible initial stepsize (scaled just inside the open
/// interval, so the returned value itself passes the gate below).
double max_initial_stepsize(const SmoothnessProfile& profile, std::int64_t kin,
                            std::int64_t b, double C_vb, double min_Mbar);

/// The stepsize gate; the drivers warn whenever it reaches 1/2.
double lambda_gate(double gamma_tk, const SmoothnessProfile& profile,
                   std::int64_t kin_t, std::int64_t b, double C_vb,
                   double Mbar_tk1);

using StepsizeSchedule = std::function<double(std::int64_t t, std::int64_t k)>;

/// gamma_{t,k+1} = prod_{j<=k} (1 + 2 C_b / m_{t,j+1})^{-1} gamma_{t,0};
/// each step satisfies gamma_{t,k+1} (1 + 2 C_b / m_{t,k+1}) <= gamma_{t,k}
/// in machine arithmetic.
StepsizeSchedule decreasing_stepsize_schedule(
    double gamma_t0, double C_b,
    std::function<std::int64_t(std::int64_t, std::int64_t)> m_schedule);

struct RunConfig {
    std::int64_t kout = 1;
    std::function<std::int64_t(std::int64_t)> kin_schedule;      // t -> K_in(t)
    std::int64_t batch_size = 1;                                 // b
    std::function<std::int64_t(std::int64_t)> b_prime_schedule;  // t -> b'_t
    StepsizeSchedule stepsize_schedule;                          // (t,k) -> gamma_{t,k+1}
    bool with_replacement = false;
    BudgetSchedule budgets;
    std::uint64_t master_seed = 0;
    MetricMap metric_fn;                                 // s -> B(s)
    std::function<double(const Vec&)> objective_fn;      // optional, W + g
    std::optional<SmoothnessProfile> gate_profile;       // enables the gate
    double gate_C_vb = 0.0;
    bool crn = false;            // correlate the chains inside differences
    bool record_walltime = false;
};

struct RunResult {
    std::vector<TraceRecord> trace;
    Vec final_iterate;
    std::int64_t oracle_calls = 0;
    std::int64_t prox_calls = 0;
    std::int64_t mc_draws = 0;
    double max_lambda = 0.0;  // only meaningful when gate_profile is set
    std::vector<std::string> warnings;
};

/// Stochastic variable-metric forward-backward: kout iterations of
/// batch field estimate, SA step and variable-metric prox. The stepsize
/// schedule is evaluated at (1, k) for iteration k.
RunResult run_vmfb(const RunConfig& config, const ForwardOracle& oracle,
                   const ProxFunction& g, Vec s_init);

/// The variance-reduced outer/inner driver: per outer loop a refresh of
/// the running field estimator on a batch of size b'_t, then K_in(t)
/// inner iterations updating the estimator by batch differences. The
/// first inner difference after a refresh is identically zero and is not
/// charged to the oracle budget.
RunResult run_3p_spider(const RunConfig& config, const ForwardOracle& oracle,
                        const ProxFunction& g, Vec s_init, MetricOperator B_init);

}  // namespace spider
