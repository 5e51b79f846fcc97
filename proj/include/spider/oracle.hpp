#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "spider/metric.hpp"

namespace spider {

enum class Exactness { exact, unbiased_random, biased_random, deterministic_approx };

/// Monte Carlo budgets per loop index: m_{t,k} points per estimate, with
/// optional polynomial growth t^a (k+1)^abar on top of the base counts.
struct BudgetSchedule {
    std::int64_t refresh = 1;  // points for the outer-loop refresh estimates
    std::int64_t inner = 1;    // points for the inner-loop difference estimates
    double growth_t = 0.0;
    double growth_k = 0.0;

    std::int64_t refresh_at(std::int64_t t) const;
    std::int64_t inner_at(std::int64_t t, std::int64_t k) const;
};

/// Declared error constants of an approximation class; the zero pattern
/// must match the oracle's exactness class.
struct ErrorProfile {
    double C_b = 0.0;
    double C_v = 0.0;
    double C_vb = 0.0;
    BudgetSchedule budgets;
};

void validate_error_profile(Exactness exactness, const ErrorProfile& profile);

/// Produces approximations of the preconditioned forward operators
/// h_i(s,B) = -B^{-1} G_i(s) and of their differences. Implementations are
/// immutable; every stochastic call is a pure function of
/// (inputs, budget, seed) so batches replay bit-identically regardless of
/// evaluation order.
class ForwardOracle {
  public:
    virtual ~ForwardOracle() = default;

    virtual int components() const = 0;
    virtual Exactness exactness() const = 0;
    virtual const ErrorProfile& error_profile() const = 0;

    virtual Vec eval_single(int i, const Vec& s, const MetricOperator& B,
                            std::int64_t budget, std::uint64_t seed) const = 0;

    // approximates h_i(s_cur,B_cur) - h_i(s_prev,B_prev); with crn the two
    // inner estimates share one derived seed so their uniform streams match
    virtual Vec eval_diff(int i, const Vec& s_cur, const MetricOperator& B_cur,
                          const Vec& s_prev, const MetricOperator& B_prev,
                          std::int64_t budget, std::uint64_t seed, bool crn) const;
};

using ComponentMap = std::function<Vec(const Vec&)>;
using MetricMap = std::function<MetricOperator(const Vec&)>;

/// Exact oracle for closed-form component maps G_i.
std::shared_ptr<ForwardOracle> exact_finite_sum_oracle(
    std::vector<ComponentMap> components, MetricMap metric_fn = {});

/// n^{-1} sum_i h_i(s,B); diagnostic utility, rejects inexact oracles.
Vec mean_field(const ForwardOracle& oracle, const Vec& s, const MetricOperator& B);

/// |batch|^{-1} sum_{i in batch} of single evaluations at (s0, B0), each
/// keyed by a seed derived from (seed, refresh tag, 0, i). Summation runs
/// in the batch's index order.
Vec spider_refresh(const ForwardOracle& oracle, const std::vector<int>& batch,
                   const Vec& s0, const MetricOperator& B0, std::int64_t budget,
                   std::uint64_t seed);

}  // namespace spider
