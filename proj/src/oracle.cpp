#include "spider/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "spider/rng.hpp"

namespace spider {

namespace {
// stream tags for seed derivation inside oracle machinery
constexpr std::uint64_t kTagDiffShared = 0;
constexpr std::uint64_t kTagDiffCur = 1;
constexpr std::uint64_t kTagDiffPrev = 2;
constexpr std::uint64_t kTagRefresh = 10;
}  // namespace

std::int64_t BudgetSchedule::refresh_at(std::int64_t t) const {
    double m = static_cast<double>(refresh);
    if (growth_t > 0.0) m *= std::pow(static_cast<double>(std::max<std::int64_t>(t, 1)), growth_t);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(m)));
}

std::int64_t BudgetSchedule::inner_at(std::int64_t t, std::int64_t k) const {
    double m = static_cast<double>(inner);
    if (growth_t > 0.0) m *= std::pow(static_cast<double>(std::max<std::int64_t>(t, 1)), growth_t);
    if (growth_k > 0.0) m *= std::pow(static_cast<double>(k + 1), growth_k);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(m)));
}

void validate_error_profile(Exactness exactness, const ErrorProfile& p) {
    if (p.C_b < 0.0 || p.C_v < 0.0 || p.C_vb < 0.0)
        throw std::invalid_argument("error constants must be nonnegative");
    switch (exactness) {
        case Exactness::exact:
            if (p.C_b != 0.0 || p.C_v != 0.0 || p.C_vb != 0.0)
                throw std::invalid_argument(
                    "exact oracles must declare C_b = C_v = C_vb = 0");
            break;
        case Exactness::unbiased_random:
            if (p.C_b != 0.0 || p.C_vb != 0.0)
                throw std::invalid_argument(
                    "unbiased random oracles must declare C_b = C_vb = 0");
            break;
        case Exactness::deterministic_approx:
            if (p.C_v != 0.0)
                throw std::invalid_argument(
                    "deterministic approximations must declare C_v = 0");
            break;
        case Exactness::biased_random:
            if (!(p.C_b > 0.0))
                throw std::invalid_argument(
                    "biased random oracles must declare C_b > 0");
            break;
    }
}

Vec ForwardOracle::eval_diff(int i, const Vec& s_cur, const MetricOperator& B_cur,
                             const Vec& s_prev, const MetricOperator& B_prev,
                             std::int64_t budget, std::uint64_t seed,
                             bool crn) const {
    const std::uint64_t shared = rng::derive(seed, {kTagDiffShared});
    const std::uint64_t seed_cur = crn ? shared : rng::derive(seed, {kTagDiffCur});
    const std::uint64_t seed_prev = crn ? shared : rng::derive(seed, {kTagDiffPrev});
    return eval_single(i, s_cur, B_cur, budget, seed_cur) -
           eval_single(i, s_prev, B_prev, budget, seed_prev);
}

namespace {

class ExactFiniteSumOracle final : public ForwardOracle {
  public:
    ExactFiniteSumOracle(std::vector<ComponentMap> components, MetricMap metric_fn)
        : components_(std::move(components)), metric_fn_(std::move(metric_fn)) {
        if (components_.empty())
            throw std::invalid_argument("finite sum oracle needs at least one component");
        validate_error_profile(Exactness::exact, profile_);
    }

    int components() const override { return static_cast<int>(components_.size()); }
    Exactness exactness() const override { return Exactness::exact; }
    const ErrorProfile& error_profile() const override { return profile_; }

    Vec eval_single(int i, const Vec& s, const MetricOperator& B, std::int64_t,
                    std::uint64_t) const override {
        if (i < 0 || i >= components())
            throw std::invalid_argument("component index out of range");
        return -B.apply_inverse(components_[static_cast<std::size_t>(i)](s));
    }

  private:
    std::vector<ComponentMap> components_;
    MetricMap metric_fn_;
    ErrorProfile profile_{};
};

}  // namespace

std::shared_ptr<ForwardOracle> exact_finite_sum_oracle(
    std::vector<ComponentMap> components, MetricMap metric_fn) {
    return std::make_shared<ExactFiniteSumOracle>(std::move(components),
                                                  std::move(metric_fn));
}

Vec mean_field(const ForwardOracle& oracle, const Vec& s, const MetricOperator& B) {
    if (oracle.exactness() != Exactness::exact)
        throw std::invalid_argument("mean_field requires an exact oracle");
    Vec acc = Vec::Zero(s.size());
    for (int i = 0; i < oracle.components(); ++i)
        acc += oracle.eval_single(i, s, B, 0, 0);
    return acc / static_cast<double>(oracle.components());
}

Vec spider_refresh(const ForwardOracle& oracle, const std::vector<int>& batch,
                   const Vec& s0, const MetricOperator& B0, std::int64_t budget,
                   std::uint64_t seed) {
    if (batch.empty()) throw std::invalid_argument("spider_refresh: empty batch");
    Vec acc = Vec::Zero(s0.size());
    for (std::size_t slot = 0; slot < batch.size(); ++slot) {
        // the slot enters the derivation so that duplicate indices in a
        // with-replacement batch still draw independently
        const std::uint64_t seed_i =
            rng::derive(seed, {kTagRefresh, static_cast<std::uint64_t>(slot),
                               static_cast<std::uint64_t>(batch[slot])});
        acc += oracle.eval_single(batch[slot], s0, B0, budget, seed_i);
    }
    return acc / static_cast<double>(batch.size());
}

}  // namespace spider
