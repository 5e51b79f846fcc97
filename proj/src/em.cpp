#include "spider/em.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "spider/rng.hpp"

namespace spider {

Vec CurvedExpFamilyModel::posterior_mean(int, const Vec&) const {
    throw std::logic_error("model has no closed-form posterior mean");
}

Vec CurvedExpFamilyModel::posterior_mean_mc(int, const Vec&, std::int64_t,
                                            std::uint64_t) const {
    throw std::logic_error("model has no Monte Carlo posterior mean");
}

namespace {

class EmFieldOracle final : public ForwardOracle {
  public:
    EmFieldOracle(std::shared_ptr<const CurvedExpFamilyModel> model, bool exact,
                  ErrorProfile profile)
        : model_(std::move(model)), exact_(exact), profile_(profile) {
        validate_error_profile(exactness(), profile_);
    }

    int components() const override { return model_->sample_count(); }
    Exactness exactness() const override {
        return exact_ ? Exactness::exact : Exactness::biased_random;
    }
    const ErrorProfile& error_profile() const override { return profile_; }

    Vec eval_single(int i, const Vec& s, const MetricOperator&,
                    std::int64_t budget, std::uint64_t seed) const override {
        const Vec theta = model_->m_step(s);
        const Vec sbar = exact_ ? model_->posterior_mean(i, theta)
                                : model_->posterior_mean_mc(i, theta, budget, seed);
        return sbar - s;
    }

  private:
    std::shared_ptr<const CurvedExpFamilyModel> model_;
    bool exact_;
    ErrorProfile profile_;
};

constexpr std::uint64_t kTagEmStep = 40;

}  // namespace

std::shared_ptr<ForwardOracle> em_field_oracle(
    std::shared_ptr<const CurvedExpFamilyModel> model, bool exact,
    ErrorProfile profile) {
    if (!model) throw std::invalid_argument("em_field_oracle: null model");
    if (exact && !model->has_exact_posterior())
        throw std::invalid_argument(
            "em_field_oracle: model has no exact posterior mean");
    if (!exact && profile.C_b == 0.0 && profile.C_v == 0.0 && profile.C_vb == 0.0) {
        // declared constants of the MCMC approximation class; placeholders,
        // never inferred from data
        profile.C_b = profile.C_v = profile.C_vb = 1.0;
    }
    return std::make_shared<EmFieldOracle>(std::move(model), exact, profile);
}

namespace {

Vec em_step_impl(const CurvedExpFamilyModel& model, const Vec& s, double gamma,
                 const ProxFunction& g, const std::vector<int>& batch,
                 std::int64_t budget, std::uint64_t seed) {
    if (gamma < 0.0) throw std::invalid_argument("em step: gamma must be >= 0");
    if (!g.contains(s)) throw std::invalid_argument("em step: s outside dom g");
    if (gamma == 0.0) return s;
    const Vec theta = model.m_step(s);
    Vec field = Vec::Zero(s.size());
    for (int i : batch) {
        const Vec sbar =
            model.has_exact_posterior()
                ? model.posterior_mean(i, theta)
                : model.posterior_mean_mc(
                      i, theta, budget,
                      rng::derive(seed, {kTagEmStep, static_cast<std::uint64_t>(i)}));
        field += sbar - s;
    }
    field /= static_cast<double>(batch.size());
    return prox(g, gamma, model.induced_metric(s), s + gamma * field);
}

}  // namespace

Vec em_full_step(const CurvedExpFamilyModel& model, const Vec& s, double gamma,
                 const ProxFunction& g, std::int64_t budget, std::uint64_t seed) {
    std::vector<int> all(static_cast<std::size_t>(model.sample_count()));
    for (int i = 0; i < model.sample_count(); ++i)
        all[static_cast<std::size_t>(i)] = i;
    return em_step_impl(model, s, gamma, g, all, budget, seed);
}

Vec online_em_step(const CurvedExpFamilyModel& model, const Vec& s, double gamma,
                   const ProxFunction& g, const std::vector<int>& batch,
                   std::int64_t budget, std::uint64_t seed) {
    if (batch.empty()) throw std::invalid_argument("online_em_step: empty batch");
    return em_step_impl(model, s, gamma, g, batch, budget, seed);
}

GaussianGaussianModel::GaussianGaussianModel(std::vector<double> observations)
    : y_(std::move(observations)) {
    if (y_.empty())
        throw std::invalid_argument("fixture needs at least one observation");
    double acc = 0.0;
    for (double v : y_) acc += v;
    mean_ = acc / static_cast<double>(y_.size());
}

Vec GaussianGaussianModel::posterior_mean(int i, const Vec& theta) const {
    if (i < 0 || i >= sample_count())
        throw std::invalid_argument("fixture: index out of range");
    Vec out(1);
    out(0) = 0.5 * (theta(0) + y_[static_cast<std::size_t>(i)]);
    return out;
}

double GaussianGaussianModel::mstep_criterion(const Vec& theta, const Vec& s) const {
    return 0.5 * theta(0) * theta(0) - s(0) * theta(0);
}

double GaussianGaussianModel::neg_log_likelihood(double theta) const {
    double acc = 0.0;
    for (double v : y_) {
        const double r = v - theta;
        acc += 0.25 * r * r;
    }
    acc /= static_cast<double>(y_.size());
    return acc + 0.5 * std::log(4.0 * std::numbers::pi);
}

}  // namespace spider
