#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spider/metric.hpp"
#include "spider/oracle.hpp"
#include "spider/prox.hpp"

namespace spider {

/// Curved-exponential-family model seen from the statistic space: the
/// per-example posterior means sbar_i(theta), the M-step map T, the
/// induced metric, and the constraint set on statistics.
class CurvedExpFamilyModel {
  public:
    virtual ~CurvedExpFamilyModel() = default;

    virtual int stat_dim() const = 0;
    virtual int sample_count() const = 0;

    virtual bool has_exact_posterior() const { return true; }
    virtual Vec posterior_mean(int i, const Vec& theta) const;
    virtual Vec posterior_mean_mc(int i, const Vec& theta, std::int64_t budget,
                                  std::uint64_t seed) const;

    virtual Vec m_step(const Vec& s) const = 0;  // T(s)
    virtual MetricOperator induced_metric(const Vec& s) const = 0;
    virtual ProxFunction stat_domain() const = 0;

    // M-step criterion psi(theta) - <s, phi(theta)>, for optimality spot checks
    virtual double mstep_criterion(const Vec& theta, const Vec& s) const = 0;
};

/// ForwardOracle exposing the statistic-space field sbar_i(T(s)) - s.
/// The field is already preconditioned, so the metric argument of
/// eval_single is ignored; the induced metric travels separately.
std::shared_ptr<ForwardOracle> em_field_oracle(
    std::shared_ptr<const CurvedExpFamilyModel> model, bool exact = true,
    ErrorProfile profile = {});

/// One full-data step prox_{gamma g}^{B(s)}(s + gamma * mean field); with
/// gamma = 1 and g = 0 this is one classical EM step in statistic space.
/// budget/seed feed the Monte Carlo posterior when the model has none in
/// closed form.
Vec em_full_step(const CurvedExpFamilyModel& model, const Vec& s, double gamma,
                 const ProxFunction& g, std::int64_t budget = 1,
                 std::uint64_t seed = 0);

/// Mini-batch variant processing only the listed examples.
Vec online_em_step(const CurvedExpFamilyModel& model, const Vec& s, double gamma,
                   const ProxFunction& g, const std::vector<int>& batch,
                   std::int64_t budget = 1, std::uint64_t seed = 0);

/// Conjugate Gaussian fixture: latent z_i ~ N(theta, 1), observation
/// y_i | z_i ~ N(z_i, 1), sufficient statistic z. Posteriors are closed
/// form, which makes every EM identity testable exactly.
class GaussianGaussianModel final : public CurvedExpFamilyModel {
  public:
    explicit GaussianGaussianModel(std::vector<double> observations);

    int stat_dim() const override { return 1; }
    int sample_count() const override { return static_cast<int>(y_.size()); }
    Vec posterior_mean(int i, const Vec& theta) const override;
    Vec m_step(const Vec& s) const override { return s; }
    MetricOperator induced_metric(const Vec&) const override {
        return MetricOperator::identity(1);
    }
    ProxFunction stat_domain() const override { return ProxFunction::zero(); }
    double mstep_criterion(const Vec& theta, const Vec& s) const override;

    double observation_mean() const { return mean_; }
    // exact marginal negative log-likelihood (y_i ~ N(theta, 2))
    double neg_log_likelihood(double theta) const;

  private:
    std::vector<double> y_;
    double mean_ = 0.0;
};

}  // namespace spider
