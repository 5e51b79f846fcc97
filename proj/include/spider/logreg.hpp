#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "spider/em.hpp"
#include "spider/metric.hpp"
#include "spider/oracle.hpp"

namespace spider::logreg {

struct Dataset {
    Mat features;  // d x n, columns are examples
    Eigen::VectorXi labels;  // entries in {-1, +1}
    std::string provenance;

    int n() const { return static_cast<int>(features.cols()); }
    int d() const { return static_cast<int>(features.rows()); }
};

/// Desk-scale generator: first d-1 feature coordinates are N(0, 1/(d-1)),
/// the last is an intercept fixed at 1; labels are drawn from the logistic
/// model with per-example Gaussian random effects around theta_star.
Dataset synthesize_dataset(int n, int d, const Vec& theta_star, double sigma2,
                           std::uint64_t seed);

/// CSV with header `label,f1,...,fd`; labels restricted to {-1, +1}.
/// Malformed input is rejected with the offending line number.
Dataset ingest_dataset(const std::filesystem::path& path);

/// Penalized random-effects logistic regression: criterion weights U,
/// statistic-space map B = U^{-1}/2 and the constraint radius ln(4)/tau.
/// Cheap to copy; the data is shared immutably.
class LogRegREModel {
  public:
    LogRegREModel(Dataset dataset, double sigma2, double tau);

    const Mat& X() const;
    const Eigen::VectorXi& y() const;
    double sigma2() const;
    double tau() const;
    const MetricOperator& U() const;
    const MetricOperator& B() const;
    double K_radius2() const;           // ln(4)/tau
    double column_norm(int i) const;
    int n() const;
    int d() const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

LogRegREModel build_model(Dataset dataset, double sigma2, double tau);

/// Posterior mean of the latent coordinate, I_i(theta), by a ratio of two
/// Gauss-Hermite quadratures against the N(<X_i,theta>/|X_i|, sigma2) base.
double quadrature_oracle(const LogRegREModel& model, int i, const Vec& theta);

/// The objective F(theta); diagnostic only.
double criterion_F(const LogRegREModel& model, const Vec& theta);

enum class IntegralBackend { quadrature, gibbs };

/// theta-space oracle h_i(theta, B) = -B^{-1} G_i(theta) with
/// G_i(theta) = 2 U theta - X_i / (sigma2 |X_i|) I_i(theta).
std::shared_ptr<ForwardOracle> gradient_oracle(
    const LogRegREModel& model, IntegralBackend backend = IntegralBackend::quadrature,
    std::int64_t burn_in = 100);

/// The statistic-space view: T(s) = B s, constant induced metric B,
/// posterior means by quadrature (exact) or the Gibbs chain (Monte Carlo),
/// domain {s : B s in K}.
std::shared_ptr<CurvedExpFamilyModel> em_statistic_model(
    const LogRegREModel& model, std::int64_t burn_in = 100);

}  // namespace spider::logreg
