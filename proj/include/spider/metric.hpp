#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

namespace spider {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct EigenvalueBounds {
    double v_min;
    double v_max;
};

/// Symmetric positive definite operator with a cached spectral
/// factorization. One factorization serves the inverse, the square root
/// and the secular-equation projections. Immutable after construction;
/// copies share the factorization and are safe to move across threads.
class MetricOperator {
  public:
    explicit MetricOperator(Mat matrix,
                            std::optional<EigenvalueBounds> declared = {});

    static MetricOperator identity(int dim);
    static MetricOperator diagonal(Vec diag,
                                   std::optional<EigenvalueBounds> declared = {});

    int dim() const;
    const Mat& matrix() const;
    const Vec& eigenvalues() const;
    const Mat& eigenvectors() const;  // columns; B = Q diag(lambda) Q^T
    double min_eigenvalue() const;
    double max_eigenvalue() const;
    bool is_diagonal() const;
    const std::optional<EigenvalueBounds>& declared_bounds() const;

    Vec apply(const Vec& v) const;          // B v
    Vec apply_inverse(const Vec& v) const;  // B^{-1} v
    Vec sqrt_apply(const Vec& v, bool inverse = false) const;
    double inner(const Vec& u, const Vec& v) const;  // <Bu, v>
    double norm_sq(const Vec& v) const;              // <Bv, v>

    Mat inverse_matrix() const;
    Mat sqrt_matrix(bool inverse = false) const;
    MetricOperator inverse_operator() const;

    // true when both handles share the same factorization
    bool same_operator(const MetricOperator& other) const;

  private:
    struct Impl;
    explicit MetricOperator(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

double b_inner(const MetricOperator& B, const Vec& u, const Vec& v);
double b_norm_sq(const MetricOperator& B, const Vec& v);
Vec apply_inverse(const MetricOperator& B, const Vec& v);
Vec sqrt_apply(const MetricOperator& B, const Vec& v, bool inverse = false);

/// Smoothness constants of a finite-sum problem: per-component Lipschitz
/// constants L_i with L^2 = mean of L_i^2, the Lipschitz constant of the
/// aggregated gradient, and the metric spectrum bounds.
struct SmoothnessProfile {
    Vec per_component_lipschitz;
    double aggregate_L = 1.0;
    double gradient_lipschitz = 1.0;
    double v_min = 1.0;
    double v_max = 1.0;

    static SmoothnessProfile from_components(Vec per_component,
                                             double gradient_lipschitz,
                                             double v_min, double v_max);
    void validate() const;  // throws std::invalid_argument on violation
};

}  // namespace spider
