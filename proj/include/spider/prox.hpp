#pragma once

#include <memory>

#include "spider/metric.hpp"

namespace spider {

/// Proper lower semicontinuous convex function g from a small catalog,
/// with evaluation, domain membership and variable-metric proximity
/// operators. Immutable and cheap to copy.
class ProxFunction {
  public:
    enum class Kind { zero, indicator_ball, indicator_metric_ball, l1 };

    static ProxFunction zero();
    // indicator of the Euclidean ball {s : |s - center| <= radius}
    static ProxFunction indicator_ball(double radius, Vec center);
    // indicator of {s : |map s - center| <= radius} for an SPD map
    static ProxFunction indicator_metric_ball(MetricOperator map, double radius,
                                              Vec center);
    static ProxFunction l1(double weight);

    Kind kind() const { return kind_; }
    double radius() const { return radius_; }
    const Vec& center() const { return center_; }
    double weight() const { return weight_; }
    const MetricOperator& map() const;

    double evaluate(const Vec& s) const;  // +inf exactly off-domain
    bool contains(const Vec& s) const;    // domain check, small relative slack

  private:
    ProxFunction() = default;
    Kind kind_ = Kind::zero;
    double radius_ = 0.0;
    Vec center_;
    double weight_ = 0.0;
    std::shared_ptr<const MetricOperator> map_;
};

/// The unique minimizer of gamma*g(.) + 0.5*|. - s|_B^2.
Vec prox(const ProxFunction& g, double gamma, const MetricOperator& B,
         const Vec& s);

/// Same point computed through the square-root factorization
///   sqrt(B)^{-1} prox_{gamma g(sqrt(B)^{-1} .)}(sqrt(B) s).
/// Throws std::invalid_argument for kinds where the transformed prox is
/// not computable (l1 with a non-diagonal metric).
Vec prox_via_sqrt(const ProxFunction& g, double gamma, const MetricOperator& B,
                  const Vec& s);

/// |prox_{gamma g}^B(s + gamma h) - s|; zero iff B h lies in the
/// subdifferential of g at s.
double fixed_point_residual(const ProxFunction& g, double gamma,
                            const MetricOperator& B, const Vec& s, const Vec& h);

namespace detail {
// argmin_{|x - center| <= radius} |x - s|_M^2 via the secular equation in
// the eigenbasis of M; exposed for tests of the root-finder
Vec project_ball_metric(const MetricOperator& M, const Vec& s, const Vec& center,
                        double radius);
// argmin_x 0.5*|x - y|^2 subject to |A x - center| <= radius, A invertible
Vec project_ellipsoid(const Mat& A, const Vec& center, double radius,
                      const Vec& y);
}  // namespace detail

}  // namespace spider
