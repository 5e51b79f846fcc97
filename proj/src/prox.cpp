#include "spider/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace spider {

namespace {

double soft_threshold(double x, double tau) {
    if (x > tau) return x - tau;
    if (x < -tau) return x + tau;
    return 0.0;
}

// minimize 0.5 (p-s)' B (p-s) + tau |p|_1; exact componentwise solve for a
// diagonal metric, cyclic coordinate descent otherwise
Vec prox_l1_metric(const MetricOperator& B, double tau, const Vec& s) {
    if (tau == 0.0) return s;
    const int q = B.dim();
    if (B.is_diagonal()) {
        Vec p(q);
        for (int j = 0; j < q; ++j)
            p(j) = soft_threshold(s(j), tau / B.eigenvalues()(j)) ;
        return p;
    }
    const Mat& M = B.matrix();
    const Vec bs = B.apply(s);
    // warm start from the diagonal approximation
    Vec p(q);
    for (int j = 0; j < q; ++j) p(j) = soft_threshold(s(j), tau / M(j, j));
    Vec r = M * p;
    constexpr int max_sweeps = 20000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (int j = 0; j < q; ++j) {
            const double cj = bs(j) - (r(j) - M(j, j) * p(j));
            const double next = soft_threshold(cj, tau) / M(j, j);
            const double delta = next - p(j);
            if (delta != 0.0) {
                r += M.col(j) * delta;
                p(j) = next;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta <= 1e-15 * (1.0 + p.cwiseAbs().maxCoeff())) return p;
    }
    throw std::runtime_error("l1 prox coordinate descent did not converge");
}

}  // namespace

namespace detail {

Vec project_ball_metric(const MetricOperator& M, const Vec& s, const Vec& center,
                        double radius) {
    const Vec d = s - center;
    const double dist = d.norm();
    if (dist <= radius) return s;  // includes the boundary tie-break

    const Mat& Q = M.eigenvectors();
    const Vec& lam = M.eigenvalues();
    const Vec w = M.is_diagonal() ? d : Vec(Q.transpose() * d);

    const auto norm_x = [&](double mu) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double xi = lam(i) * w(i) / (lam(i) + mu);
            acc += xi * xi;
        }
        return std::sqrt(acc);
    };
    const auto norm_x_derivative = [&](double mu, double nx) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double xi = lam(i) * w(i) / (lam(i) + mu);
            acc += xi * xi / (lam(i) + mu);
        }
        return -acc / nx;
    };

    // |x(mu)| <= lam_max |d| / (lam_max + mu), so this upper end brackets
    double lo = 0.0;
    double hi = M.max_eigenvalue() * (dist - radius) / radius;
    int evals = 0;
    constexpr int max_evals = 200;
    while (norm_x(hi) > radius && ++evals < 16) hi *= 2.0;

    const double tol = 1e-12 * std::max(1.0, radius);
    double mu = 0.5 * (lo + hi);
    double residual = norm_x(mu) - radius;
    for (; evals < max_evals && std::abs(residual) > tol; ++evals) {
        if (residual > 0.0)
            lo = mu;
        else
            hi = mu;
        // Newton step from the current iterate, bisect when it escapes
        const double nx = residual + radius;
        const double step = residual / norm_x_derivative(mu, nx);
        double next = mu - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        mu = next;
        residual = norm_x(mu) - radius;
    }
    if (std::abs(residual) > tol) {
        std::ostringstream os;
        os << "ball projection root-finder did not converge: residual "
           << residual << " after " << evals << " evaluations";
        throw std::runtime_error(os.str());
    }

    Vec x(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        x(i) = lam(i) * w(i) / (lam(i) + mu);
    if (M.is_diagonal()) return center + x;
    return center + Q * x;
}

Vec project_ellipsoid(const Mat& A, const Vec& center, double radius,
                      const Vec& y) {
    if ((A * y - center).norm() <= radius) return y;

    const Mat G = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("ellipsoid projection: eigendecomposition failed");
    const Mat& Q = es.eigenvectors();
    const Vec& lam = es.eigenvalues();
    const Vec qy = Q.transpose() * y;
    const Vec qac = Q.transpose() * (A.transpose() * center);

    const auto x_of = [&](double mu) {
        Vec xt(qy.size());
        for (Eigen::Index i = 0; i < qy.size(); ++i)
            xt(i) = (qy(i) + mu * qac(i)) / (1.0 + mu * lam(i));
        return Vec(Q * xt);
    };
    const auto violation = [&](double mu) {
        return (A * x_of(mu) - center).norm() - radius;
    };

    double lo = 0.0, hi = 1.0;
    int evals = 0;
    constexpr int max_evals = 220;
    while (violation(hi) > 0.0 && ++evals < 60) hi *= 2.0;

    const double tol = 1e-12 * std::max(1.0, radius);
    double mu = 0.5 * (lo + hi);
    double residual = violation(mu);
    for (; evals < max_evals && std::abs(residual) > tol; ++evals) {
        if (residual > 0.0)
            lo = mu;
        else
            hi = mu;
        mu = 0.5 * (lo + hi);
        residual = violation(mu);
    }
    if (std::abs(residual) > tol)
        throw std::runtime_error("ellipsoid projection did not converge");
    return x_of(mu);
}

}  // namespace detail

ProxFunction ProxFunction::zero() { return ProxFunction(); }

ProxFunction ProxFunction::indicator_ball(double radius, Vec center) {
    if (!(radius > 0.0))
        throw std::invalid_argument("indicator_ball requires a positive radius");
    ProxFunction g;
    g.kind_ = Kind::indicator_ball;
    g.radius_ = radius;
    g.center_ = std::move(center);
    return g;
}

ProxFunction ProxFunction::indicator_metric_ball(MetricOperator map, double radius,
                                                 Vec center) {
    if (!(radius > 0.0))
        throw std::invalid_argument("indicator_metric_ball requires a positive radius");
    if (map.dim() != center.size())
        throw std::invalid_argument("indicator_metric_ball: map/center dimension mismatch");
    ProxFunction g;
    g.kind_ = Kind::indicator_metric_ball;
    g.radius_ = radius;
    g.center_ = std::move(center);
    g.map_ = std::make_shared<MetricOperator>(std::move(map));
    return g;
}

ProxFunction ProxFunction::l1(double weight) {
    if (weight < 0.0) throw std::invalid_argument("l1 weight must be nonnegative");
    ProxFunction g;
    g.kind_ = Kind::l1;
    g.weight_ = weight;
    return g;
}

const MetricOperator& ProxFunction::map() const {
    if (!map_) throw std::logic_error("prox function has no linear map");
    return *map_;
}

bool ProxFunction::contains(const Vec& s) const {
    switch (kind_) {
        case Kind::zero:
        case Kind::l1:
            return true;
        case Kind::indicator_ball:
            return (s - center_).norm() <= radius_ + 1e-9 * std::max(1.0, radius_);
        case Kind::indicator_metric_ball:
            return (map_->apply(s) - center_).norm() <=
                   radius_ + 1e-9 * std::max(1.0, radius_);
    }
    return false;
}

double ProxFunction::evaluate(const Vec& s) const {
    switch (kind_) {
        case Kind::zero:
            return 0.0;
        case Kind::l1:
            return weight_ * s.lpNorm<1>();
        case Kind::indicator_ball:
        case Kind::indicator_metric_ball:
            return contains(s) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

Vec prox(const ProxFunction& g, double gamma, const MetricOperator& B,
         const Vec& s) {
    if (!(gamma > 0.0)) throw std::invalid_argument("prox requires gamma > 0");
    switch (g.kind()) {
        case ProxFunction::Kind::zero:
            return s;
        case ProxFunction::Kind::indicator_ball:
            // indicators are scale invariant, gamma is accepted but inert
            return detail::project_ball_metric(B, s, g.center(), g.radius());
        case ProxFunction::Kind::indicator_metric_ball: {
            const MetricOperator& T = g.map();
            if (T.same_operator(B)) {
                // B^{-1} argmin_{x in K} (x - Bs)' B^{-1} (x - Bs)
                const Vec u = detail::project_ball_metric(
                    B.inverse_operator(), B.apply(s), g.center(), g.radius());
                return B.apply_inverse(u);
            }
            // substitute u = T p: the constraint becomes a plain ball and the
            // objective a T^{-1} B T^{-1}-weighted distance
            const Mat Tinv = T.inverse_matrix();
            const MetricOperator M(Tinv * B.matrix() * Tinv);
            const Vec u = detail::project_ball_metric(M, T.apply(s), g.center(),
                                                      g.radius());
            return T.apply_inverse(u);
        }
        case ProxFunction::Kind::l1:
            return prox_l1_metric(B, gamma * g.weight(), s);
    }
    throw std::logic_error("unreachable prox kind");
}

Vec prox_via_sqrt(const ProxFunction& g, double gamma, const MetricOperator& B,
                  const Vec& s) {
    if (!(gamma > 0.0)) throw std::invalid_argument("prox requires gamma > 0");
    switch (g.kind()) {
        case ProxFunction::Kind::zero:
            return s;
        case ProxFunction::Kind::l1: {
            if (!B.is_diagonal())
                throw std::invalid_argument(
                    "prox_via_sqrt: l1 with a non-diagonal metric is unsupported");
            const Vec y = B.sqrt_apply(s);
            Vec x(y.size());
            for (Eigen::Index j = 0; j < y.size(); ++j)
                x(j) = soft_threshold(
                    y(j), gamma * g.weight() / std::sqrt(B.eigenvalues()(j)));
            return B.sqrt_apply(x, true);
        }
        case ProxFunction::Kind::indicator_ball: {
            const Mat A = B.sqrt_matrix(true);
            const Vec x =
                detail::project_ellipsoid(A, g.center(), g.radius(), B.sqrt_apply(s));
            return B.sqrt_apply(x, true);
        }
        case ProxFunction::Kind::indicator_metric_ball: {
            const Mat A = g.map().matrix() * B.sqrt_matrix(true);
            const Vec x =
                detail::project_ellipsoid(A, g.center(), g.radius(), B.sqrt_apply(s));
            return B.sqrt_apply(x, true);
        }
    }
    throw std::logic_error("unreachable prox kind");
}

double fixed_point_residual(const ProxFunction& g, double gamma,
                            const MetricOperator& B, const Vec& s, const Vec& h) {
    if (!g.contains(s))
        throw std::invalid_argument("fixed_point_residual requires s in dom g");
    return (prox(g, gamma, B, s + gamma * h) - s).norm();
}

}  // namespace spider
