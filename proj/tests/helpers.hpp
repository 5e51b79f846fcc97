#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "spider/metric.hpp"
#include "spider/prox.hpp"
#include "spider/rng.hpp"

namespace testutil {

using spider::Mat;
using spider::Vec;

// subgradient certificate residual per catalog kind: how far
// -gamma^{-1} B (p - s) is from lying in the subdifferential of g at p
inline double certificate_residual(const spider::ProxFunction& g, double gamma,
                                   const spider::MetricOperator& B, const Vec& s,
                                   const Vec& p) {
    using Kind = spider::ProxFunction::Kind;
    const Vec grad_term = B.apply(s - p) / gamma;
    switch (g.kind()) {
        case Kind::zero:
            return grad_term.norm();
        case Kind::l1: {
            double res = 0.0;
            for (Eigen::Index j = 0; j < p.size(); ++j) {
                const double v = grad_term(j);
                if (p(j) > 0.0)
                    res = std::max(res, std::abs(v - g.weight()));
                else if (p(j) < 0.0)
                    res = std::max(res, std::abs(v + g.weight()));
                else
                    res = std::max(res, std::max(0.0, std::abs(v) - g.weight()));
            }
            return res;
        }
        case Kind::indicator_ball: {
            const Vec radial = p - g.center();
            const double dist = radial.norm();
            if (dist < g.radius() * (1.0 - 1e-9)) return grad_term.norm();
            const Vec normal = radial / dist;
            const double scale = grad_term.dot(normal);
            double res = (grad_term - scale * normal).norm();
            if (scale < -1e-10) res = std::max(res, -scale);
            return std::max(res, std::abs(dist - g.radius()));
        }
        case Kind::indicator_metric_ball: {
            const Vec mapped = g.map().apply(p) - g.center();
            const double dist = mapped.norm();
            if (dist < g.radius() * (1.0 - 1e-9)) return grad_term.norm();
            const Vec normal_dir = g.map().apply(mapped);
            const Vec normal = normal_dir / normal_dir.norm();
            const double scale = grad_term.dot(normal);
            double res = (grad_term - scale * normal).norm();
            if (scale < -1e-10) res = std::max(res, -scale);
            return std::max(res, std::abs(dist - g.radius()));
        }
    }
    return 0.0;
}

// random SPD matrix with eigenvalues in [lo, hi]
inline Mat random_spd(int q, spider::rng::Stream& stream, double lo = 0.5,
                      double hi = 2.0) {
    Mat gauss(q, q);
    for (int r = 0; r < q; ++r)
        for (int c = 0; c < q; ++c) gauss(r, c) = stream.gaussian();
    const Eigen::HouseholderQR<Mat> qr(gauss);
    const Mat orth = qr.householderQ();
    Vec eigs(q);
    for (int r = 0; r < q; ++r) eigs(r) = lo + (hi - lo) * stream.uniform();
    return orth * eigs.asDiagonal() * orth.transpose();
}

inline Vec random_vec(int q, spider::rng::Stream& stream, double scale = 1.0) {
    Vec v(q);
    for (int r = 0; r < q; ++r) v(r) = scale * stream.gaussian();
    return v;
}

// two-sample Kolmogorov-Smirnov statistic
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] <= b[ib])
            ++ia;
        else
            ++ib;
        const double fa = static_cast<double>(ia) / a.size();
        const double fb = static_cast<double>(ib) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

inline double ks_critical(double c_alpha, std::size_t n, std::size_t m) {
    return c_alpha * std::sqrt(static_cast<double>(n + m) /
                               (static_cast<double>(n) * static_cast<double>(m)));
}

// independent oracle for PG(1, c): truncated sum-of-gammas representation
//   omega = (1 / (2 pi^2)) sum_k g_k / ((k - 1/2)^2 + c^2 / (4 pi^2))
inline double pg1_series_oracle(double c, spider::rng::Stream& stream,
                                int terms = 500) {
    const double pi = std::numbers::pi;
    const double shift = c * c / (4.0 * pi * pi);
    double acc = 0.0;
    for (int k = 1; k <= terms; ++k) {
        const double denom = (k - 0.5) * (k - 0.5) + shift;
        acc += stream.exponential() / denom;
    }
    return acc / (2.0 * pi * pi);
}

struct SampleStats {
    double mean = 0.0;
    double stderr_mean = 0.0;
};

inline SampleStats sample_stats(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    SampleStats s;
    s.mean = mean;
    s.stderr_mean = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

// high-resolution trapezoid oracle for the latent posterior mean
//   I(a, c, sigma2) = E_pi[z],  pi(z) ∝ exp(-(z-a)^2/(2 s2)) / (1 + e^{-cz})
inline double trapezoid_posterior_mean(double a, double c, double sigma2,
                                       long nodes = 1000001) {
    const double sd = std::sqrt(sigma2);
    const double lo = a - 40.0 * sd;
    const double hi = a + 40.0 * sd;
    const double h = (hi - lo) / static_cast<double>(nodes - 1);
    long double num = 0.0L;
    long double den = 0.0L;
    for (long j = 0; j < nodes; ++j) {
        const double z = lo + h * static_cast<double>(j);
        const double logistic =
            c * z >= 0.0 ? 1.0 / (1.0 + std::exp(-c * z))
                         : std::exp(c * z) / (1.0 + std::exp(c * z));
        const double gauss = std::exp(-0.5 * (z - a) * (z - a) / sigma2);
        const double w = (j == 0 || j == nodes - 1) ? 0.5 : 1.0;
        num += static_cast<long double>(w * z * logistic * gauss);
        den += static_cast<long double>(w * logistic * gauss);
    }
    return static_cast<double>(num / den);
}

}  // namespace testutil
