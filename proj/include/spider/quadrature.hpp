#pragma once

#include <cmath>
#include <numbers>

#include "spider/metric.hpp"

namespace spider::quad {

/// Physicists' Gauss-Hermite rule (weight e^{-x^2}); nodes and weights are
/// computed once per order via the Golub-Welsch tridiagonal eigenproblem
/// and cached.
struct GaussHermite {
    Vec nodes;
    Vec weights;
};

const GaussHermite& gauss_hermite(int order);

/// E_{N(a, sigma2)}[f] by Gauss-Hermite transplantation.
template <class F>
double gaussian_expectation(double a, double sigma2, F&& f, int order = 128) {
    const GaussHermite& gh = gauss_hermite(order);
    const double scale = std::sqrt(2.0 * sigma2);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < gh.nodes.size(); ++j)
        acc += gh.weights(j) * f(a + scale * gh.nodes(j));
    return acc / std::sqrt(std::numbers::pi);
}

}  // namespace spider::quad
