#include "spider/quadrature.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace spider::quad {

namespace {

GaussHermite compute(int order) {
    if (order < 1) throw std::invalid_argument("gauss_hermite: order >= 1");
    Mat jacobi = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double beta = std::sqrt(0.5 * static_cast<double>(k));
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("gauss_hermite: eigendecomposition failed");
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights = Vec(order);
    const double mu0 = std::sqrt(std::numbers::pi);  // integral of e^{-x^2}
    for (int j = 0; j < order; ++j) {
        const double v = es.eigenvectors()(0, j);
        gh.weights(j) = mu0 * v * v;
    }
    return gh;
}

}  // namespace

const GaussHermite& gauss_hermite(int order) {
    static std::mutex mutex;
    static std::map<int, GaussHermite> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute(order)).first;
    return it->second;
}

}  // namespace spider::quad
