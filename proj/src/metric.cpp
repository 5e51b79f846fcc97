#include "spider/metric.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace spider {

namespace {

void check_symmetry(const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
            const double tol = 1e-12 * (1.0 + std::abs(m(i, j)));
            if (std::abs(m(i, j) - m(j, i)) > tol) {
                std::ostringstream os;
                os << "metric operator not symmetric at (" << i << "," << j
                   << "): " << m(i, j) << " vs " << m(j, i);
                throw std::invalid_argument(os.str());
            }
        }
    }
}

}  // namespace

struct MetricOperator::Impl {
    Mat matrix;
    Mat eigvecs;
    Vec eigvals;
    double min_eig = 0.0;
    double max_eig = 0.0;
    bool diagonal = false;
    std::optional<EigenvalueBounds> declared;
};

MetricOperator::MetricOperator(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

MetricOperator::MetricOperator(Mat matrix,
                               std::optional<EigenvalueBounds> declared) {
    if (matrix.rows() == 0 || matrix.rows() != matrix.cols())
        throw std::invalid_argument("metric operator must be square and nonempty");
    check_symmetry(matrix);

    auto impl = std::make_shared<Impl>();
    impl->matrix = 0.5 * (matrix + matrix.transpose());
    impl->diagonal = impl->matrix.isDiagonal(0.0);
    if (impl->diagonal) {
        impl->eigvals = impl->matrix.diagonal();
        impl->eigvecs = Mat::Identity(matrix.rows(), matrix.cols());
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(impl->matrix);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("metric operator: eigendecomposition failed");
        impl->eigvals = es.eigenvalues();
        impl->eigvecs = es.eigenvectors();
    }
    impl->min_eig = impl->eigvals.minCoeff();
    impl->max_eig = impl->eigvals.maxCoeff();
    if (!(impl->min_eig > 1e-12 * impl->max_eig)) {
        std::ostringstream os;
        os << "metric operator not (strictly) positive definite: min eigenvalue "
           << impl->min_eig << ", max eigenvalue " << impl->max_eig;
        throw std::invalid_argument(os.str());
    }
    if (declared) {
        if (!(declared->v_min > 0.0) || declared->v_min > declared->v_max)
            throw std::invalid_argument("declared eigenvalue bounds invalid");
        const double slack = 1e-12 * declared->v_max;
        if (impl->min_eig < declared->v_min - slack ||
            impl->max_eig > declared->v_max + slack) {
            std::ostringstream os;
            os << "eigenvalues [" << impl->min_eig << "," << impl->max_eig
               << "] violate declared bounds [" << declared->v_min << ","
               << declared->v_max << "]";
            throw std::invalid_argument(os.str());
        }
        impl->declared = declared;
    }
    impl_ = std::move(impl);
}

MetricOperator MetricOperator::identity(int dim) {
    return diagonal(Vec::Ones(dim));
}

MetricOperator MetricOperator::diagonal(Vec diag,
                                        std::optional<EigenvalueBounds> declared) {
    Mat m = diag.asDiagonal();
    return MetricOperator(std::move(m), declared);
}

int MetricOperator::dim() const { return static_cast<int>(impl_->matrix.rows()); }
const Mat& MetricOperator::matrix() const { return impl_->matrix; }
const Vec& MetricOperator::eigenvalues() const { return impl_->eigvals; }
const Mat& MetricOperator::eigenvectors() const { return impl_->eigvecs; }
double MetricOperator::min_eigenvalue() const { return impl_->min_eig; }
double MetricOperator::max_eigenvalue() const { return impl_->max_eig; }
bool MetricOperator::is_diagonal() const { return impl_->diagonal; }
const std::optional<EigenvalueBounds>& MetricOperator::declared_bounds() const {
    return impl_->declared;
}

namespace {
void check_dim(const MetricOperator& B, const Vec& v) {
    if (v.size() != B.dim())
        throw std::invalid_argument("vector dimension does not match metric");
}
}  // namespace

Vec MetricOperator::apply(const Vec& v) const {
    check_dim(*this, v);
    if (impl_->diagonal) return impl_->eigvals.cwiseProduct(v);
    return impl_->matrix * v;
}

Vec MetricOperator::apply_inverse(const Vec& v) const {
    check_dim(*this, v);
    if (impl_->diagonal) return v.cwiseQuotient(impl_->eigvals);
    return impl_->eigvecs *
           (impl_->eigvecs.transpose() * v).cwiseQuotient(impl_->eigvals);
}

Vec MetricOperator::sqrt_apply(const Vec& v, bool inverse) const {
    check_dim(*this, v);
    Vec roots = impl_->eigvals.cwiseSqrt();
    if (inverse) roots = roots.cwiseInverse();
    if (impl_->diagonal) return roots.cwiseProduct(v);
    return impl_->eigvecs *
           roots.cwiseProduct(impl_->eigvecs.transpose() * v);
}

double MetricOperator::inner(const Vec& u, const Vec& v) const {
    check_dim(*this, u);
    check_dim(*this, v);
    return apply(u).dot(v);
}

double MetricOperator::norm_sq(const Vec& v) const { return inner(v, v); }

Mat MetricOperator::inverse_matrix() const {
    if (impl_->diagonal) return Mat(impl_->eigvals.cwiseInverse().asDiagonal());
    return impl_->eigvecs * impl_->eigvals.cwiseInverse().asDiagonal() *
           impl_->eigvecs.transpose();
}

Mat MetricOperator::sqrt_matrix(bool inverse) const {
    Vec roots = impl_->eigvals.cwiseSqrt();
    if (inverse) roots = roots.cwiseInverse();
    if (impl_->diagonal) return Mat(roots.asDiagonal());
    return impl_->eigvecs * roots.asDiagonal() * impl_->eigvecs.transpose();
}

MetricOperator MetricOperator::inverse_operator() const {
    auto impl = std::make_shared<Impl>();
    impl->matrix = inverse_matrix();
    impl->eigvecs = impl_->eigvecs;
    impl->eigvals = impl_->eigvals.cwiseInverse();
    impl->min_eig = 1.0 / impl_->max_eig;
    impl->max_eig = 1.0 / impl_->min_eig;
    impl->diagonal = impl_->diagonal;
    return MetricOperator(std::move(impl));
}

bool MetricOperator::same_operator(const MetricOperator& other) const {
    if (impl_ == other.impl_) return true;
    return impl_->matrix.rows() == other.impl_->matrix.rows() &&
           impl_->matrix == other.impl_->matrix;
}

double b_inner(const MetricOperator& B, const Vec& u, const Vec& v) {
    return B.inner(u, v);
}

double b_norm_sq(const MetricOperator& B, const Vec& v) { return B.norm_sq(v); }

Vec apply_inverse(const MetricOperator& B, const Vec& v) {
    return B.apply_inverse(v);
}

Vec sqrt_apply(const MetricOperator& B, const Vec& v, bool inverse) {
    return B.sqrt_apply(v, inverse);
}

SmoothnessProfile SmoothnessProfile::from_components(Vec per_component,
                                                     double gradient_lipschitz,
                                                     double v_min, double v_max) {
    SmoothnessProfile p;
    p.aggregate_L = std::sqrt(per_component.squaredNorm() /
                              static_cast<double>(per_component.size()));
    p.per_component_lipschitz = std::move(per_component);
    p.gradient_lipschitz = gradient_lipschitz;
    p.v_min = v_min;
    p.v_max = v_max;
    p.validate();
    return p;
}

void SmoothnessProfile::validate() const {
    if (per_component_lipschitz.size() > 0) {
        if ((per_component_lipschitz.array() <= 0.0).any())
            throw std::invalid_argument("Lipschitz constants must be positive");
        const double mean_sq = per_component_lipschitz.squaredNorm() /
                               static_cast<double>(per_component_lipschitz.size());
        if (std::abs(aggregate_L * aggregate_L - mean_sq) >
            1e-12 * (1.0 + mean_sq))
            throw std::invalid_argument(
                "aggregate_L^2 must equal the mean of squared component constants");
    }
    if (!(aggregate_L > 0.0) || !(gradient_lipschitz > 0.0))
        throw std::invalid_argument("smoothness constants must be positive");
    if (!(v_min > 0.0) || v_min > v_max)
        throw std::invalid_argument("metric bounds must satisfy 0 < v_min <= v_max");
}

}  // namespace spider
