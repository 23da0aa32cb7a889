#include "grtm/mathkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "grtm/errors.hpp"

namespace grtm {

double digamma(double x)
{
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("digamma: argument must be positive and finite, got " + std::to_string(x));
    }
    double result = 0.0;
    // Psi(x) = Psi(x + 1) - 1/x
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic series in 1/x^2 with Bernoulli-number coefficients; the
    // first omitted term is below 1e-16 at x = 10.
    const double r = 1.0 / x;
    const double r2 = r * r;
    const double series =
        r2 * (1.0 / 12 -
        r2 * (1.0 / 120 -
        r2 * (1.0 / 252 -
        r2 * (1.0 / 240 -
        r2 * (1.0 / 132 -
        r2 * (691.0 / 32760 -
        r2 * (1.0 / 12)))))));
    result += std::log(x) - 0.5 * r - series;
    return result;
}

double log_sum_exp(std::span<const double> v)
{
    if (v.empty()) {
        throw ContractError("log_sum_exp: empty input");
    }
    const double max = *std::max_element(v.begin(), v.end());
    if (std::isinf(max)) {
        return max;
    }
    double sum = 0.0;
    for (double x : v) {
        sum += std::exp(x - max);
    }
    return max + std::log(sum);
}

double log_sum_exp(const Vector& v)
{
    return log_sum_exp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Covariance Covariance::diagonal(const Vector& variances)
{
    if (variances.size() == 0) {
        throw ContractError("Covariance::diagonal: empty variance vector");
    }
    if (!variances.allFinite()) {
        throw NumericError("Covariance::diagonal: non-finite variance");
    }
    Covariance c;
    c.kind_ = CovKind::diagonal;
    c.variances_ = variances.cwiseMax(kVarianceFloor);
    c.inv_variances_ = c.variances_.cwiseInverse();
    c.log_det_ = c.variances_.array().log().sum();
    return c;
}

Covariance Covariance::full(const Matrix& cov)
{
    const auto d = cov.rows();
    if (d == 0 || cov.cols() != d) {
        throw ContractError("Covariance::full: matrix must be square and nonempty");
    }
    if (d > kMaxFullCovarianceDim) {
        throw ContractError("Covariance::full: dimension " + std::to_string(d) +
                            " exceeds the supported maximum of " + std::to_string(kMaxFullCovarianceDim));
    }
    if (!cov.allFinite()) {
        throw NumericError("Covariance::full: non-finite entry");
    }
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ContractError("Covariance::full: matrix is not symmetric");
    }
    Covariance c;
    c.kind_ = CovKind::full;
    c.full_ = 0.5 * (cov + cov.transpose());
    for (Eigen::Index i = 0; i < d; ++i) {
        c.full_(i, i) = std::max(c.full_(i, i), kVarianceFloor);
    }
    c.llt_.compute(c.full_);
    if (c.llt_.info() != Eigen::Success) {
        throw NumericError("Covariance::full: matrix is not positive definite");
    }
    const Matrix& l = c.llt_.matrixLLT();
    c.log_det_ = 2.0 * l.diagonal().array().log().sum();
    if (!std::isfinite(c.log_det_)) {
        throw NumericError("Covariance::full: matrix is not positive definite");
    }
    c.variances_ = c.full_.diagonal();
    return c;
}

Covariance Covariance::identity(int dim, CovKind kind)
{
    if (kind == CovKind::full) {
        return full(Matrix::Identity(dim, dim));
    }
    return diagonal(Vector::Ones(dim));
}

Matrix Covariance::matrix() const
{
    if (kind_ == CovKind::full) {
        return full_;
    }
    return variances_.asDiagonal();
}

double Covariance::mahalanobis_sq(const Vector& d) const
{
    if (kind_ == CovKind::diagonal) {
        return (d.array().square() * inv_variances_.array()).sum();
    }
    const Vector w = llt_.matrixL().solve(d);
    return w.squaredNorm();
}

bool Covariance::operator==(const Covariance& other) const
{
    if (kind_ != other.kind_) {
        return false;
    }
    if (kind_ == CovKind::diagonal) {
        return variances_ == other.variances_;
    }
    return full_ == other.full_;
}

double gaussian_log_density(const Vector& x, const Vector& mean, const Covariance& cov)
{
    if (x.size() != mean.size() || x.size() != cov.dim()) {
        throw ContractError("gaussian_log_density: dimension mismatch (x=" + std::to_string(x.size()) +
                            ", mean=" + std::to_string(mean.size()) +
                            ", cov=" + std::to_string(cov.dim()) + ")");
    }
    const double d = static_cast<double>(x.size());
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    return -0.5 * (d * log_2pi + cov.log_det() + cov.mahalanobis_sq(x - mean));
}

} // namespace grtm
