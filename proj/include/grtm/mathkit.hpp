#pragma once

#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace grtm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Smallest variance any covariance may carry.
inline constexpr double kVarianceFloor = 1e-6;
// Full covariances are only supported up to this feature dimension.
inline constexpr int kMaxFullCovarianceDim = 64;

/// Digamma function Psi(x) for x > 0. Throws std::domain_error otherwise.
double digamma(double x);

/// log(sum(exp(v))) computed around the maximum entry. Throws ContractError on empty input.
double log_sum_exp(std::span<const double> v);
double log_sum_exp(const Vector& v);

enum class CovKind { diagonal, full };

/**
 * Gaussian covariance, either a vector of per-dimension variances or a dense
 * symmetric positive definite matrix. Construction floors variances at
 * kVarianceFloor and, for the full kind, factorizes the matrix once so that
 * densities are evaluated against the cached Cholesky factor.
 */
class Covariance {
public:
    Covariance() = default;

    static Covariance diagonal(const Vector& variances);
    // Throws NumericError when the matrix is not positive definite.
    static Covariance full(const Matrix& cov);
    static Covariance identity(int dim, CovKind kind = CovKind::diagonal);

    CovKind kind() const noexcept { return kind_; }
    int dim() const noexcept { return static_cast<int>(variances_.size()); }

    // Diagonal of the covariance (for both kinds).
    const Vector& variances() const noexcept { return variances_; }
    // Dense matrix; for the diagonal kind this materializes diag(variances).
    Matrix matrix() const;

    double log_det() const noexcept { return log_det_; }
    // (d^T Sigma^{-1} d)
    double mahalanobis_sq(const Vector& d) const;

    bool operator==(const Covariance& other) const;

private:
    CovKind kind_ = CovKind::diagonal;
    Vector variances_;
    Vector inv_variances_;
    Matrix full_;
    Eigen::LLT<Matrix> llt_;
    double log_det_ = 0.0;
};

/// log N(x | mean, cov). Throws ContractError on dimension mismatch.
double gaussian_log_density(const Vector& x, const Vector& mean, const Covariance& cov);

} // namespace grtm
