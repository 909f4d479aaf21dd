#pragma once

#include "vaecme/core/complex_tensor.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace vaecme {

using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

/// Raised when a numerical routine cannot produce a trustworthy result
/// (failed factorization, indefinite covariance).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

MatrixXc to_eigen(const ComplexTensor& m);
VectorXc to_eigen_vector(const ComplexTensor& v);
ComplexTensor from_eigen(const MatrixXc& m);
ComplexTensor from_eigen_vector(const VectorXc& v);

/// Solves (M) x = b for Hermitian positive definite M by Cholesky. On failure
/// retries once with `ridge` * mean(diag) added to the diagonal and sets
/// `regularized`; throws NumericalError if that fails too.
MatrixXc hpd_solve(const MatrixXc& m, const MatrixXc& b, double ridge, bool* regularized = nullptr);

/// Lower Cholesky factor with the same single-retry policy.
MatrixXc hpd_cholesky(const MatrixXc& m, double ridge, bool* regularized = nullptr);

} // namespace vaecme
