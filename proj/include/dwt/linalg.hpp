#ifndef DWT_LINALG_HPP
#define DWT_LINALG_HPP

#include "dwt/tensor.hpp"

namespace dwt {

// Standard matrix product; inner dimensions must agree.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// Lower Cholesky factor L with L*L^T = sigma and a strictly positive
// diagonal. sigma must be symmetric within 1e-9 (relative to its largest
// entry) and positive definite; a non-positive pivot throws
// NotPositiveDefiniteError with the failing index.
Tensor cholesky_lower(const Tensor& sigma);

// Solves L*x = b by forward substitution; b may have multiple columns.
// Throws SingularMatrixError on a zero diagonal entry.
Tensor tri_solve_lower(const Tensor& lower, const Tensor& b);

double frobenius_norm(const Tensor& a);

// Determinant via LU with partial pivoting (used for invertibility checks).
double determinant(const Tensor& a);

}  // namespace dwt

#endif  // DWT_LINALG_HPP
