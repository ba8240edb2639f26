#include "dwt/linalg.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dwt {

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(k) + " and " +
                     std::to_string(b.rows()) + " do not agree");
  }
  Tensor c({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) c(i, j) += aip * b(p, j);
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  const std::size_t n = a.rows(), m = a.cols();
  Tensor t({m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) t(j, i) = a(i, j);
  return t;
}

Tensor cholesky_lower(const Tensor& sigma) {
  const std::size_t n = sigma.rows();
  if (sigma.cols() != n) throw ShapeError("cholesky_lower: matrix not square");

  double scale = max_abs(sigma);
  if (scale == 0.0) scale = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::fabs(sigma(i, j) - sigma(j, i)) > 1e-9 * scale) {
        throw ShapeError("cholesky_lower: matrix not symmetric at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }

  Tensor lower({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    double diag = sigma(j, j);
    for (std::size_t p = 0; p < j; ++p) diag -= lower(j, p) * lower(j, p);
    if (diag <= 0.0 || !std::isfinite(diag)) throw NotPositiveDefiniteError(j);
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = sigma(i, j);
      for (std::size_t p = 0; p < j; ++p) v -= lower(i, p) * lower(j, p);
      lower(i, j) = v / ljj;
    }
  }
  return lower;
}

Tensor tri_solve_lower(const Tensor& lower, const Tensor& b) {
  const std::size_t n = lower.rows();
  if (lower.cols() != n) throw ShapeError("tri_solve_lower: matrix not square");
  if (b.rows() != n) throw ShapeError("tri_solve_lower: row counts do not agree");

  const std::size_t m = b.cols();
  Tensor x({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    if (lower(i, i) == 0.0) {
      throw SingularMatrixError("tri_solve_lower: zero diagonal at row " +
                                std::to_string(i));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double v = b(i, j);
      for (std::size_t p = 0; p < i; ++p) v -= lower(i, p) * x(p, j);
      x(i, j) = v / lower(i, i);
    }
  }
  return x;
}

double frobenius_norm(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

double determinant(const Tensor& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("determinant: matrix not square");
  Tensor lu = a;
  double det = 1.0;
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t piv = j;
    for (std::size_t i = j + 1; i < n; ++i)
      if (std::fabs(lu(rows[i], j)) > std::fabs(lu(rows[piv], j))) piv = i;
    if (piv != j) {
      std::swap(rows[piv], rows[j]);
      det = -det;
    }
    const double d = lu(rows[j], j);
    if (d == 0.0) return 0.0;
    det *= d;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double f = lu(rows[i], j) / d;
      for (std::size_t k = j; k < n; ++k) lu(rows[i], k) -= f * lu(rows[j], k);
    }
  }
  return det;
}

}  // namespace dwt
