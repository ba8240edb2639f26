#include "dwt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dwt {

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw ParameterError("finite_diff_grad: h must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = probe[k];
    probe[k] = orig + h;
    const double fp = f(probe);
    probe[k] = orig - h;
    const double fm = f(probe);
    probe[k] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw EvaluationError("finite_diff_grad: non-finite function value at coordinate " +
                            std::to_string(k));
    }
    grad[k] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double relative_error(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / denom;
}

double max_relative_error(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_relative_error: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, relative_error(a[i], b[i]));
  return m;
}

}  // namespace dwt
