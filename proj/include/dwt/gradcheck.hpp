#ifndef DWT_GRADCHECK_HPP
#define DWT_GRADCHECK_HPP

#include <functional>

#include "dwt/tensor.hpp"

namespace dwt {

using ScalarFn = std::function<double(const Tensor&)>;

// Central-difference gradient (f(x+h*e_k) - f(x-h*e_k)) / (2h) per
// coordinate. Throws EvaluationError if f returns a non-finite value.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h = 1e-5);

// |a-b| / max(|a|, |b|, 1e-8); the floor keeps near-zero gradients from
// blowing up the quotient.
double relative_error(double a, double b);

// Max relative error over all coordinates.
double max_relative_error(const Tensor& a, const Tensor& b);

}  // namespace dwt

#endif  // DWT_GRADCHECK_HPP
