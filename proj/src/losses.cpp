#include "dwt/losses.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace dwt {

namespace {

double logsumexp_row(const Tensor& m, std::size_t i) {
  const std::size_t c = m.cols();
  double mx = m(i, 0);
  for (std::size_t y = 1; y < c; ++y) mx = std::max(mx, m(i, y));
  double s = 0.0;
  for (std::size_t y = 0; y < c; ++y) s += std::exp(m(i, y) - mx);
  return mx + std::log(s);
}

void check_same_shape(const LogProbs& a, const LogProbs& b, const char* op) {
  if (!a.matrix().same_shape(b.matrix()))
    throw ShapeError(std::string(op) + ": prediction shapes differ");
}

}  // namespace

LogProbs LogProbs::from_log_matrix(Tensor log_matrix) {
  if (log_matrix.rank() != 2) throw ShapeError("LogProbs: matrix must be m x C");
  for (std::size_t i = 0; i < log_matrix.rows(); ++i) {
    if (std::fabs(logsumexp_row(log_matrix, i)) > 1e-9) {
      throw ShapeError("LogProbs: row " + std::to_string(i) +
                       " is not a normalized log distribution");
    }
  }
  return LogProbs(std::move(log_matrix));
}

LogProbs log_softmax(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("log_softmax: logits must be m x C");
  if (!logits.all_finite()) throw ParameterError("log_softmax: non-finite logits");
  const std::size_t m = logits.rows(), c = logits.cols();
  Tensor lp({m, c});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = logits(i, 0);
    for (std::size_t y = 1; y < c; ++y) mx = std::max(mx, logits(i, y));
    double s = 0.0;
    for (std::size_t y = 0; y < c; ++y) s += std::exp(logits(i, y) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t y = 0; y < c; ++y) lp(i, y) = logits(i, y) - lse;
  }
  return LogProbs(std::move(lp));
}

Tensor log_softmax_backward(const Tensor& grad_log_probs, const LogProbs& lp) {
  if (!grad_log_probs.same_shape(lp.matrix()))
    throw ShapeError("log_softmax_backward: gradient shape mismatch");
  const std::size_t m = lp.samples(), c = lp.classes();
  Tensor grad({m, c});
  for (std::size_t i = 0; i < m; ++i) {
    double row_sum = 0.0;
    for (std::size_t y = 0; y < c; ++y) row_sum += grad_log_probs(i, y);
    for (std::size_t y = 0; y < c; ++y)
      grad(i, y) = grad_log_probs(i, y) - std::exp(lp(i, y)) * row_sum;
  }
  return grad;
}

LossValue cross_entropy(const LogProbs& lp, const std::vector<std::size_t>& labels) {
  const std::size_t m = lp.samples(), c = lp.classes();
  if (labels.size() != m) throw ShapeError("cross_entropy: label count mismatch");
  LossValue out;
  Tensor grad({m, c});
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] >= c) {
      throw LabelError("cross_entropy: label " + std::to_string(labels[i]) +
                       " out of range for " + std::to_string(c) + " classes");
    }
    out.value -= lp(i, labels[i]);
    grad(i, labels[i]) = -1.0 / static_cast<double>(m);
  }
  out.value /= static_cast<double>(m);
  out.grads.push_back(std::move(grad));
  return out;
}

LossValue entropy_loss(const LogProbs& lp) {
  const std::size_t m = lp.samples(), c = lp.classes();
  LossValue out;
  Tensor grad({m, c});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t y = 0; y < c; ++y) {
      const double p = std::exp(lp(i, y));
      if (p == 0.0) continue;  // lim p->0 of p*log(p) is 0
      out.value -= p * lp(i, y);
      grad(i, y) = -p * (lp(i, y) + 1.0) / static_cast<double>(m);
    }
  }
  out.value /= static_cast<double>(m);
  out.grads.push_back(std::move(grad));
  return out;
}

LossValue consistency_l2(const LogProbs& lp1, const LogProbs& lp2) {
  check_same_shape(lp1, lp2, "consistency_l2");
  const std::size_t m = lp1.samples(), c = lp1.classes();
  LossValue out;
  Tensor g1({m, c}), g2({m, c});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t y = 0; y < c; ++y) {
      const double p1 = std::exp(lp1(i, y));
      const double p2 = std::exp(lp2(i, y));
      const double diff = p1 - p2;
      out.value += diff * diff;
      g1(i, y) = 2.0 * diff * p1 / static_cast<double>(m);
      g2(i, y) = -2.0 * diff * p2 / static_cast<double>(m);
    }
  }
  out.value /= static_cast<double>(m);
  out.grads.push_back(std::move(g1));
  out.grads.push_back(std::move(g2));
  return out;
}

LossValue mec_loss(const LogProbs& lp1, const LogProbs& lp2) {
  check_same_shape(lp1, lp2, "mec_loss");
  const std::size_t m = lp1.samples(), c = lp1.classes();
  LossValue out;
  Tensor g1({m, c}), g2({m, c});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t z = mec_pseudo_label(lp1, lp2, i);
    out.value -= 0.5 * (lp1(i, z) + lp2(i, z));
    g1(i, z) = -0.5 / static_cast<double>(m);
    g2(i, z) = -0.5 / static_cast<double>(m);
  }
  out.value /= static_cast<double>(m);
  out.grads.push_back(std::move(g1));
  out.grads.push_back(std::move(g2));
  return out;
}

std::size_t mec_pseudo_label(const LogProbs& lp1, const LogProbs& lp2, std::size_t row) {
  check_same_shape(lp1, lp2, "mec_pseudo_label");
  const std::size_t c = lp1.classes();
  std::size_t best = 0;
  double best_sum = lp1(row, 0) + lp2(row, 0);
  for (std::size_t y = 1; y < c; ++y) {
    const double s = lp1(row, y) + lp2(row, y);
    if (s > best_sum) {
      best_sum = s;
      best = y;
    }
  }
  return best;
}

LossValue total_loss(const LossValue& ls, const LossValue& lt, double lambda) {
  if (lambda < 0.0) throw ParameterError("total_loss: lambda must be nonnegative");
  LossValue out;
  out.value = ls.value + lambda * lt.value;
  for (const Tensor& g : ls.grads) out.grads.push_back(g);
  for (const Tensor& g : lt.grads) out.grads.push_back(g * lambda);
  return out;
}

}  // namespace dwt
