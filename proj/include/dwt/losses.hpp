#ifndef DWT_LOSSES_HPP
#define DWT_LOSSES_HPP

#include <cstddef>
#include <vector>

#include "dwt/tensor.hpp"

namespace dwt {

// m x C matrix of per-sample log class posteriors. Every row is a normalized
// distribution in log space (logsumexp 0 within 1e-9), checked on
// construction.
class LogProbs {
 public:
  static LogProbs from_log_matrix(Tensor log_matrix);

  const Tensor& matrix() const { return lp_; }
  std::size_t samples() const { return lp_.rows(); }
  std::size_t classes() const { return lp_.cols(); }
  double operator()(std::size_t i, std::size_t y) const { return lp_(i, y); }

 private:
  explicit LogProbs(Tensor lp) : lp_(std::move(lp)) {}
  Tensor lp_;
  friend LogProbs log_softmax(const Tensor& logits);
};

// Scalar loss plus its gradient with respect to each LogProbs input, in the
// order the inputs were passed. Entries of the log-prob matrices are treated
// as free variables; composing with the log_softmax backward yields the
// logit-space gradient.
struct LossValue {
  double value = 0.0;
  std::vector<Tensor> grads;
};

// Numerically stable (max-subtracted) row-wise log-softmax.
LogProbs log_softmax(const Tensor& logits);

// Chain rule through log_softmax: given d(loss)/d(log p), returns
// d(loss)/d(logits).
Tensor log_softmax_backward(const Tensor& grad_log_probs, const LogProbs& lp);

// Mean negative log-likelihood of the true labels (labels are 0-based).
LossValue cross_entropy(const LogProbs& lp, const std::vector<std::size_t>& labels);

// Mean Shannon entropy of the predictions.
LossValue entropy_loss(const LogProbs& lp);

// Mean squared distance between the two prediction rows in probability
// space; the consistency baseline.
LossValue consistency_l2(const LogProbs& lp1, const LogProbs& lp2);

// Min-Entropy Consensus: per row -1/2 max_y (log p1(y) + log p2(y)),
// averaged over rows. The gradient flows only through the winning class.
LossValue mec_loss(const LogProbs& lp1, const LogProbs& lp2);

// The class whose summed log-posteriors are largest; ties break toward the
// smallest index.
std::size_t mec_pseudo_label(const LogProbs& lp1, const LogProbs& lp2, std::size_t row);

// L = ls + lambda*lt with gradients scaled to match; grads holds ls's
// gradients followed by lambda-scaled lt gradients.
LossValue total_loss(const LossValue& ls, const LossValue& lt, double lambda);

}  // namespace dwt

#endif  // DWT_LOSSES_HPP
