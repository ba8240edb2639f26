#include "dwt/optim.hpp"

#include <cmath>

namespace dwt {

void Optimizer::ensure_state(const std::vector<Parameter*>& params) {
  if (!state_.empty()) {
    if (state_.size() != params.size())
      throw StateError("optimizer: parameter structure changed between steps");
    return;
  }
  state_.reserve(params.size());
  for (const Parameter* p : params) {
    MomentState s;
    s.m1 = Tensor(p->value.shape());
    s.m2 = Tensor(p->value.shape());
    state_.push_back(std::move(s));
  }
}

double Optimizer::decayed_grad(const Parameter& p, std::size_t k, double lr) const {
  double g = p.grad[k];
  if (!p.weight_decay_exempt && weight_decay_ > 0.0) g += lr * weight_decay_ * p.value[k];
  return g;
}

Adam::Adam(double weight_decay, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  weight_decay_ = weight_decay;
}

void Adam::step(const std::vector<Parameter*>& params, double lr) {
  ensure_state(params);
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(beta1_, t);
  const double bc2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    MomentState& s = state_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = decayed_grad(p, k, lr);
      s.m1[k] = beta1_ * s.m1[k] + (1.0 - beta1_) * g;
      s.m2[k] = beta2_ * s.m2[k] + (1.0 - beta2_) * g * g;
      const double m_hat = s.m1[k] / bc1;
      const double v_hat = s.m2[k] / bc2;
      p.value[k] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

Sgd::Sgd(double weight_decay, double momentum) : momentum_(momentum) {
  weight_decay_ = weight_decay;
}

void Sgd::step(const std::vector<Parameter*>& params, double lr) {
  ensure_state(params);
  ++steps_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    MomentState& s = state_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = decayed_grad(p, k, lr);
      s.m1[k] = momentum_ * s.m1[k] + g;
      p.value[k] -= lr * s.m1[k];
    }
  }
}

LrSchedule LrSchedule::from_epochs(double base_lr, std::size_t epochs, double factor) {
  LrSchedule s;
  s.base_lr = base_lr;
  s.factor = factor;
  s.decay1 = epochs * 50 / 120;
  s.decay2 = epochs * 90 / 120;
  return s;
}

double LrSchedule::at(std::size_t epoch) const {
  if (epoch >= decay2) return base_lr * factor * factor;
  if (epoch >= decay1) return base_lr * factor;
  return base_lr;
}

}  // namespace dwt
