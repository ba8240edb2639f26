#ifndef DWT_OPTIM_HPP
#define DWT_OPTIM_HPP

#include <cstddef>
#include <vector>

#include "dwt/tensor.hpp"

namespace dwt {

// Per-parameter accumulator state; shapes mirror the parameters.
struct MomentState {
  Tensor m1;  // Adam first moment / SGD velocity
  Tensor m2;  // Adam second moment (unused by SGD)
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;

  // One update over all parameters. Weight decay enters as lr*wd*theta added
  // to the gradient of non-exempt parameters (gamma/beta are exempt).
  virtual void step(const std::vector<Parameter*>& params, double lr) = 0;

  std::size_t step_count() const { return steps_; }

 protected:
  void ensure_state(const std::vector<Parameter*>& params);
  double decayed_grad(const Parameter& p, std::size_t k, double lr) const;

  std::vector<MomentState> state_;
  std::size_t steps_ = 0;
  double weight_decay_ = 0.0;
};

class Adam : public Optimizer {
 public:
  explicit Adam(double weight_decay = 0.0, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(const std::vector<Parameter*>& params, double lr) override;

 private:
  double beta1_, beta2_, eps_;
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(double weight_decay = 0.0, double momentum = 0.9);
  void step(const std::vector<Parameter*>& params, double lr) override;

 private:
  double momentum_;
};

// Step schedule: lr, then lr*factor and lr*factor^2 at the two decay epochs
// (the 50/120 and 90/120 fractions of the budget by default).
struct LrSchedule {
  double base_lr = 1e-3;
  double factor = 0.1;
  std::size_t decay1 = 0;
  std::size_t decay2 = 0;

  static LrSchedule from_epochs(double base_lr, std::size_t epochs, double factor = 0.1);
  double at(std::size_t epoch) const;
};

}  // namespace dwt

#endif  // DWT_OPTIM_HPP
