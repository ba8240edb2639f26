#ifndef DWT_WHITENING_HPP
#define DWT_WHITENING_HPP

#include <cstddef>
#include <vector>

#include "dwt/layer.hpp"
#include "dwt/tensor.hpp"

namespace dwt {

// Per-group first and second order batch statistics. sigma already carries
// the epsilon shrinkage on its diagonal, so it is symmetric positive
// definite by construction.
struct BatchStats {
  Tensor mu;     // length g
  Tensor sigma;  // g x g
  std::size_t count = 0;
};

// Per-group mean and biased (1/m) covariance of a batch, plus epsilon*I.
// Features are grouped contiguously: group j covers columns [j*g, (j+1)*g).
// m must be >= 2 and g must divide the feature count.
std::vector<BatchStats> batch_stats(const Tensor& batch, std::size_t g, double epsilon);

// W = L^{-1} with L the lower Cholesky factor of stats.sigma, so that
// W * sigma * W^T = I and W^T * W = sigma^{-1}. Lower-triangular.
Tensor whitening_matrix(const BatchStats& stats);

// Batch whitening: per group x_hat = L^{-1} (x - mu) via triangular solve,
// then the per-feature affine map gamma * x_hat + beta. stats must cover all
// features in order.
Tensor bw_forward(const Tensor& batch, const std::vector<BatchStats>& stats,
                  const Tensor& gamma, const Tensor& beta);

// Domain-specific whitening layer. Train mode whitens with the statistics of
// the incoming batch and folds them into the running average of the batch's
// domain; eval mode whitens with the stored running statistics.
class DwtLayer : public Layer {
 public:
  DwtLayer(std::size_t features, std::size_t group_size, double epsilon = 1e-5,
           double rho = 0.1);

  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::string name() const override;

  std::size_t features() const { return d_; }
  std::size_t group_size() const { return g_; }
  std::size_t groups() const { return d_ / g_; }
  double epsilon() const { return epsilon_; }
  double rho() const { return rho_; }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }

  bool has_running_stats(DomainTag domain) const;
  const std::vector<BatchStats>& running_stats(DomainTag domain) const;
  void set_running_stats(DomainTag domain, std::vector<BatchStats> stats);

  // stored <- (1-rho)*stored + rho*fresh, elementwise on mu and sigma.
  void update_running_stats(DomainTag domain, const std::vector<BatchStats>& fresh);

  // Instrumentation for tests: statistics and row count of the last
  // train-mode forward, and how many train-mode forwards each domain saw.
  const std::vector<BatchStats>& last_batch_stats() const { return last_stats_; }
  std::size_t last_train_rows() const { return last_train_rows_; }
  std::size_t train_forward_count(DomainTag domain) const;

 protected:
  Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) override;
  Tensor backward_impl(const Tensor& grad_output) override;

 private:
  std::size_t d_;
  std::size_t g_;
  double epsilon_;
  double rho_;
  Parameter gamma_;
  Parameter beta_;

  std::vector<BatchStats> running_source_;
  std::vector<BatchStats> running_target_;
  bool source_initialized_ = false;
  bool target_initialized_ = false;

  // Backward cache.
  Mode cached_mode_ = Mode::Train;
  Tensor cached_centered_;            // m x d
  Tensor cached_whitened_;            // m x d, pre-affine
  std::vector<Tensor> cached_chol_;   // per group, g x g lower

  std::vector<BatchStats> last_stats_;
  std::size_t last_train_rows_ = 0;
  std::size_t train_forwards_source_ = 0;
  std::size_t train_forwards_target_ = 0;
};

}  // namespace dwt

#endif  // DWT_WHITENING_HPP
