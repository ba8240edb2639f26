#include "dwt/whitening.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dwt/linalg.hpp"

namespace dwt {

namespace {

void check_grouping(std::size_t d, std::size_t g) {
  if (g == 0 || d % g != 0) {
    throw ShapeError("group size " + std::to_string(g) + " does not divide feature count " +
                     std::to_string(d));
  }
}

// Lower Cholesky with the degenerate-batch fallback: one retry with the
// shrinkage bumped to 10*epsilon before giving up.
Tensor cholesky_with_retry(Tensor sigma, double epsilon) {
  try {
    return cholesky_lower(sigma);
  } catch (const NotPositiveDefiniteError&) {
    for (std::size_t i = 0; i < sigma.rows(); ++i) sigma(i, i) += 9.0 * epsilon;
    return cholesky_lower(sigma);
  }
}

// Shared grouped-whitening core. Writes centered and whitened (pre-affine)
// activations and the per-group Cholesky factors for the backward pass.
Tensor whiten_batch(const Tensor& batch, const std::vector<BatchStats>& stats,
                    const Tensor& gamma, const Tensor& beta, Tensor* centered_out,
                    Tensor* whitened_out, std::vector<Tensor>* chol_out,
                    double epsilon) {
  const std::size_t m = batch.rows(), d = batch.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw ShapeError("whitening affine parameters do not match feature count");
  }
  if (stats.empty() || d % stats.size() != 0) {
    throw ShapeError("whitening statistics do not cover the features");
  }
  const std::size_t g = d / stats.size();

  Tensor centered({m, d});
  Tensor whitened({m, d});
  if (chol_out) chol_out->clear();

  for (std::size_t group = 0; group < stats.size(); ++group) {
    const BatchStats& st = stats[group];
    if (st.mu.size() != g || st.sigma.rows() != g || st.sigma.cols() != g) {
      throw ShapeError("whitening statistics for group " + std::to_string(group) +
                       " have the wrong size");
    }
    const std::size_t c0 = group * g;

    // (x - mu)^T laid out g x m so one triangular solve whitens the group.
    Tensor rhs({g, m});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < g; ++k) {
        const double c = batch(i, c0 + k) - st.mu[k];
        centered(i, c0 + k) = c;
        rhs(k, i) = c;
      }

    Tensor lower = cholesky_with_retry(st.sigma, epsilon);
    Tensor solved = tri_solve_lower(lower, rhs);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < g; ++k) whitened(i, c0 + k) = solved(k, i);

    if (chol_out) chol_out->push_back(std::move(lower));
  }

  Tensor out({m, d});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < d; ++k)
      out(i, k) = gamma[k] * whitened(i, k) + beta[k];

  if (centered_out) *centered_out = std::move(centered);
  if (whitened_out) *whitened_out = std::move(whitened);
  return out;
}

// tril with halved diagonal, the mask of the Cholesky differential.
Tensor phi(const Tensor& a) {
  const std::size_t n = a.rows();
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) out(i, j) = a(i, j);
    out(i, i) = 0.5 * a(i, i);
  }
  return out;
}

}  // namespace

std::vector<BatchStats> batch_stats(const Tensor& batch, std::size_t g, double epsilon) {
  if (batch.rank() != 2) throw ShapeError("batch_stats: batch must be m x d");
  const std::size_t m = batch.rows(), d = batch.cols();
  if (m < 2) throw DegenerateBatchError("batch_stats: need at least 2 samples, got " +
                                        std::to_string(m));
  check_grouping(d, g);
  if (epsilon < 0.0) throw ParameterError("batch_stats: epsilon must be nonnegative");

  std::vector<BatchStats> all;
  all.reserve(d / g);
  for (std::size_t c0 = 0; c0 < d; c0 += g) {
    BatchStats st;
    st.count = m;
    st.mu = Tensor({g});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < g; ++k) st.mu[k] += batch(i, c0 + k);
    for (std::size_t k = 0; k < g; ++k) st.mu[k] /= static_cast<double>(m);

    st.sigma = Tensor({g, g});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t a = 0; a < g; ++a) {
        const double ca = batch(i, c0 + a) - st.mu[a];
        for (std::size_t b = 0; b <= a; ++b) {
          st.sigma(a, b) += ca * (batch(i, c0 + b) - st.mu[b]);
        }
      }
    }
    for (std::size_t a = 0; a < g; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        st.sigma(a, b) /= static_cast<double>(m);
        st.sigma(b, a) = st.sigma(a, b);
      }
      st.sigma(a, a) += epsilon;
    }
    all.push_back(std::move(st));
  }
  return all;
}

Tensor whitening_matrix(const BatchStats& stats) {
  const Tensor lower = cholesky_lower(stats.sigma);
  return tri_solve_lower(lower, Tensor::identity(lower.rows()));
}

Tensor bw_forward(const Tensor& batch, const std::vector<BatchStats>& stats,
                  const Tensor& gamma, const Tensor& beta) {
  if (batch.rank() != 2) throw ShapeError("bw_forward: batch must be m x d");
  return whiten_batch(batch, stats, gamma, beta, nullptr, nullptr, nullptr, 0.0);
}

DwtLayer::DwtLayer(std::size_t features, std::size_t group_size, double epsilon, double rho)
    : d_(features),
      g_(group_size),
      epsilon_(epsilon),
      rho_(rho),
      gamma_(Tensor::full({features}, 1.0), /*exempt=*/true),
      beta_(Tensor::zeros({features}), /*exempt=*/true) {
  check_grouping(d_, g_);
  if (epsilon_ < 0.0) throw ParameterError("DwtLayer: epsilon must be nonnegative");
  if (rho_ < 0.0 || rho_ > 1.0) throw ParameterError("DwtLayer: rho must lie in [0,1]");

  // Identity prior so the running average is defined from the first update;
  // the initialized flags gate eval-mode use.
  std::vector<BatchStats> prior;
  for (std::size_t j = 0; j < groups(); ++j) {
    BatchStats st;
    st.mu = Tensor({g_});
    st.sigma = Tensor::identity(g_);
    st.count = 0;
    prior.push_back(std::move(st));
  }
  running_source_ = prior;
  running_target_ = std::move(prior);
}

std::string DwtLayer::name() const {
  return (g_ == 1 ? std::string("bn(d=") : std::string("dwt(d=")) + std::to_string(d_) +
         ",g=" + std::to_string(g_) + ")";
}

bool DwtLayer::has_running_stats(DomainTag domain) const {
  return domain == DomainTag::Source ? source_initialized_ : target_initialized_;
}

const std::vector<BatchStats>& DwtLayer::running_stats(DomainTag domain) const {
  return domain == DomainTag::Source ? running_source_ : running_target_;
}

void DwtLayer::set_running_stats(DomainTag domain, std::vector<BatchStats> stats) {
  if (stats.size() != groups()) throw ShapeError("set_running_stats: wrong group count");
  if (domain == DomainTag::Source) {
    running_source_ = std::move(stats);
    source_initialized_ = true;
  } else {
    running_target_ = std::move(stats);
    target_initialized_ = true;
  }
}

void DwtLayer::update_running_stats(DomainTag domain, const std::vector<BatchStats>& fresh) {
  if (fresh.size() != groups()) throw ShapeError("update_running_stats: wrong group count");
  std::vector<BatchStats>& stored =
      domain == DomainTag::Source ? running_source_ : running_target_;
  for (std::size_t j = 0; j < fresh.size(); ++j) {
    for (std::size_t k = 0; k < g_; ++k)
      stored[j].mu[k] = (1.0 - rho_) * stored[j].mu[k] + rho_ * fresh[j].mu[k];
    for (std::size_t k = 0; k < g_ * g_; ++k)
      stored[j].sigma[k] = (1.0 - rho_) * stored[j].sigma[k] + rho_ * fresh[j].sigma[k];
    stored[j].count = fresh[j].count;
  }
  (domain == DomainTag::Source ? source_initialized_ : target_initialized_) = true;
}

std::size_t DwtLayer::train_forward_count(DomainTag domain) const {
  return domain == DomainTag::Source ? train_forwards_source_ : train_forwards_target_;
}

Tensor DwtLayer::forward_impl(const Tensor& input, Mode mode, DomainTag domain) {
  if (input.rank() != 2 || input.cols() != d_) {
    throw ShapeError(name() + ": expected m x " + std::to_string(d_) + " input");
  }
  cached_mode_ = mode;

  if (mode == Mode::Train) {
    std::vector<BatchStats> fresh = batch_stats(input, g_, epsilon_);
    Tensor out = whiten_batch(input, fresh, gamma_.value, beta_.value, &cached_centered_,
                              &cached_whitened_, &cached_chol_, epsilon_);
    update_running_stats(domain, fresh);
    last_stats_ = std::move(fresh);
    last_train_rows_ = input.rows();
    (domain == DomainTag::Source ? train_forwards_source_ : train_forwards_target_) += 1;
    return out;
  }

  if (!has_running_stats(domain)) {
    throw UninitializedStatsError(name() + ": eval before any " +
                                  std::string(to_string(domain)) + " statistics update");
  }
  return whiten_batch(input, running_stats(domain), gamma_.value, beta_.value,
                      &cached_centered_, &cached_whitened_, &cached_chol_, epsilon_);
}

Tensor DwtLayer::backward_impl(const Tensor& grad_output) {
  const std::size_t m = grad_output.rows();
  const double md = static_cast<double>(m);

  for (std::size_t k = 0; k < d_; ++k) {
    double dg = 0.0, db = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      dg += grad_output(i, k) * cached_whitened_(i, k);
      db += grad_output(i, k);
    }
    gamma_.grad[k] += dg;
    beta_.grad[k] += db;
  }

  Tensor grad_in({m, d_});
  for (std::size_t group = 0; group < groups(); ++group) {
    const std::size_t c0 = group * g_;
    const Tensor& lower = cached_chol_[group];
    const Tensor w = tri_solve_lower(lower, Tensor::identity(g_));

    // Gradient w.r.t. the whitened activations of this group.
    Tensor ghat({m, g_});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < g_; ++k)
        ghat(i, k) = grad_output(i, c0 + k) * gamma_.value[c0 + k];

    Tensor centered({m, g_});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < g_; ++k) centered(i, k) = cached_centered_(i, c0 + k);

    // Direct path: x_hat = W (x - mu).
    Tensor grad_c = matmul(ghat, w);

    if (cached_mode_ == Mode::Train) {
      // Through W = L^{-1} and the Cholesky factorization of sigma.
      Tensor w_bar = matmul(transpose(ghat), centered);
      Tensor l_bar = matmul(matmul(transpose(w), w_bar), transpose(w));
      l_bar *= -1.0;
      for (std::size_t i = 0; i < g_; ++i)
        for (std::size_t j = i + 1; j < g_; ++j) l_bar(i, j) = 0.0;

      Tensor p = phi(matmul(transpose(lower), l_bar));
      Tensor sigma_bar = matmul(matmul(transpose(w), p), w);
      Tensor sym({g_, g_});
      for (std::size_t i = 0; i < g_; ++i)
        for (std::size_t j = 0; j < g_; ++j)
          sym(i, j) = 0.5 * (sigma_bar(i, j) + sigma_bar(j, i));

      // sigma = (1/m) Xc^T Xc + eps I.
      Tensor through_sigma = matmul(centered, sym);
      through_sigma *= 2.0 / md;
      grad_c += through_sigma;

      // Centering: subtract per-column means.
      for (std::size_t k = 0; k < g_; ++k) {
        double col_mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) col_mean += grad_c(i, k);
        col_mean /= md;
        for (std::size_t i = 0; i < m; ++i)
          grad_in(i, c0 + k) = grad_c(i, k) - col_mean;
      }
    } else {
      // Eval: mu and sigma are frozen constants.
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < g_; ++k) grad_in(i, c0 + k) = grad_c(i, k);
    }
  }
  return grad_in;
}

}  // namespace dwt
