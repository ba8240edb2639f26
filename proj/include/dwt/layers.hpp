#ifndef DWT_LAYERS_HPP
#define DWT_LAYERS_HPP

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "dwt/layer.hpp"
#include "dwt/rng.hpp"
#include "dwt/tensor.hpp"
#include "dwt/whitening.hpp"

namespace dwt {

// x W + b on m x d_in batches. He-uniform weights, zero bias. Layers that
// feed a whitening layer drop the bias: mean-centering makes it redundant.
class Dense : public Layer {
 public:
  Dense(std::size_t in_features, std::size_t out_features, Rng& rng, bool use_bias = true);

  std::vector<Parameter*> parameters() override {
    return use_bias_ ? std::vector<Parameter*>{&weight_, &bias_}
                     : std::vector<Parameter*>{&weight_};
  }
  std::string name() const override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 protected:
  Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) override;
  Tensor backward_impl(const Tensor& grad_output) override;

 private:
  std::size_t in_, out_;
  bool use_bias_;
  Parameter weight_;  // d_in x d_out
  Parameter bias_;    // d_out
  Tensor cached_input_;
};

class Relu : public Layer {
 public:
  std::string name() const override { return "relu"; }

 protected:
  Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) override;
  Tensor backward_impl(const Tensor& grad_output) override;

 private:
  Tensor cached_input_;
};

enum class Padding { Valid, Same };

// Cross-correlation on n x c x h x w batches, implemented by patch
// flattening so backward reduces to matmul transposes.
class Conv2d : public Layer {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, Padding padding, Rng& rng, bool use_bias = true);

  std::vector<Parameter*> parameters() override {
    return use_bias_ ? std::vector<Parameter*>{&weight_, &bias_}
                     : std::vector<Parameter*>{&weight_};
  }
  std::string name() const override;

  Parameter& weight() { return weight_; }  // (c*k*k) x c_out
  Parameter& bias() { return bias_; }      // c_out

 protected:
  Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) override;
  Tensor backward_impl(const Tensor& grad_output) override;

 private:
  std::size_t in_ch_, out_ch_, kernel_, stride_;
  Padding padding_;
  bool use_bias_;
  Parameter weight_;
  Parameter bias_;
  Tensor cached_patches_;  // (n*h_out*w_out) x (c*k*k)
  std::vector<std::size_t> cached_in_shape_;
  std::size_t cached_h_out_ = 0, cached_w_out_ = 0;
};

// 2x2-style max pooling; ties break toward the first element in row-major
// scan order.
class MaxPool2d : public Layer {
 public:
  MaxPool2d(std::size_t window, std::size_t stride);

  std::string name() const override { return "maxpool"; }

 protected:
  Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) override;
  Tensor backward_impl(const Tensor& grad_output) override;

 private:
  std::size_t window_, stride_;
  std::vector<std::size_t> cached_in_shape_;
  std::vector<std::size_t> argmax_;  // flat input index per output element
};

class Flatten : public Layer {
 public:
  std::string name() const override { return "flatten"; }

 protected:
  Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) override;
  Tensor backward_impl(const Tensor& grad_output) override;

 private:
  std::vector<std::size_t> cached_in_shape_;
};

// DWT over feature maps: n x c x h x w is reshaped to (n*h*w) x c so each
// spatial position counts as a sample (the BN convention), whitened, and
// reshaped back. Also accepts plain m x d input, where it is the identity
// wrapper around the embedded layer.
class DwtSpatial : public Layer {
 public:
  DwtSpatial(std::size_t channels, std::size_t group_size, double epsilon = 1e-5,
             double rho = 0.1);

  std::vector<Parameter*> parameters() override { return inner_.parameters(); }
  std::string name() const override { return inner_.name(); }

  DwtLayer& inner() { return inner_; }
  const DwtLayer& inner() const { return inner_; }

 protected:
  Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) override;
  Tensor backward_impl(const Tensor& grad_output) override;

 private:
  DwtLayer inner_;
  std::vector<std::size_t> cached_in_shape_;
};

// Rank-4 <-> rank-2 shuffles used by DwtSpatial (exposed for tests).
Tensor nchw_to_rows(const Tensor& x);
Tensor rows_to_nchw(const Tensor& rows, const std::vector<std::size_t>& nchw_shape);

}  // namespace dwt

#endif  // DWT_LAYERS_HPP
