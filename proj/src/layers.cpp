#include "dwt/layers.hpp"

#include <cmath>
#include <string>

#include "dwt/linalg.hpp"

namespace dwt {

namespace {

// He-uniform: U(-limit, limit) with limit = sqrt(6 / fan_in).
void he_uniform(Tensor& w, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
}

}  // namespace

Dense::Dense(std::size_t in_features, std::size_t out_features, Rng& rng, bool use_bias)
    : in_(in_features),
      out_(out_features),
      use_bias_(use_bias),
      weight_(Tensor({in_features, out_features})),
      bias_(Tensor({out_features})) {
  he_uniform(weight_.value, in_, rng);
}

std::string Dense::name() const {
  return "dense(" + std::to_string(in_) + "x" + std::to_string(out_) + ")";
}

Tensor Dense::forward_impl(const Tensor& input, Mode, DomainTag) {
  if (input.rank() != 2 || input.cols() != in_) {
    throw ShapeError(name() + ": expected m x " + std::to_string(in_) + " input");
  }
  cached_input_ = input;
  Tensor out = matmul(input, weight_.value);
  if (use_bias_) {
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out_; ++j) out(i, j) += bias_.value[j];
  }
  return out;
}

Tensor Dense::backward_impl(const Tensor& grad_output) {
  weight_.grad += matmul(transpose(cached_input_), grad_output);
  if (use_bias_) {
    for (std::size_t i = 0; i < grad_output.rows(); ++i)
      for (std::size_t j = 0; j < out_; ++j) bias_.grad[j] += grad_output(i, j);
  }
  return matmul(grad_output, transpose(weight_.value));
}

Tensor Relu::forward_impl(const Tensor& input, Mode, DomainTag) {
  cached_input_ = input;
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor Relu::backward_impl(const Tensor& grad_output) {
  Tensor grad(grad_output.shape());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = cached_input_[i] > 0.0 ? grad_output[i] : 0.0;
  return grad;
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride, Padding padding, Rng& rng, bool use_bias)
    : in_ch_(in_channels),
      out_ch_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      use_bias_(use_bias),
      weight_(Tensor({in_channels * kernel * kernel, out_channels})),
      bias_(Tensor({out_channels})) {
  if (kernel_ == 0 || stride_ == 0) throw ParameterError("conv2d: kernel and stride must be positive");
  if (padding_ == Padding::Same && kernel_ % 2 == 0) {
    throw ParameterError("conv2d: same padding requires an odd kernel");
  }
  he_uniform(weight_.value, in_ch_ * kernel_ * kernel_, rng);
}

std::string Conv2d::name() const {
  return "conv2d(" + std::to_string(in_ch_) + "->" + std::to_string(out_ch_) + ",k=" +
         std::to_string(kernel_) + ")";
}

Tensor Conv2d::forward_impl(const Tensor& input, Mode, DomainTag) {
  if (input.rank() != 4 || input.dim(1) != in_ch_) {
    throw ShapeError(name() + ": expected n x " + std::to_string(in_ch_) + " x h x w input");
  }
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t pad = padding_ == Padding::Same ? (kernel_ - 1) / 2 : 0;
  if (padding_ == Padding::Valid && (h < kernel_ || w < kernel_)) {
    throw ShapeError(name() + ": input smaller than the kernel");
  }
  const std::size_t h_out = (h + 2 * pad - kernel_) / stride_ + 1;
  const std::size_t w_out = (w + 2 * pad - kernel_) / stride_ + 1;

  // im2col: one row per output position, one column per (c, ky, kx).
  Tensor patches({n * h_out * w_out, in_ch_ * kernel_ * kernel_});
  std::size_t row = 0;
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t oy = 0; oy < h_out; ++oy) {
      for (std::size_t ox = 0; ox < w_out; ++ox, ++row) {
        std::size_t col = 0;
        for (std::size_t c = 0; c < in_ch_; ++c) {
          for (std::size_t ky = 0; ky < kernel_; ++ky) {
            const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad);
            for (std::size_t kx = 0; kx < kernel_; ++kx, ++col) {
              const long ix = static_cast<long>(ox * stride_ + kx) - static_cast<long>(pad);
              if (iy >= 0 && iy < static_cast<long>(h) && ix >= 0 && ix < static_cast<long>(w)) {
                patches(row, col) = input(img, c, static_cast<std::size_t>(iy),
                                          static_cast<std::size_t>(ix));
              }
            }
          }
        }
      }
    }
  }

  Tensor flat = matmul(patches, weight_.value);  // (n*h_out*w_out) x c_out
  Tensor out({n, out_ch_, h_out, w_out});
  row = 0;
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t oy = 0; oy < h_out; ++oy)
      for (std::size_t ox = 0; ox < w_out; ++ox, ++row)
        for (std::size_t c = 0; c < out_ch_; ++c)
          out(img, c, oy, ox) = use_bias_ ? flat(row, c) + bias_.value[c] : flat(row, c);

  cached_patches_ = std::move(patches);
  cached_in_shape_ = input.shape();
  cached_h_out_ = h_out;
  cached_w_out_ = w_out;
  return out;
}

Tensor Conv2d::backward_impl(const Tensor& grad_output) {
  const std::size_t n = cached_in_shape_[0], h = cached_in_shape_[2], w = cached_in_shape_[3];
  const std::size_t pad = padding_ == Padding::Same ? (kernel_ - 1) / 2 : 0;
  const std::size_t h_out = cached_h_out_, w_out = cached_w_out_;

  Tensor grad_flat({n * h_out * w_out, out_ch_});
  std::size_t row = 0;
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t oy = 0; oy < h_out; ++oy)
      for (std::size_t ox = 0; ox < w_out; ++ox, ++row)
        for (std::size_t c = 0; c < out_ch_; ++c) {
          grad_flat(row, c) = grad_output(img, c, oy, ox);
          if (use_bias_) bias_.grad[c] += grad_output(img, c, oy, ox);
        }

  weight_.grad += matmul(transpose(cached_patches_), grad_flat);

  // col2im scatter-add of d(patches) back onto the input grid.
  Tensor grad_patches = matmul(grad_flat, transpose(weight_.value));
  Tensor grad_in(cached_in_shape_);
  row = 0;
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t oy = 0; oy < h_out; ++oy) {
      for (std::size_t ox = 0; ox < w_out; ++ox, ++row) {
        std::size_t col = 0;
        for (std::size_t c = 0; c < in_ch_; ++c) {
          for (std::size_t ky = 0; ky < kernel_; ++ky) {
            const long iy = static_cast<long>(oy * stride_ + ky) - static_cast<long>(pad);
            for (std::size_t kx = 0; kx < kernel_; ++kx, ++col) {
              const long ix = static_cast<long>(ox * stride_ + kx) - static_cast<long>(pad);
              if (iy >= 0 && iy < static_cast<long>(h) && ix >= 0 && ix < static_cast<long>(w)) {
                grad_in(img, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) +=
                    grad_patches(row, col);
              }
            }
          }
        }
      }
    }
  }
  return grad_in;
}

MaxPool2d::MaxPool2d(std::size_t window, std::size_t stride)
    : window_(window), stride_(stride) {
  if (window_ == 0 || stride_ == 0) throw ParameterError("maxpool: window and stride must be positive");
}

Tensor MaxPool2d::forward_impl(const Tensor& input, Mode, DomainTag) {
  if (input.rank() != 4) throw ShapeError("maxpool: expected n x c x h x w input");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < window_ || w < window_) throw ShapeError("maxpool: input smaller than the window");
  const std::size_t h_out = (h - window_) / stride_ + 1;
  const std::size_t w_out = (w - window_) / stride_ + 1;

  Tensor out({n, c, h_out, w_out});
  argmax_.assign(n * c * h_out * w_out, 0);
  std::size_t idx = 0;
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t oy = 0; oy < h_out; ++oy) {
        for (std::size_t ox = 0; ox < w_out; ++ox, ++idx) {
          double best = input(img, ch, oy * stride_, ox * stride_);
          std::size_t best_flat =
              ((img * c + ch) * h + oy * stride_) * w + ox * stride_;
          for (std::size_t ky = 0; ky < window_; ++ky) {
            for (std::size_t kx = 0; kx < window_; ++kx) {
              const std::size_t iy = oy * stride_ + ky, ix = ox * stride_ + kx;
              const double v = input(img, ch, iy, ix);
              if (v > best) {  // strict: ties keep the first row-major hit
                best = v;
                best_flat = ((img * c + ch) * h + iy) * w + ix;
              }
            }
          }
          out(img, ch, oy, ox) = best;
          argmax_[idx] = best_flat;
        }
      }
    }
  }
  cached_in_shape_ = input.shape();
  return out;
}

Tensor MaxPool2d::backward_impl(const Tensor& grad_output) {
  Tensor grad_in(cached_in_shape_);
  for (std::size_t i = 0; i < grad_output.size(); ++i) grad_in[argmax_[i]] += grad_output[i];
  return grad_in;
}

Tensor Flatten::forward_impl(const Tensor& input, Mode, DomainTag) {
  if (input.rank() < 2) throw ShapeError("flatten: expected a batched input");
  cached_in_shape_ = input.shape();
  return input.reshaped({input.dim(0), input.size() / input.dim(0)});
}

Tensor Flatten::backward_impl(const Tensor& grad_output) {
  return grad_output.reshaped(cached_in_shape_);
}

DwtSpatial::DwtSpatial(std::size_t channels, std::size_t group_size, double epsilon, double rho)
    : inner_(channels, group_size, epsilon, rho) {}

Tensor nchw_to_rows(const Tensor& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor rows({n * h * w, c});
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t z = 0; z < w; ++z)
          rows((img * h + y) * w + z, ch) = x(img, ch, y, z);
  return rows;
}

Tensor rows_to_nchw(const Tensor& rows, const std::vector<std::size_t>& nchw_shape) {
  const std::size_t n = nchw_shape[0], c = nchw_shape[1], h = nchw_shape[2], w = nchw_shape[3];
  Tensor x(nchw_shape);
  for (std::size_t img = 0; img < n; ++img)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t z = 0; z < w; ++z)
          x(img, ch, y, z) = rows((img * h + y) * w + z, ch);
  return x;
}

Tensor DwtSpatial::forward_impl(const Tensor& input, Mode mode, DomainTag domain) {
  cached_in_shape_ = input.shape();
  if (input.rank() == 2) return inner_.forward(input, mode, domain);
  if (input.rank() != 4) throw ShapeError("dwt: expected m x d or n x c x h x w input");
  Tensor rows = nchw_to_rows(input);
  Tensor out_rows = inner_.forward(rows, mode, domain);
  return rows_to_nchw(out_rows, cached_in_shape_);
}

Tensor DwtSpatial::backward_impl(const Tensor& grad_output) {
  if (grad_output.rank() == 2) return inner_.backward(grad_output);
  Tensor grad_rows = nchw_to_rows(grad_output);
  Tensor grad_in_rows = inner_.backward(grad_rows);
  return rows_to_nchw(grad_in_rows, cached_in_shape_);
}

}  // namespace dwt
