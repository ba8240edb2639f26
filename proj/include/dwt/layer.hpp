#ifndef DWT_LAYER_HPP
#define DWT_LAYER_HPP

#include <string>
#include <vector>

#include "dwt/tensor.hpp"

namespace dwt {

enum class Mode { Train, Eval };

enum class DomainTag { Source, Target };

inline const char* to_string(DomainTag d) {
  return d == DomainTag::Source ? "source" : "target";
}

// Contract shared by every layer: forward caches what backward needs,
// backward may run at most once per forward and accumulates parameter
// gradients. Layer objects are stateful and belong to one thread during a
// forward/backward pair.
class Layer {
 public:
  virtual ~Layer() = default;

  Tensor forward(const Tensor& input, Mode mode, DomainTag domain) {
    Tensor out = forward_impl(input, mode, domain);
    has_cache_ = true;
    cached_output_shape_ = out.shape();
    return out;
  }

  Tensor backward(const Tensor& grad_output) {
    if (!has_cache_) throw StateError(name() + ": backward without a cached forward");
    if (grad_output.shape() != cached_output_shape_) {
      throw ShapeError(name() + ": upstream gradient shape does not match the last output");
    }
    has_cache_ = false;
    return backward_impl(grad_output);
  }

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::string name() const = 0;

 protected:
  virtual Tensor forward_impl(const Tensor& input, Mode mode, DomainTag domain) = 0;
  virtual Tensor backward_impl(const Tensor& grad_output) = 0;

 private:
  bool has_cache_ = false;
  std::vector<std::size_t> cached_output_shape_;
};

}  // namespace dwt

#endif  // DWT_LAYER_HPP
