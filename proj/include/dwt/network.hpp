#ifndef DWT_NETWORK_HPP
#define DWT_NETWORK_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "dwt/layers.hpp"

namespace dwt {

// Declarative layer description; Network materializes a list of these.
// bn is the g=1 reduction of dwt and shares its implementation.
struct LayerSpec {
  enum class Kind { Dense, Conv2d, Relu, MaxPool, Bn, Dwt, Flatten };
  Kind kind;

  std::size_t in = 0, out = 0;              // dense features / conv channels
  std::size_t kernel = 0, stride = 0;       // conv
  Padding padding = Padding::Same;          // conv
  std::size_t window = 0;                   // maxpool (stride reuses stride)
  std::size_t features = 0, group = 1;      // bn / dwt
  double epsilon = 1e-5, rho = 0.1;         // bn / dwt
  bool use_bias = true;                     // dense / conv

  static LayerSpec dense(std::size_t in, std::size_t out, bool use_bias = true);
  static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                          std::size_t stride = 1, Padding padding = Padding::Same,
                          bool use_bias = true);
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t window = 2, std::size_t stride = 2);
  static LayerSpec bn(std::size_t features, double epsilon = 1e-5, double rho = 0.1);
  static LayerSpec dwt(std::size_t features, std::size_t group, double epsilon = 1e-5,
                       double rho = 0.1);
  static LayerSpec flatten();
};

// A fixed sequential pipeline of layers. Stateful during training (layer
// caches, running statistics); one instance per thread.
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> specs, std::uint64_t init_seed);

  Tensor forward(const Tensor& input, Mode mode, DomainTag domain);
  Tensor backward(const Tensor& grad_output);

  std::vector<Parameter*> parameters();
  void zero_grads();

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const std::vector<LayerSpec>& specs() const { return specs_; }

  // Every whitening layer in order (bn included, as the g=1 case).
  std::vector<DwtSpatial*> whitening_layers();
  std::size_t dwt_layer_count() const;

  std::size_t parameter_count();

  // Same architecture, parameter values, and running statistics.
  Network clone() const;

 private:
  std::vector<LayerSpec> specs_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::uint64_t init_seed_ = 0;
};

// theta_T <- decay*theta_T + (1-decay)*theta_S over every parameter and
// running statistic. Structures must match.
void ema_update(Network& teacher, Network& student, double decay);

// dense(in->h) -> DWT -> relu for the first n_dwt hidden blocks, bn
// afterward, then a final dense to n_classes logits.
Network build_mlp(const std::vector<std::size_t>& dims, std::size_t n_dwt, std::size_t g,
                  std::uint64_t init_seed, double epsilon = 1e-5, double rho = 0.1);

// conv3x3(same) -> DWT/bn -> relu -> maxpool2 blocks over the channel list,
// then flatten -> dense to n_classes logits. DWT occupies the first n_dwt
// blocks.
Network build_cnn(const std::vector<std::size_t>& channels, std::size_t image_h,
                  std::size_t image_w, std::size_t n_classes, std::size_t n_dwt,
                  std::size_t g, std::uint64_t init_seed, double epsilon = 1e-5,
                  double rho = 0.1);

}  // namespace dwt

#endif  // DWT_NETWORK_HPP
