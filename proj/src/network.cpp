#include "dwt/network.hpp"

#include <string>
#include <utility>

namespace dwt {

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out, bool use_bias) {
  LayerSpec s{Kind::Dense};
  s.in = in;
  s.out = out;
  s.use_bias = use_bias;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                            std::size_t stride, Padding padding, bool use_bias) {
  LayerSpec s{Kind::Conv2d};
  s.in = in_ch;
  s.out = out_ch;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  s.use_bias = use_bias;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{Kind::Relu}; }

LayerSpec LayerSpec::maxpool(std::size_t window, std::size_t stride) {
  LayerSpec s{Kind::MaxPool};
  s.window = window;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::bn(std::size_t features, double epsilon, double rho) {
  LayerSpec s{Kind::Bn};
  s.features = features;
  s.group = 1;
  s.epsilon = epsilon;
  s.rho = rho;
  return s;
}

LayerSpec LayerSpec::dwt(std::size_t features, std::size_t group, double epsilon, double rho) {
  LayerSpec s{Kind::Dwt};
  s.features = features;
  s.group = group;
  s.epsilon = epsilon;
  s.rho = rho;
  return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{Kind::Flatten}; }

Network::Network(std::vector<LayerSpec> specs, std::uint64_t init_seed)
    : specs_(std::move(specs)), init_seed_(init_seed) {
  Rng rng(init_seed);
  for (const LayerSpec& s : specs_) {
    switch (s.kind) {
      case LayerSpec::Kind::Dense:
        layers_.push_back(std::make_unique<Dense>(s.in, s.out, rng, s.use_bias));
        break;
      case LayerSpec::Kind::Conv2d:
        layers_.push_back(std::make_unique<Conv2d>(s.in, s.out, s.kernel, s.stride,
                                                   s.padding, rng, s.use_bias));
        break;
      case LayerSpec::Kind::Relu:
        layers_.push_back(std::make_unique<Relu>());
        break;
      case LayerSpec::Kind::MaxPool:
        layers_.push_back(std::make_unique<MaxPool2d>(s.window, s.stride));
        break;
      case LayerSpec::Kind::Bn:
        layers_.push_back(std::make_unique<DwtSpatial>(s.features, 1, s.epsilon, s.rho));
        break;
      case LayerSpec::Kind::Dwt:
        layers_.push_back(std::make_unique<DwtSpatial>(s.features, s.group, s.epsilon, s.rho));
        break;
      case LayerSpec::Kind::Flatten:
        layers_.push_back(std::make_unique<Flatten>());
        break;
    }
  }
}

Tensor Network::forward(const Tensor& input, Mode mode, DomainTag domain) {
  Tensor x = input;
  for (auto& layer : layers_) x = layer->forward(x, mode, domain);
  return x;
}

Tensor Network::backward(const Tensor& grad_output) {
  Tensor g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> params;
  for (auto& layer : layers_)
    for (Parameter* p : layer->parameters()) params.push_back(p);
  return params;
}

void Network::zero_grads() {
  for (Parameter* p : parameters()) p->zero_grad();
}

std::vector<DwtSpatial*> Network::whitening_layers() {
  std::vector<DwtSpatial*> out;
  for (auto& layer : layers_)
    if (auto* d = dynamic_cast<DwtSpatial*>(layer.get())) out.push_back(d);
  return out;
}

std::size_t Network::dwt_layer_count() const {
  std::size_t n = 0;
  for (const LayerSpec& s : specs_)
    if (s.kind == LayerSpec::Kind::Dwt) ++n;
  return n;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->value.size();
  return n;
}

Network Network::clone() const {
  Network copy(specs_, init_seed_);
  Network& self = const_cast<Network&>(*this);
  auto src_params = self.parameters();
  auto dst_params = copy.parameters();
  for (std::size_t i = 0; i < src_params.size(); ++i)
    dst_params[i]->value = src_params[i]->value;

  auto src_wl = self.whitening_layers();
  auto dst_wl = copy.whitening_layers();
  for (std::size_t i = 0; i < src_wl.size(); ++i) {
    for (DomainTag dom : {DomainTag::Source, DomainTag::Target}) {
      if (src_wl[i]->inner().has_running_stats(dom)) {
        dst_wl[i]->inner().set_running_stats(dom, src_wl[i]->inner().running_stats(dom));
      }
    }
  }
  return copy;
}

void ema_update(Network& teacher, Network& student, double decay) {
  if (decay < 0.0 || decay > 1.0) throw ParameterError("ema_update: decay must lie in [0,1]");
  auto tp = teacher.parameters();
  auto sp = student.parameters();
  if (tp.size() != sp.size()) throw StateError("ema_update: parameter structures differ");
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (!tp[i]->value.same_shape(sp[i]->value))
      throw StateError("ema_update: parameter shapes differ");
    for (std::size_t k = 0; k < tp[i]->value.size(); ++k)
      tp[i]->value[k] = decay * tp[i]->value[k] + (1.0 - decay) * sp[i]->value[k];
  }

  auto tw = teacher.whitening_layers();
  auto sw = student.whitening_layers();
  if (tw.size() != sw.size()) throw StateError("ema_update: whitening structures differ");
  for (std::size_t i = 0; i < tw.size(); ++i) {
    DwtLayer& t = tw[i]->inner();
    DwtLayer& s = sw[i]->inner();
    if (t.features() != s.features() || t.group_size() != s.group_size())
      throw StateError("ema_update: whitening shapes differ");
    for (DomainTag dom : {DomainTag::Source, DomainTag::Target}) {
      if (!s.has_running_stats(dom)) continue;
      std::vector<BatchStats> blended = t.running_stats(dom);
      const std::vector<BatchStats>& fresh = s.running_stats(dom);
      for (std::size_t jg = 0; jg < blended.size(); ++jg) {
        for (std::size_t k = 0; k < blended[jg].mu.size(); ++k)
          blended[jg].mu[k] = decay * blended[jg].mu[k] + (1.0 - decay) * fresh[jg].mu[k];
        for (std::size_t k = 0; k < blended[jg].sigma.size(); ++k)
          blended[jg].sigma[k] =
              decay * blended[jg].sigma[k] + (1.0 - decay) * fresh[jg].sigma[k];
        blended[jg].count = fresh[jg].count;
      }
      t.set_running_stats(dom, std::move(blended));
    }
  }
}

Network build_mlp(const std::vector<std::size_t>& dims, std::size_t n_dwt, std::size_t g,
                  std::uint64_t init_seed, double epsilon, double rho) {
  if (dims.size() < 2) throw ParameterError("build_mlp: need at least input and output dims");
  const std::size_t hidden = dims.size() - 2;
  if (n_dwt > hidden) {
    throw ParameterError("build_mlp: n_dwt " + std::to_string(n_dwt) +
                         " exceeds hidden-layer count " + std::to_string(hidden));
  }
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i < hidden; ++i) {
    // The whitening layer centers the batch, so a bias here is dead weight.
    specs.push_back(LayerSpec::dense(dims[i], dims[i + 1], /*use_bias=*/false));
    if (i < n_dwt) {
      specs.push_back(LayerSpec::dwt(dims[i + 1], g, epsilon, rho));
    } else {
      specs.push_back(LayerSpec::bn(dims[i + 1], epsilon, rho));
    }
    specs.push_back(LayerSpec::relu());
  }
  specs.push_back(LayerSpec::dense(dims[dims.size() - 2], dims.back()));
  return Network(std::move(specs), init_seed);
}

Network build_cnn(const std::vector<std::size_t>& channels, std::size_t image_h,
                  std::size_t image_w, std::size_t n_classes, std::size_t n_dwt,
                  std::size_t g, std::uint64_t init_seed, double epsilon, double rho) {
  if (channels.size() < 2) throw ParameterError("build_cnn: need input and at least one block");
  const std::size_t blocks = channels.size() - 1;
  if (n_dwt > blocks) {
    throw ParameterError("build_cnn: n_dwt " + std::to_string(n_dwt) +
                         " exceeds block count " + std::to_string(blocks));
  }
  std::vector<LayerSpec> specs;
  std::size_t h = image_h, w = image_w;
  for (std::size_t i = 0; i < blocks; ++i) {
    specs.push_back(LayerSpec::conv2d(channels[i], channels[i + 1], 3, 1, Padding::Same,
                                      /*use_bias=*/false));
    if (i < n_dwt) {
      specs.push_back(LayerSpec::dwt(channels[i + 1], g, epsilon, rho));
    } else {
      specs.push_back(LayerSpec::bn(channels[i + 1], epsilon, rho));
    }
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::maxpool(2, 2));
    h = (h - 2) / 2 + 1;
    w = (w - 2) / 2 + 1;
  }
  specs.push_back(LayerSpec::flatten());
  specs.push_back(LayerSpec::dense(channels.back() * h * w, n_classes));
  return Network(std::move(specs), init_seed);
}

}  // namespace dwt
