#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dwt/gradcheck.hpp"
#include "dwt/layers.hpp"
#include "dwt/rng.hpp"

using namespace dwt;

namespace {

Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, scale);
  return t;
}

// f(x) = sum(layer.forward(x) . r) so backward(r) is its exact gradient.
double projected(Layer& layer, const Tensor& x, const Tensor& r, Mode mode) {
  return sum(hadamard(layer.forward(x, mode, DomainTag::Source), r));
}

}  // namespace

TEST_CASE("dense identity weights pass input through") {
  Rng rng(201);
  Dense layer(3, 3, rng);
  layer.weight().value = Tensor::identity(3);
  layer.bias().value = Tensor({3});
  Tensor x = random_tensor({4, 3}, rng);
  CHECK(max_abs_diff(layer.forward(x, Mode::Train, DomainTag::Source), x) == 0.0);
}

TEST_CASE("dense broadcasts bias on zero input") {
  Rng rng(203);
  Dense layer(3, 2, rng);
  layer.bias().value = Tensor({2}, {0.5, -1.5});
  Tensor x({4, 3});
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out(i, 0) == 0.5);
    CHECK(out(i, 1) == -1.5);
  }
}

TEST_CASE("dense gradients match finite differences tightly") {
  Rng rng(207);
  Dense layer(4, 3, rng);
  Tensor x = random_tensor({5, 4}, rng);
  Tensor r = random_tensor({5, 3}, rng);

  layer.forward(x, Mode::Train, DomainTag::Source);
  Tensor grad_in = layer.backward(r);

  auto fx = [&](const Tensor& t) { return projected(layer, t, r, Mode::Train); };
  CHECK(max_relative_error(grad_in, finite_diff_grad(fx, x)) < 1e-6);

  auto fw = [&](const Tensor& w) {
    Dense probe(4, 3, rng);
    probe.weight().value = w;
    probe.bias().value = layer.bias().value;
    return projected(probe, x, r, Mode::Train);
  };
  CHECK(max_relative_error(layer.weight().grad,
                           finite_diff_grad(fw, layer.weight().value)) < 1e-6);

  auto fb = [&](const Tensor& b) {
    Dense probe(4, 3, rng);
    probe.weight().value = layer.weight().value;
    probe.bias().value = b;
    return projected(probe, x, r, Mode::Train);
  };
  CHECK(max_relative_error(layer.bias().grad,
                           finite_diff_grad(fb, layer.bias().value)) < 1e-6);
}

TEST_CASE("relu forward and backward") {
  Relu layer;
  Tensor x({2, 3}, {1.0, -2.0, 0.5, -0.1, 3.0, 0.0});
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);
  CHECK(out(0, 1) == 0.0);
  CHECK(out(1, 1) == 3.0);

  Tensor up = Tensor::full({2, 3}, 1.0);
  Tensor grad = layer.backward(up);
  CHECK(grad(0, 0) == 1.0);
  CHECK(grad(0, 1) == 0.0);
  CHECK(grad(1, 2) == 0.0);  // relu'(0) = 0
}

TEST_CASE("conv2d 1x1 kernel mixes channels only") {
  Rng rng(211);
  Conv2d layer(2, 2, 1, 1, Padding::Valid, rng);
  // Kernel = channel swap.
  layer.weight().value = Tensor({2, 2}, {0, 1, 1, 0});
  layer.bias().value = Tensor({2});
  Tensor x = random_tensor({1, 2, 3, 3}, rng);
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t z = 0; z < 3; ++z) {
      CHECK(out(0, 0, y, z) == doctest::Approx(x(0, 1, y, z)));
      CHECK(out(0, 1, y, z) == doctest::Approx(x(0, 0, y, z)));
    }
}

TEST_CASE("conv2d averaging kernel keeps a constant image constant inside") {
  Rng rng(213);
  Conv2d layer(1, 1, 3, 1, Padding::Valid, rng);
  layer.weight().value = Tensor::full({9, 1}, 1.0 / 9.0);
  layer.bias().value = Tensor({1});
  Tensor x = Tensor::full({1, 1, 5, 5}, 0.7);
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);
  REQUIRE(out.dim(2) == 3);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t z = 0; z < 3; ++z) CHECK(out(0, 0, y, z) == doctest::Approx(0.7));
}

TEST_CASE("conv2d same padding preserves spatial dims") {
  Rng rng(217);
  Conv2d layer(1, 2, 3, 1, Padding::Same, rng);
  Tensor x = random_tensor({2, 1, 6, 5}, rng);
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);
  CHECK(out.dim(2) == 6);
  CHECK(out.dim(3) == 5);
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(219);
  for (Padding pad : {Padding::Valid, Padding::Same}) {
    Conv2d layer(2, 3, 3, 1, pad, rng);
    Tensor x = random_tensor({2, 2, 5, 5}, rng);
    Tensor probe_out = layer.forward(x, Mode::Train, DomainTag::Source);
    Tensor r = random_tensor(probe_out.shape(), rng);

    layer.forward(x, Mode::Train, DomainTag::Source);
    Tensor grad_in = layer.backward(r);
    auto fx = [&](const Tensor& t) { return projected(layer, t, r, Mode::Train); };
    CHECK(max_relative_error(grad_in, finite_diff_grad(fx, x)) < 1e-4);

    auto fw = [&](const Tensor& w) {
      Conv2d probe(2, 3, 3, 1, pad, rng);
      probe.weight().value = w;
      probe.bias().value = layer.bias().value;
      return projected(probe, x, r, Mode::Train);
    };
    CHECK(max_relative_error(layer.weight().grad,
                             finite_diff_grad(fw, layer.weight().value)) < 1e-4);
  }
}

TEST_CASE("maxpool picks the first maximal element on ties") {
  MaxPool2d layer(2, 2);
  Tensor x({1, 1, 2, 2}, {0.5, 0.5, 0.5, 0.5});
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);
  CHECK(out(0, 0, 0, 0) == 0.5);
  Tensor up({1, 1, 1, 1}, {1.0});
  Tensor grad = layer.backward(up);
  CHECK(grad(0, 0, 0, 0) == 1.0);  // row-major first
  CHECK(grad(0, 0, 0, 1) == 0.0);
  CHECK(grad(0, 0, 1, 0) == 0.0);
}

TEST_CASE("maxpool gradient matches finite differences") {
  Rng rng(223);
  MaxPool2d layer(2, 2);
  Tensor x = random_tensor({2, 2, 4, 4}, rng);
  Tensor probe_out = layer.forward(x, Mode::Train, DomainTag::Source);
  Tensor r = random_tensor(probe_out.shape(), rng);
  layer.forward(x, Mode::Train, DomainTag::Source);
  Tensor grad_in = layer.backward(r);
  auto fx = [&](const Tensor& t) { return projected(layer, t, r, Mode::Train); };
  CHECK(max_relative_error(grad_in, finite_diff_grad(fx, x)) < 1e-4);
}

TEST_CASE("flatten round-trips shapes") {
  Flatten layer;
  Rng rng(227);
  Tensor x = random_tensor({3, 2, 2, 2}, rng);
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);
  CHECK(out.rows() == 3);
  CHECK(out.cols() == 8);
  Tensor back = layer.backward(out);
  CHECK(max_abs_diff(back, x) == 0.0);
}

TEST_CASE("spatial dwt with h=w=1 reduces to the plain layer") {
  Rng rng(229);
  Tensor rows = random_tensor({6, 4}, rng);
  Tensor imgs = rows.reshaped({6, 4, 1, 1});

  DwtSpatial spatial(4, 2);
  DwtLayer plain(4, 2);
  Tensor out_s = spatial.forward(imgs, Mode::Train, DomainTag::Source);
  Tensor out_p = plain.forward(rows, Mode::Train, DomainTag::Source);
  CHECK(max_abs_diff(out_s.reshaped({6, 4}), out_p) == 0.0);
}

TEST_CASE("spatial dwt whitens per-channel-group activations") {
  Rng rng(233);
  Tensor x = random_tensor({4, 4, 3, 3}, rng, 2.0);
  DwtSpatial layer(4, 2, 1e-6);
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);

  // Treat each spatial position as a sample and measure group covariance.
  Tensor rows = nchw_to_rows(out);
  const std::size_t m = rows.rows();
  for (std::size_t c0 = 0; c0 < 4; c0 += 2) {
    Tensor mu({2});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < 2; ++k) mu[k] += rows(i, c0 + k);
    mu *= 1.0 / static_cast<double>(m);
    Tensor cov({2, 2});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          cov(a, b) += (rows(i, c0 + a) - mu[a]) * (rows(i, c0 + b) - mu[b]);
    cov *= 1.0 / static_cast<double>(m);
    CHECK(max_abs_diff(cov, Tensor::identity(2)) < 1e-5);
  }
}

TEST_CASE("spatial dwt with g=1 equals per-channel batch normalization") {
  Rng rng(239);
  Tensor x = random_tensor({3, 2, 4, 4}, rng, 1.5);
  DwtSpatial layer(2, 1, 1e-5);
  Tensor out = layer.forward(x, Mode::Train, DomainTag::Source);

  // Direct per-channel standardization over (n, h, w).
  const std::size_t n = 3, c = 2, h = 4, w = 4;
  const double count = static_cast<double>(n * h * w);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mu = 0.0;
    for (std::size_t img = 0; img < n; ++img)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t z = 0; z < w; ++z) mu += x(img, ch, y, z);
    mu /= count;
    double var = 0.0;
    for (std::size_t img = 0; img < n; ++img)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t z = 0; z < w; ++z) {
          const double d = x(img, ch, y, z) - mu;
          var += d * d;
        }
    var /= count;
    for (std::size_t img = 0; img < n; ++img)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t z = 0; z < w; ++z) {
          const double bn = (x(img, ch, y, z) - mu) / std::sqrt(var + 1e-5);
          CHECK(std::fabs(out(img, ch, y, z) - bn) < 1e-10);
        }
  }
}

TEST_CASE("spatial dwt gradient matches finite differences") {
  Rng rng(241);
  DwtSpatial layer(2, 2);
  Tensor x = random_tensor({2, 2, 3, 3}, rng);
  Tensor r = random_tensor({2, 2, 3, 3}, rng);

  layer.forward(x, Mode::Train, DomainTag::Source);
  Tensor grad_in = layer.backward(r);
  auto fx = [&](const Tensor& t) {
    DwtSpatial probe(2, 2);
    return sum(hadamard(probe.forward(t, Mode::Train, DomainTag::Source), r));
  };
  CHECK(max_relative_error(grad_in, finite_diff_grad(fx, x)) < 1e-4);
}
