#include "dwt/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include "dwt/linalg.hpp"

namespace dwt {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

void invert2x2(const double m[4], double out[4]) {
  const double det = m[0] * m[3] - m[1] * m[2];
  if (det == 0.0) throw ParameterError("perturb: affine matrix is singular");
  out[0] = m[3] / det;
  out[1] = -m[1] / det;
  out[2] = -m[2] / det;
  out[3] = m[0] / det;
}

double bilinear_at(const Tensor& img, std::size_t c, double y, double x) {
  const std::size_t h = img.dim(1), w = img.dim(2);
  const long y0 = static_cast<long>(std::floor(y));
  const long x0 = static_cast<long>(std::floor(x));
  const double fy = y - static_cast<double>(y0);
  const double fx = x - static_cast<double>(x0);
  auto pixel = [&](long yy, long xx) -> double {
    if (yy < 0 || yy >= static_cast<long>(h) || xx < 0 || xx >= static_cast<long>(w))
      return 0.0;  // zero fill outside the image
    return img[(c * h + static_cast<std::size_t>(yy)) * w + static_cast<std::size_t>(xx)];
  };
  return (1.0 - fy) * ((1.0 - fx) * pixel(y0, x0) + fx * pixel(y0, x0 + 1)) +
         fy * ((1.0 - fx) * pixel(y0 + 1, x0) + fx * pixel(y0 + 1, x0 + 1));
}

}  // namespace

void PerturbSpec::validate() const {
  if (max_translation < 0.0 || blur_sigma < 0.0 || rotation_deg < 0.0 || shear_deg < 0.0 ||
      input_noise < 0.0 || scale_min <= 0.0 || scale_max < scale_min) {
    throw ConfigError("perturb spec: magnitudes must be nonnegative and scale range ordered");
  }
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw ParameterError("synthetic spec: need at least 2 classes");
  if (dim < 2) throw ParameterError("synthetic spec: need at least 2 dimensions");
  if (n_per_domain < classes) throw ParameterError("synthetic spec: too few samples");
  if (noise < 0.0) throw ParameterError("synthetic spec: noise must be nonnegative");
  if (corr_strength < 0.0 || corr_strength >= 1.0)
    throw ParameterError("synthetic spec: corr_strength must lie in [0,1)");
  if (corr_block == 0) throw ParameterError("synthetic spec: corr_block must be positive");
  if (shift_a.rank() != 2 || shift_a.rows() != dim || shift_a.cols() != dim)
    throw ParameterError("synthetic spec: shift_a must be dim x dim");
  if (shift_b.size() != dim) throw ParameterError("synthetic spec: shift_b must have length dim");
  if (std::fabs(determinant(shift_a)) < 1e-12)
    throw ParameterError("synthetic spec: shift_a is singular");
}

Tensor make_rotation_scale(std::size_t dim, double rotation_deg,
                           const std::vector<double>& scales) {
  if (dim < 2) throw ParameterError("make_rotation_scale: need dim >= 2");
  Tensor rot = Tensor::identity(dim);
  const double th = deg2rad(rotation_deg);
  rot(0, 0) = std::cos(th);
  rot(0, 1) = -std::sin(th);
  rot(1, 0) = std::sin(th);
  rot(1, 1) = std::cos(th);
  Tensor diag = Tensor::identity(dim);
  for (std::size_t i = 0; i < scales.size() && i < dim; ++i) diag(i, i) = scales[i];
  return matmul(rot, diag);
}

std::pair<LabeledSet, LabeledSet> gen_synthetic_shift(std::uint64_t seed,
                                                      const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_per_domain, d = spec.dim, classes = spec.classes;

  // Class means on a circle in the first two coordinates.
  Tensor means({classes, d});
  for (std::size_t c = 0; c < classes; ++c) {
    const double ang = 2.0 * kPi * static_cast<double>(c) / static_cast<double>(classes);
    means(c, 0) = spec.mean_radius * std::cos(ang);
    means(c, 1) = spec.mean_radius * std::sin(ang);
  }

  // Block-equicorrelated mixing: sigma_block = (1-a) I + a 11^T.
  Tensor mix = Tensor::identity(d);
  if (spec.corr_strength > 0.0 && spec.corr_block > 1) {
    for (std::size_t b0 = 0; b0 < d; b0 += spec.corr_block) {
      const std::size_t bs = std::min(spec.corr_block, d - b0);
      Tensor block({bs, bs});
      for (std::size_t i = 0; i < bs; ++i)
        for (std::size_t j = 0; j < bs; ++j)
          block(i, j) = (i == j ? 1.0 : 0.0) * (1.0 - spec.corr_strength) + spec.corr_strength;
      Tensor chol = cholesky_lower(block);
      for (std::size_t i = 0; i < bs; ++i)
        for (std::size_t j = 0; j < bs; ++j) mix(b0 + i, b0 + j) = chol(i, j);
    }
  }

  auto draw_set = [&](Rng& rng, DomainTag domain, bool apply_shift) {
    LabeledSet set;
    set.domain = domain;
    set.inputs = Tensor({n, d});
    set.labels.resize(n);
    std::vector<double> z(d), mixed(d);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t label = i % classes;  // balanced; order shuffled per epoch later
      set.labels[i] = label;
      for (std::size_t k = 0; k < d; ++k) z[k] = rng.normal();
      for (std::size_t a = 0; a < d; ++a) {
        double v = 0.0;
        for (std::size_t b = 0; b <= a; ++b) v += mix(a, b) * z[b];
        mixed[a] = means(label, a) + spec.noise * v;
      }
      if (apply_shift) {
        for (std::size_t a = 0; a < d; ++a) {
          double v = spec.shift_b[a];
          for (std::size_t b = 0; b < d; ++b) v += spec.shift_a(a, b) * mixed[b];
          set.inputs(i, a) = v;
        }
      } else {
        for (std::size_t a = 0; a < d; ++a) set.inputs(i, a) = mixed[a];
      }
    }
    return set;
  };

  Rng rng_src(Rng::mix(seed, 0x5053));  // independent draw streams per domain
  Rng rng_tgt(Rng::mix(seed, 0x5054));
  LabeledSet source = draw_set(rng_src, DomainTag::Source, false);
  LabeledSet target = draw_set(rng_tgt, DomainTag::Target, true);
  return {std::move(source), std::move(target)};
}

namespace {

// Big-endian u32 at a byte offset, bounds-checked.
std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t off,
                   const std::string& path) {
  if (off + 4 > buf.size()) {
    throw FormatError(path + ": truncated at offset " + std::to_string(off));
  }
  return (static_cast<std::uint32_t>(buf[off]) << 24) |
         (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
         (static_cast<std::uint32_t>(buf[off + 2]) << 8) |
         static_cast<std::uint32_t>(buf[off + 3]);
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

}  // namespace

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path,
                    DomainTag domain, std::size_t limit) {
  const std::vector<unsigned char> img = read_file(images_path);
  const std::vector<unsigned char> lbl = read_file(labels_path);

  const std::uint32_t img_magic = be32(img, 0, images_path);
  if (img_magic != 0x00000803u) {
    throw FormatError(images_path + ": bad magic at offset 0 (expected 0x00000803)");
  }
  const std::uint32_t lbl_magic = be32(lbl, 0, labels_path);
  if (lbl_magic != 0x00000801u) {
    throw FormatError(labels_path + ": bad magic at offset 0 (expected 0x00000801)");
  }

  std::size_t n = be32(img, 4, images_path);
  const std::size_t h = be32(img, 8, images_path);
  const std::size_t w = be32(img, 12, images_path);
  const std::size_t n_lbl = be32(lbl, 4, labels_path);
  if (n != n_lbl) {
    throw FormatError(images_path + ": image count " + std::to_string(n) +
                      " does not match label count " + std::to_string(n_lbl) +
                      " (offset 4)");
  }
  if (img.size() != 16 + n * h * w) {
    throw FormatError(images_path + ": truncated at offset " + std::to_string(img.size()));
  }
  if (lbl.size() != 8 + n) {
    throw FormatError(labels_path + ": truncated at offset " + std::to_string(lbl.size()));
  }
  if (limit > 0 && limit < n) n = limit;

  LabeledSet set;
  set.domain = domain;
  set.inputs = Tensor({n, 1, h, w});
  set.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char y = lbl[8 + i];
    if (y > 9) {
      throw FormatError(labels_path + ": label " + std::to_string(y) + " out of range at offset " +
                        std::to_string(8 + i));
    }
    set.labels[i] = y;
    for (std::size_t p = 0; p < h * w; ++p)
      set.inputs[i * h * w + p] = static_cast<double>(img[16 + i * h * w + p]) / 255.0;
  }
  return set;
}

Tensor warp_affine(const Tensor& image, const double m[4], double ty, double tx) {
  if (image.rank() != 3) throw ShapeError("warp_affine: expected c x h x w");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const double cy = 0.5 * static_cast<double>(h - 1);
  const double cx = 0.5 * static_cast<double>(w - 1);
  double inv[4];
  invert2x2(m, inv);

  Tensor out(image.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = static_cast<double>(y) - cy - ty;
        const double dx = static_cast<double>(x) - cx - tx;
        const double sy = inv[0] * dy + inv[1] * dx + cy;
        const double sx = inv[2] * dy + inv[3] * dx + cx;
        out[(ch * h + y) * w + x] = bilinear_at(image, ch, sy, sx);
      }
    }
  }
  return out;
}

Tensor gaussian_blur(const Tensor& image, double sigma) {
  if (sigma <= 0.0) return image;
  if (image.rank() != 3) throw ShapeError("gaussian_blur: expected c x h x w");
  const long radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (long k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * (static_cast<double>(k) / sigma) *
                                  (static_cast<double>(k) / sigma));

  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  Tensor tmp(image.shape()), out(image.shape());
  // Separable passes; the kernel is renormalized over the in-bounds support
  // so constant images stay constant at the borders.
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0, norm = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          const long xx = static_cast<long>(x) + k;
          if (xx < 0 || xx >= static_cast<long>(w)) continue;
          acc += kernel[k + radius] * image[(ch * h + y) * w + static_cast<std::size_t>(xx)];
          norm += kernel[k + radius];
        }
        tmp[(ch * h + y) * w + x] = acc / norm;
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0, norm = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          const long yy = static_cast<long>(y) + k;
          if (yy < 0 || yy >= static_cast<long>(h)) continue;
          acc += kernel[k + radius] * tmp[(ch * h + static_cast<std::size_t>(yy)) * w + x];
          norm += kernel[k + radius];
        }
        out[(ch * h + y) * w + x] = acc / norm;
      }
    }
  }
  return out;
}

Tensor perturb(const Tensor& sample, const PerturbSpec& spec, Rng& rng) {
  spec.validate();
  if (sample.rank() == 1) {
    if (spec.input_noise == 0.0) return sample;
    Tensor out = sample;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += spec.input_noise * rng.normal();
    return out;
  }
  if (sample.rank() != 3) throw ShapeError("perturb: expected a d vector or c x h x w image");
  if (spec.is_identity()) return sample;

  const std::size_t h = sample.dim(1), w = sample.dim(2);
  const double ty = rng.uniform(-spec.max_translation, spec.max_translation) *
                    static_cast<double>(h);
  const double tx = rng.uniform(-spec.max_translation, spec.max_translation) *
                    static_cast<double>(w);
  const double th = deg2rad(rng.uniform(-spec.rotation_deg, spec.rotation_deg));
  const double sc = rng.uniform(spec.scale_min, spec.scale_max);
  const double sh = std::tan(deg2rad(rng.uniform(-spec.shear_deg, spec.shear_deg)));

  // rows are (y, x): rotation * shear * isotropic scale.
  const double rot[4] = {std::cos(th), -std::sin(th), std::sin(th), std::cos(th)};
  const double m[4] = {sc * rot[0], sc * (rot[0] * sh + rot[1]), sc * rot[2],
                       sc * (rot[2] * sh + rot[3])};

  Tensor out = warp_affine(sample, m, ty, tx);
  out = gaussian_blur(out, spec.blur_sigma);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::min(1.0, std::max(0.0, out[i]));
  return out;
}

Tensor sample_at(const Tensor& inputs, std::size_t i) {
  if (inputs.rank() == 2) {
    const std::size_t d = inputs.cols();
    Tensor row({d});
    for (std::size_t k = 0; k < d; ++k) row[k] = inputs(i, k);
    return row;
  }
  if (inputs.rank() == 4) {
    const std::size_t c = inputs.dim(1), h = inputs.dim(2), w = inputs.dim(3);
    Tensor img({c, h, w});
    const std::size_t stride = c * h * w;
    for (std::size_t k = 0; k < stride; ++k) img[k] = inputs[i * stride + k];
    return img;
  }
  throw ShapeError("sample_at: inputs must be rank 2 or rank 4");
}

namespace {

void place_sample(Tensor& batch, std::size_t row, const Tensor& sample) {
  const std::size_t stride = sample.size();
  for (std::size_t k = 0; k < stride; ++k) batch[row * stride + k] = sample[k];
}

Tensor empty_batch(const Tensor& inputs, std::size_t m) {
  if (inputs.rank() == 2) return Tensor({m, inputs.cols()});
  return Tensor({m, inputs.dim(1), inputs.dim(2), inputs.dim(3)});
}

}  // namespace

std::vector<BatchTriple> epoch_triples(const LabeledSet& source, const LabeledSet& target,
                                       std::size_t batch, const PerturbSpec& spec,
                                       std::uint64_t seed, std::uint64_t epoch) {
  spec.validate();
  if (batch < 2) throw ParameterError("epoch_triples: batch must be at least 2");
  if (batch > source.count() || batch > target.count()) {
    throw ParameterError("epoch_triples: batch " + std::to_string(batch) +
                         " exceeds a dataset size");
  }

  const std::uint64_t base = Rng::mix(seed, epoch);
  Rng rng_perm_s(Rng::mix(base, 1));
  Rng rng_perm_t(Rng::mix(base, 2));
  Rng rng_pert_s(Rng::mix(base, 3));
  Rng rng_pert_1(Rng::mix(base, 4));
  Rng rng_pert_2(Rng::mix(base, 5));

  std::vector<std::size_t> order_s(source.count()), order_t(target.count());
  for (std::size_t i = 0; i < order_s.size(); ++i) order_s[i] = i;
  for (std::size_t i = 0; i < order_t.size(); ++i) order_t[i] = i;
  rng_perm_s.shuffle(order_s);
  rng_perm_t.shuffle(order_t);

  const std::size_t n_batches = std::min(source.count(), target.count()) / batch;
  std::vector<BatchTriple> triples;
  triples.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    BatchTriple t;
    t.source_inputs = empty_batch(source.inputs, batch);
    t.source_labels.resize(batch);
    t.target_v1 = empty_batch(target.inputs, batch);
    t.target_v2 = empty_batch(target.inputs, batch);
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t si = order_s[b * batch + i];
      const std::size_t ti = order_t[b * batch + i];
      place_sample(t.source_inputs, i, perturb(sample_at(source.inputs, si), spec, rng_pert_s));
      t.source_labels[i] = source.labels[si];
      const Tensor raw = sample_at(target.inputs, ti);
      place_sample(t.target_v1, i, perturb(raw, spec, rng_pert_1));
      place_sample(t.target_v2, i, perturb(raw, spec, rng_pert_2));
    }
    triples.push_back(std::move(t));
  }
  return triples;
}

}  // namespace dwt
