#ifndef DWT_DATA_HPP
#define DWT_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dwt/layer.hpp"
#include "dwt/rng.hpp"
#include "dwt/tensor.hpp"

namespace dwt {

struct LabeledSet {
  Tensor inputs;                    // n x ... (n x d vectors or n x c x h x w images)
  std::vector<std::size_t> labels;  // n entries
  DomainTag domain = DomainTag::Source;

  std::size_t count() const { return labels.size(); }
};

// Perturbation ranges. Image samples get a random affine warp (translation,
// rotation, scale, shear; bilinear, zero fill) followed by a Gaussian blur.
// Flat feature vectors have no geometry, so they get additive Gaussian noise
// of scale input_noise instead.
struct PerturbSpec {
  double max_translation = 0.05;  // fraction of (h, w)
  double blur_sigma = 0.1;
  double rotation_deg = 10.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double shear_deg = 5.0;
  double input_noise = 0.0;

  bool is_identity() const {
    return max_translation == 0.0 && blur_sigma == 0.0 && rotation_deg == 0.0 &&
           scale_min == 1.0 && scale_max == 1.0 && shear_deg == 0.0 && input_noise == 0.0;
  }
  static PerturbSpec none() { return {0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0}; }
  void validate() const;
};

// One training step's input. Target views are row-aligned perturbations of
// the same underlying samples and deliberately carry no labels.
struct BatchTriple {
  Tensor source_inputs;
  std::vector<std::size_t> source_labels;
  Tensor target_v1;
  Tensor target_v2;
};

// Affine domain shift x -> A x + b plus blob geometry for the synthetic
// two-domain task.
struct SyntheticSpec {
  std::size_t n_per_domain = 2000;
  std::size_t classes = 3;
  std::size_t dim = 8;
  double noise = 0.3;
  double mean_radius = 2.0;
  // Within-block equicorrelation of the class covariance; corr_block = 1 or
  // corr_strength = 0 gives independent features.
  double corr_strength = 0.0;
  std::size_t corr_block = 1;
  Tensor shift_a;  // dim x dim, invertible
  Tensor shift_b;  // dim

  void validate() const;
};

// Builds A = R(theta, plane 0-1) * diag(scales) padded with 1s.
Tensor make_rotation_scale(std::size_t dim, double rotation_deg,
                           const std::vector<double>& scales);

// Source: Gaussian blobs around class means on a circle in the first two
// coordinates, mixed by the correlated class covariance. Target: fresh draws
// of the same process mapped through x -> A x + b. Deterministic in seed.
std::pair<LabeledSet, LabeledSet> gen_synthetic_shift(std::uint64_t seed,
                                                      const SyntheticSpec& spec);

// IDX (big-endian) image + label reader; pixels scaled to [0,1], shape
// n x 1 x h x w. Malformed input raises FormatError naming the byte offset.
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path,
                    DomainTag domain = DomainTag::Source, std::size_t limit = 0);

// One sample: image (c x h x w slice passed as rank-3 tensor) -> warped and
// blurred copy, clamped to [0,1]; vectors (rank 1) -> noisy copy.
Tensor perturb(const Tensor& sample, const PerturbSpec& spec, Rng& rng);

// Bilinear affine resample about the image center with zero fill. m is the
// row-major 2x2 map on (y, x) offsets, (ty, tx) the translation in pixels.
Tensor warp_affine(const Tensor& image, const double m[4], double ty, double tx);

// Separable Gaussian blur, kernel radius ceil(3*sigma), border-renormalized.
Tensor gaussian_blur(const Tensor& image, double sigma);

// All triples of one epoch: independent domain-wise shuffles, drop-last
// batching, source perturbed once and target twice. Deterministic function
// of (seed, epoch).
std::vector<BatchTriple> epoch_triples(const LabeledSet& source, const LabeledSet& target,
                                       std::size_t batch, const PerturbSpec& spec,
                                       std::uint64_t seed, std::uint64_t epoch);

// Row view of sample i as a standalone tensor (rank-1 d or rank-3 c,h,w).
Tensor sample_at(const Tensor& inputs, std::size_t i);

}  // namespace dwt

#endif  // DWT_DATA_HPP
