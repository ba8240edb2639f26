#ifndef DWT_GRADCHECK_SUITE_HPP
#define DWT_GRADCHECK_SUITE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dwt/layer.hpp"
#include "dwt/tensor.hpp"

namespace dwt {

struct GradCheckEntry {
  std::string name;
  std::string shapes;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 1e-4;

  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return !entries.empty();
  }
  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
  }
};

// Analytic-vs-central-difference error of one layer on one input: the input
// gradient and every parameter gradient, max over coordinates. The layer is
// probed through f(.) = sum(forward(.) . R) with a fixed random projection.
double layer_max_rel_err(Layer& layer, const Tensor& input, Mode mode, std::uint64_t seed);

// The full battery: every layer kind, every loss, and the complete
// three-batch training step, each over `seeds` random draws; tolerance
// 1e-4 at h = 1e-5.
GradCheckReport run_gradcheck_suite(std::size_t seeds = 20);

std::string format_report(const GradCheckReport& report);

}  // namespace dwt

#endif  // DWT_GRADCHECK_SUITE_HPP
