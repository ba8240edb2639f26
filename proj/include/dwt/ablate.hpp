#ifndef DWT_ABLATE_HPP
#define DWT_ABLATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dwt/config.hpp"
#include "dwt/metrics.hpp"

namespace dwt {

struct AblateCell {
  std::size_t g = 1;
  std::size_t n_dwt = 1;
  std::uint64_t seed = 1;
  bool skipped = false;
  std::string skip_reason;
  double final_target_acc = 0.0;
  std::vector<MetricsRow> rows;
};

// Cross-product sweep over (g, n_dwt) x seeds on the configured task. Cells
// whose group size does not divide a whitened layer width are skipped and
// recorded as such. Cells run in parallel worker threads; the returned order
// is deterministic, sorted by (g, n_dwt, seed).
std::vector<AblateCell> run_ablation(const RunConfig& base,
                                     const std::vector<std::size_t>& groups,
                                     const std::vector<std::size_t>& layers,
                                     const std::vector<std::uint64_t>& seeds,
                                     std::size_t workers = 0);

// Plot-ready long-format summary: one line per cell keyed (g, n_dwt, seed).
std::string ablate_summary_csv(const std::vector<AblateCell>& cells);

}  // namespace dwt

#endif  // DWT_ABLATE_HPP
