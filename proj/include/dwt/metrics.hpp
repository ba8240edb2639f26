#ifndef DWT_METRICS_HPP
#define DWT_METRICS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "dwt/losses.hpp"
#include "dwt/tensor.hpp"

namespace dwt {

// Fraction of rows whose argmax matches the label; argmax ties break toward
// the smallest index.
double accuracy(const LogProbs& lp, const std::vector<std::size_t>& labels);

// Rows are true classes, columns predictions; the grand total is n and
// trace/n equals accuracy exactly.
std::vector<std::vector<std::size_t>> confusion_matrix(const LogProbs& lp,
                                                       const std::vector<std::size_t>& labels);

// One evaluation row per epoch. Wall time is tracked separately from the
// deterministic metrics so metrics files stay bitwise reproducible.
struct MetricsRow {
  std::size_t epoch = 0;
  std::string variant;
  std::size_t g = 1;
  std::size_t n_dwt = 0;
  double loss_source = 0.0;
  double loss_target = 0.0;
  double loss_total = 0.0;
  double source_acc = 0.0;
  double target_acc = 0.0;
  double wall_time_s = 0.0;
};

std::string metrics_header();
std::string metrics_line(const MetricsRow& row);
MetricsRow parse_metrics_line(const std::string& line);

// Lossless round-trip formatting for doubles (max_digits10).
std::string format_double(double v);

}  // namespace dwt

#endif  // DWT_METRICS_HPP
