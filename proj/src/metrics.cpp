#include "dwt/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace dwt {

namespace {

std::size_t argmax_row(const LogProbs& lp, std::size_t i) {
  std::size_t best = 0;
  for (std::size_t y = 1; y < lp.classes(); ++y)
    if (lp(i, y) > lp(i, best)) best = y;
  return best;
}

}  // namespace

double accuracy(const LogProbs& lp, const std::vector<std::size_t>& labels) {
  if (labels.size() != lp.samples()) throw ShapeError("accuracy: length mismatch");
  if (labels.empty()) throw ShapeError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (argmax_row(lp, i) == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<std::vector<std::size_t>> confusion_matrix(const LogProbs& lp,
                                                       const std::vector<std::size_t>& labels) {
  if (labels.size() != lp.samples()) throw ShapeError("confusion_matrix: length mismatch");
  const std::size_t c = lp.classes();
  std::vector<std::vector<std::size_t>> counts(c, std::vector<std::size_t>(c, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= c) throw LabelError("confusion_matrix: label out of range");
    counts[labels[i]][argmax_row(lp, i)] += 1;
  }
  return counts;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_header() {
  return "epoch,variant,g,n_dwt,loss_source,loss_target,loss_total,source_acc,target_acc";
}

std::string metrics_line(const MetricsRow& r) {
  std::ostringstream os;
  os << r.epoch << ',' << r.variant << ',' << r.g << ',' << r.n_dwt << ','
     << format_double(r.loss_source) << ',' << format_double(r.loss_target) << ','
     << format_double(r.loss_total) << ',' << format_double(r.source_acc) << ','
     << format_double(r.target_acc);
  return os.str();
}

MetricsRow parse_metrics_line(const std::string& line) {
  std::istringstream is(line);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (fields.size() != 9) throw FormatError("metrics line has " + std::to_string(fields.size()) +
                                            " fields, expected 9: " + line);
  MetricsRow r;
  r.epoch = std::stoul(fields[0]);
  r.variant = fields[1];
  r.g = std::stoul(fields[2]);
  r.n_dwt = std::stoul(fields[3]);
  r.loss_source = std::stod(fields[4]);
  r.loss_target = std::stod(fields[5]);
  r.loss_total = std::stod(fields[6]);
  r.source_acc = std::stod(fields[7]);
  r.target_acc = std::stod(fields[8]);
  return r;
}

}  // namespace dwt
