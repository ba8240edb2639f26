#ifndef DWT_CONFIG_HPP
#define DWT_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dwt/data.hpp"
#include "dwt/network.hpp"
#include "dwt/train.hpp"

namespace dwt {

// Everything a run needs: hyper-parameters, model choice, dataset selection,
// perturbation ranges, seed, output directory. Loaded from a JSON file;
// unknown keys are rejected, missing keys fall back to the documented
// defaults.
struct RunConfig {
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";

  // model
  std::string model_kind = "mlp";                // mlp | cnn
  std::vector<std::size_t> hidden = {64, 64};    // mlp hidden widths
  std::vector<std::size_t> channels = {8, 16};   // cnn channels per block
  std::size_t n_dwt = 2;

  // data
  std::string data_kind = "synthetic";  // synthetic | idx
  SyntheticSpec synthetic;              // shift built from the fields below
  double shift_rotation_deg = 30.0;
  std::vector<double> shift_scales = {1.0, 1.0};
  std::vector<double> shift_offset;
  std::string idx_source_images, idx_source_labels;
  std::string idx_target_images, idx_target_labels;
  std::size_t idx_limit = 0;

  PerturbSpec perturb;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Materializes the configured datasets (synthetic generation or IDX files;
// the IDX target reuses the source images under the configured perturbation
// pipeline only through training, so it is loaded as-is here).
std::pair<LabeledSet, LabeledSet> load_datasets(const RunConfig& cfg);

// Builds the configured classifier for the dataset's input shape.
Network build_from_config(const RunConfig& cfg, const LabeledSet& sample,
                          std::size_t n_classes);

std::size_t count_classes(const LabeledSet& a, const LabeledSet& b);

}  // namespace dwt

#endif  // DWT_CONFIG_HPP
