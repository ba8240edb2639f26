#ifndef DWT_TRAIN_HPP
#define DWT_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dwt/data.hpp"
#include "dwt/metrics.hpp"
#include "dwt/network.hpp"
#include "dwt/optim.hpp"

namespace dwt {

enum class Variant { SourceOnly, DwtEntropy, DwtMec, DwtMecMt };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct TrainConfig {
  Variant variant = Variant::DwtMec;
  double lambda = 0.1;
  std::size_t batch = 64;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  std::size_t epochs = 30;
  // 0 means "derive from epochs" at the 50/120 and 90/120 fractions.
  std::size_t lr_decay1 = 0;
  std::size_t lr_decay2 = 0;
  double lr_factor = 0.1;
  std::size_t g = 4;
  double epsilon = 1e-5;
  double rho = 0.1;
  double ema_decay = 0.99;
  std::string dump_dir = ".";

  void validate() const;
  LrSchedule schedule() const;
  // MEC variants perturb; source-only and dwt-entropy train on raw batches.
  bool uses_perturbation() const {
    return variant == Variant::DwtMec || variant == Variant::DwtMecMt;
  }
};

struct StepMetrics {
  double loss_source = 0.0;
  double loss_target = 0.0;
  double loss_total = 0.0;
  double grad_norm = 0.0;
};

// One three-batch update: source cross-entropy, the variant's target loss
// over the two views (one shared target statistic from the concatenated 2m
// rows), backward through all streams into the shared weights, optimizer
// step, running-statistic updates.
StepMetrics train_step(Network& net, const BatchTriple& triple, const TrainConfig& cfg,
                       Optimizer& optim, double lr);

// Eval-mode forward over the whole set in chunks; the statistics of
// stats_domain are used at every whitening layer.
LogProbs evaluate_log_probs(Network& net, const Tensor& inputs, DomainTag stats_domain,
                            std::size_t chunk = 256);
double evaluate_accuracy(Network& net, const LabeledSet& data, DomainTag stats_domain,
                         std::size_t chunk = 256);

struct TrainRecord {
  std::vector<MetricsRow> rows;  // epoch 0 (initial evaluation) through epochs
  double final_target_acc = 0.0;
};

// Full training run: statistics priming, epochs of train_step over
// epoch_triples, the step LR schedule, per-epoch evaluation (teacher network
// for the mean-teacher variant). Deterministic in (cfg, seed). On a
// non-finite loss, writes a diagnostics dump and throws NonFiniteLossError.
// When teacher_out is non-null and the variant is mean-teacher, the teacher
// is moved there after the run.
using RowCallback = std::function<void(const MetricsRow&)>;

TrainRecord train_loop(Network& net, const TrainConfig& cfg, const LabeledSet& source,
                       const LabeledSet& target, const PerturbSpec& spec, std::uint64_t seed,
                       std::optional<Network>* teacher_out = nullptr,
                       const RowCallback& on_row = {});

}  // namespace dwt

#endif  // DWT_TRAIN_HPP
