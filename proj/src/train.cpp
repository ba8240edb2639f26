#include "dwt/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "dwt/losses.hpp"

namespace dwt {

namespace {

// Concatenates two batches along the sample dimension.
Tensor stack_batches(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("stack_batches: view shapes differ");
  std::vector<std::size_t> shape = a.shape();
  shape[0] *= 2;
  Tensor out(shape);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[a.size() + i] = b[i];
  return out;
}

Tensor rows_slice(const Tensor& m, std::size_t row0, std::size_t rows) {
  Tensor out({rows, m.cols()});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(row0 + i, j);
  return out;
}

double grad_norm(Network& net) {
  double s = 0.0;
  for (Parameter* p : net.parameters())
    for (std::size_t k = 0; k < p->grad.size(); ++k) s += p->grad[k] * p->grad[k];
  return std::sqrt(s);
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::SourceOnly: return "source-only";
    case Variant::DwtEntropy: return "dwt-entropy";
    case Variant::DwtMec: return "dwt-mec";
    case Variant::DwtMecMt: return "dwt-mec-mt";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "source-only") return Variant::SourceOnly;
  if (s == "dwt-entropy") return Variant::DwtEntropy;
  if (s == "dwt-mec") return Variant::DwtMec;
  if (s == "dwt-mec-mt") return Variant::DwtMecMt;
  throw ConfigError("unknown variant '" + s + "'");
}

void TrainConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (ema_decay < 0.0 || ema_decay >= 1.0) throw ConfigError("ema_decay must lie in [0,1)");
  if (batch < 2) throw ConfigError("batch must be at least 2");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (g == 0) throw ConfigError("g must be positive");
  if (epsilon < 0.0) throw ConfigError("epsilon must be nonnegative");
  if (rho < 0.0 || rho > 1.0) throw ConfigError("rho must lie in [0,1]");
  if (lr_factor <= 0.0 || lr_factor > 1.0) throw ConfigError("lr_factor must lie in (0,1]");
}

LrSchedule TrainConfig::schedule() const {
  LrSchedule s = LrSchedule::from_epochs(lr, epochs, lr_factor);
  if (lr_decay1 > 0) s.decay1 = lr_decay1;
  if (lr_decay2 > 0) s.decay2 = lr_decay2;
  return s;
}

StepMetrics train_step(Network& net, const BatchTriple& triple, const TrainConfig& cfg,
                       Optimizer& optim, double lr) {
  net.zero_grads();
  StepMetrics out;

  // Source stream with source statistics.
  Tensor logits_s = net.forward(triple.source_inputs, Mode::Train, DomainTag::Source);
  LogProbs lp_s = log_softmax(logits_s);
  LossValue ls = cross_entropy(lp_s, triple.source_labels);
  net.backward(log_softmax_backward(ls.grads[0], lp_s));
  out.loss_source = ls.value;

  // Target stream, variant dependent.
  if (cfg.variant == Variant::DwtEntropy) {
    Tensor logits_t = net.forward(triple.target_v1, Mode::Train, DomainTag::Target);
    LogProbs lp_t = log_softmax(logits_t);
    LossValue lt = entropy_loss(lp_t);
    out.loss_target = lt.value;
    if (cfg.lambda > 0.0) {
      net.backward(log_softmax_backward(lt.grads[0] * cfg.lambda, lp_t));
    }
  } else if (cfg.variant == Variant::DwtMec || cfg.variant == Variant::DwtMecMt) {
    // One statistic from the 2m-row union whitens both views.
    const std::size_t m = triple.target_v1.dim(0);
    Tensor joined = stack_batches(triple.target_v1, triple.target_v2);
    Tensor logits = net.forward(joined, Mode::Train, DomainTag::Target);
    LogProbs lp_all = log_softmax(logits);
    LogProbs lp1 = LogProbs::from_log_matrix(rows_slice(lp_all.matrix(), 0, m));
    LogProbs lp2 = LogProbs::from_log_matrix(rows_slice(lp_all.matrix(), m, m));
    LossValue lt = mec_loss(lp1, lp2);
    out.loss_target = lt.value;
    if (cfg.lambda > 0.0) {
      Tensor grad_lp({2 * m, lp_all.classes()});
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t y = 0; y < lp_all.classes(); ++y) {
          grad_lp(i, y) = cfg.lambda * lt.grads[0](i, y);
          grad_lp(m + i, y) = cfg.lambda * lt.grads[1](i, y);
        }
      net.backward(log_softmax_backward(grad_lp, lp_all));
    }
  }

  out.loss_total = out.loss_source + cfg.lambda * out.loss_target;
  out.grad_norm = grad_norm(net);
  optim.step(net.parameters(), lr);
  return out;
}

LogProbs evaluate_log_probs(Network& net, const Tensor& inputs, DomainTag stats_domain,
                            std::size_t chunk) {
  const std::size_t n = inputs.dim(0);
  std::size_t classes = 0;
  std::size_t done = 0;
  std::vector<Tensor> pieces;
  while (done < n) {
    const std::size_t take = std::min(chunk, n - done);
    std::vector<std::size_t> shape = inputs.shape();
    shape[0] = take;
    Tensor part(shape);
    const std::size_t stride = inputs.size() / n;
    for (std::size_t i = 0; i < take * stride; ++i) part[i] = inputs[done * stride + i];
    Tensor logits = net.forward(part, Mode::Eval, stats_domain);
    classes = logits.cols();
    pieces.push_back(std::move(logits));
    done += take;
  }
  Tensor logits({n, classes});
  std::size_t row = 0;
  for (const Tensor& p : pieces)
    for (std::size_t i = 0; i < p.rows(); ++i, ++row)
      for (std::size_t y = 0; y < classes; ++y) logits(row, y) = p(i, y);
  return log_softmax(logits);
}

double evaluate_accuracy(Network& net, const LabeledSet& data, DomainTag stats_domain,
                         std::size_t chunk) {
  return accuracy(evaluate_log_probs(net, data.inputs, stats_domain, chunk), data.labels);
}

namespace {

constexpr std::uint64_t kPrimeEpochTag = 0x5052494d45ULL;  // statistics priming stream

void write_nonfinite_dump(const std::string& path, std::size_t epoch, std::size_t step,
                          const StepMetrics& metrics, Network& net) {
  std::ofstream out(path);
  out << "non-finite loss\n";
  out << "epoch " << epoch << " step " << step << "\n";
  out << "loss_source " << metrics.loss_source << "\n";
  out << "loss_target " << metrics.loss_target << "\n";
  out << "grad_norm " << metrics.grad_norm << "\n";
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    double mx = max_abs(params[i]->value);
    out << "param[" << i << "] size " << params[i]->value.size() << " max_abs " << mx << "\n";
  }
}

}  // namespace

TrainRecord train_loop(Network& net, const TrainConfig& cfg, const LabeledSet& source,
                       const LabeledSet& target, const PerturbSpec& spec, std::uint64_t seed,
                       std::optional<Network>* teacher_out, const RowCallback& on_row) {
  cfg.validate();
  const PerturbSpec effective_spec = cfg.uses_perturbation() ? spec : PerturbSpec::none();
  const LrSchedule schedule = cfg.schedule();
  const bool has_whitening = !net.whitening_layers().empty();
  // Source-only never sees target data, so its target evaluation has to run
  // on source statistics; adaptive variants evaluate with target statistics.
  const DomainTag eval_domain =
      cfg.variant == Variant::SourceOnly ? DomainTag::Source : DomainTag::Target;

  // Prime the running statistics so the epoch-0 evaluation is defined.
  if (has_whitening) {
    auto prime = epoch_triples(source, target, cfg.batch, effective_spec, seed, kPrimeEpochTag);
    if (!prime.empty()) {
      net.forward(prime[0].source_inputs, Mode::Train, DomainTag::Source);
      if (cfg.variant != Variant::SourceOnly) {
        net.forward(stack_batches(prime[0].target_v1, prime[0].target_v2), Mode::Train,
                    DomainTag::Target);
      }
    }
  }

  std::optional<Network> teacher;
  if (cfg.variant == Variant::DwtMecMt) teacher = net.clone();
  Network& eval_net_ref = [&]() -> Network& { return teacher ? *teacher : net; }();

  Adam optim(cfg.weight_decay);
  TrainRecord record;

  auto emit_row = [&](std::size_t epoch, double ls, double lt, double wall) {
    MetricsRow row;
    row.epoch = epoch;
    row.variant = to_string(cfg.variant);
    row.g = cfg.g;
    row.n_dwt = net.dwt_layer_count();
    row.loss_source = ls;
    row.loss_target = lt;
    row.loss_total = ls + cfg.lambda * lt;
    row.source_acc = evaluate_accuracy(eval_net_ref, source, DomainTag::Source);
    row.target_acc = evaluate_accuracy(eval_net_ref, target, eval_domain);
    row.wall_time_s = wall;
    record.rows.push_back(row);
    if (on_row) on_row(row);
  };

  emit_row(0, 0.0, 0.0, 0.0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = schedule.at(epoch);
    auto triples = epoch_triples(source, target, cfg.batch, effective_spec, seed, epoch);
    double sum_ls = 0.0, sum_lt = 0.0;
    for (std::size_t si = 0; si < triples.size(); ++si) {
      StepMetrics sm = train_step(net, triples[si], cfg, optim, lr);
      if (!std::isfinite(sm.loss_total)) {
        const std::string path = cfg.dump_dir + "/nonfinite_dump.txt";
        write_nonfinite_dump(path, epoch, si, sm, net);
        throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(epoch) +
                                     " step " + std::to_string(si),
                                 path);
      }
      if (teacher) ema_update(*teacher, net, cfg.ema_decay);
      sum_ls += sm.loss_source;
      sum_lt += sm.loss_target;
    }
    const double denom = triples.empty() ? 1.0 : static_cast<double>(triples.size());
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_row(epoch + 1, sum_ls / denom, sum_lt / denom, wall);
  }

  record.final_target_acc = record.rows.back().target_acc;
  if (teacher_out && teacher) *teacher_out = std::move(teacher);
  return record;
}

}  // namespace dwt
