// Acceptance suite: runs every criterion end to end and prints one
// pass/fail line each. Exit code 0 iff nothing failed (skips allowed).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dwt/ablate.hpp"
#include "dwt/config.hpp"
#include "dwt/gradcheck_suite.hpp"
#include "dwt/linalg.hpp"
#include "dwt/losses.hpp"
#include "dwt/train.hpp"
#include "dwt/whitening.hpp"

using namespace dwt;

namespace {

struct Outcome {
  enum class Kind { Pass, Fail, Skip } kind = Kind::Fail;
  std::string detail;
};

Outcome pass(std::string detail) { return {Outcome::Kind::Pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::Kind::Fail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Outcome::Kind::Skip, std::move(detail)}; }

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Tensor random_batch(std::size_t m, std::size_t d, Rng& rng) {
  Tensor b({m, d});
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.normal();
  return b;
}

std::string fmt(double v, const char* format = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Whitening identity on 200 random batches.
Outcome criterion_whitening_identity() {
  const double t0 = now_s();
  Rng rng(20240601);
  const std::size_t m = 64, d = 8;
  const std::size_t group_sizes[3] = {2, 4, 8};
  double worst_cov = 0.0, worst_mean = 0.0;

  for (int batch_idx = 0; batch_idx < 200; ++batch_idx) {
    const std::size_t g = group_sizes[batch_idx % 3];
    Tensor batch = random_batch(m, d, rng);
    auto stats = batch_stats(batch, g, 1e-6);
    Tensor white = bw_forward(batch, stats, Tensor::full({d}, 1.0), Tensor({d}));

    for (std::size_t c0 = 0; c0 < d; c0 += g) {
      for (std::size_t k = 0; k < g; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < m; ++i) mean += white(i, c0 + k);
        worst_mean = std::max(worst_mean, std::fabs(mean / static_cast<double>(m)));
      }
      for (std::size_t a = 0; a < g; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
          double cov = 0.0;
          for (std::size_t i = 0; i < m; ++i) cov += white(i, c0 + a) * white(i, c0 + b);
          cov /= static_cast<double>(m);
          worst_cov = std::max(worst_cov, std::fabs(cov - (a == b ? 1.0 : 0.0)));
        }
      }
    }
  }
  const double elapsed = now_s() - t0;
  const std::string detail = "max |cov-I| " + fmt(worst_cov) + ", max |mean| " +
                             fmt(worst_mean) + ", " + fmt(elapsed, "%.2f") + "s";
  if (worst_cov < 1e-5 && worst_mean < 1e-8 && elapsed < 10.0) return pass(detail);
  return fail(detail);
}

// ---------------------------------------------------------------------------
// 2. g=1 DWT equals direct per-feature standardization.
Outcome criterion_bn_reduction() {
  Rng rng(20240602);
  const std::size_t m = 32, d = 6;
  double worst = 0.0;
  for (int batch_idx = 0; batch_idx < 100; ++batch_idx) {
    Tensor batch = random_batch(m, d, rng);
    DwtLayer layer(d, 1, 1e-5, 0.1);
    for (std::size_t k = 0; k < d; ++k) {
      layer.gamma().value[k] = rng.uniform(-2.0, 2.0);
      layer.beta().value[k] = rng.uniform(-1.0, 1.0);
    }
    Tensor out = layer.forward(batch, Mode::Train, DomainTag::Source);

    for (std::size_t k = 0; k < d; ++k) {
      double mu = 0.0;
      for (std::size_t i = 0; i < m; ++i) mu += batch(i, k);
      mu /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) var += (batch(i, k) - mu) * (batch(i, k) - mu);
      var /= static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double direct = layer.gamma().value[k] * (batch(i, k) - mu) /
                                  std::sqrt(var + 1e-5) +
                              layer.beta().value[k];
        worst = std::max(worst, std::fabs(out(i, k) - direct));
      }
    }
  }
  const std::string detail = "max |dwt - bn| " + fmt(worst);
  return worst < 1e-10 ? pass(detail) : fail(detail);
}

// ---------------------------------------------------------------------------
// 3. Gradient integrity: the full suite at 20 seeds in under 2 minutes.
Outcome criterion_gradient_integrity() {
  const double t0 = now_s();
  GradCheckReport report = run_gradcheck_suite(20);
  const double elapsed = now_s() - t0;
  const std::string detail = std::to_string(report.entries.size()) + " checks, worst " +
                             fmt(report.worst()) + ", " + fmt(elapsed, "%.1f") + "s";
  if (report.all_pass() && elapsed < 120.0) return pass(detail);
  return fail(detail + (report.all_pass() ? "" : "; " + format_report(report)));
}

// ---------------------------------------------------------------------------
// 4. MEC algebra by brute-force enumeration over random prediction pairs.
Outcome criterion_mec_algebra() {
  Rng rng(20240604);
  for (std::size_t classes : {2u, 3u, 10u}) {
    for (int trial = 0; trial < 10000; ++trial) {
      Tensor l1({1, classes}), l2({1, classes});
      for (std::size_t y = 0; y < classes; ++y) {
        l1(0, y) = rng.uniform(-3.0, 3.0);
        l2(0, y) = rng.uniform(-3.0, 3.0);
      }
      LogProbs a = log_softmax(l1), b = log_softmax(l2);

      // Independent enumeration of the per-row value.
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t y = 0; y < classes; ++y)
        best = std::max(best, a(0, y) + b(0, y));
      const double enumerated = -0.5 * best;

      const double v_ab = mec_loss(a, b).value;
      const double v_ba = mec_loss(b, a).value;
      if (v_ab != v_ba) return fail("symmetry broken at C=" + std::to_string(classes));
      if (v_ab != enumerated) return fail("value differs from enumeration");
      if (!(v_ab >= 0.0)) return fail("negative mec value");

      // Identical views: the mean min-entropy.
      double max_lp = a(0, 0);
      std::size_t argmax_a = 0;
      for (std::size_t y = 1; y < classes; ++y)
        if (a(0, y) > max_lp) {
          max_lp = a(0, y);
          argmax_a = y;
        }
      if (mec_loss(a, a).value != -max_lp) return fail("min-entropy reduction broken");

      // Consensus lower bound, equality iff the argmax classes coincide.
      double max_lp_b = b(0, 0);
      std::size_t argmax_b = 0;
      for (std::size_t y = 1; y < classes; ++y)
        if (b(0, y) > max_lp_b) {
          max_lp_b = b(0, y);
          argmax_b = y;
        }
      const double bound = -0.5 * (max_lp + max_lp_b);
      if (v_ab < bound) return fail("consensus bound violated");
      if (argmax_a == argmax_b && v_ab != bound) return fail("equality missing at agreement");
      if (argmax_a != argmax_b && !(v_ab > bound)) return fail("strictness missing");
    }

    // Uniform rows at this class count.
    Tensor u({1, classes});
    LogProbs lu = log_softmax(u);
    if (std::fabs(mec_loss(lu, lu).value - std::log(static_cast<double>(classes))) > 1e-12)
      return fail("uniform value differs from log C");
  }
  return pass("3 x 10000 pairs, C in {2,3,10}");
}

// ---------------------------------------------------------------------------
// 5. Uniform-prediction discrimination.
Outcome criterion_uniform_discrimination() {
  for (std::size_t classes : {2u, 3u, 10u}) {
    Tensor logits({1, classes});
    LogProbs u = log_softmax(logits);
    const double l2 = consistency_l2(u, u).value;
    const double mec = mec_loss(u, u).value;
    if (l2 != 0.0)
      return fail("consistency_l2 nonzero at uniform, C=" + std::to_string(classes));
    if (std::fabs(mec - std::log(static_cast<double>(classes))) > 1e-12)
      return fail("mec differs from log C at uniform, C=" + std::to_string(classes));
  }
  return pass("consistency 0, mec = log C at C in {2,3,10}");
}

// ---------------------------------------------------------------------------
// 6. Desk-scale adaptation gain on the calibrated synthetic benchmark.
SyntheticSpec benchmark_data() {
  SyntheticSpec spec;
  spec.n_per_domain = 2000;
  spec.classes = 3;
  spec.dim = 8;
  spec.noise = 0.3;
  spec.mean_radius = 2.0;
  spec.corr_strength = 0.9;
  spec.corr_block = 4;
  spec.shift_a = make_rotation_scale(8, 30.0, {2.0, 0.5});
  spec.shift_b = Tensor({8});
  spec.shift_b[0] = 1.0;
  spec.shift_b[1] = -0.5;
  return spec;
}

struct VariantStats {
  double mean = 0.0;
  double sd = 0.0;
  double max_run_s = 0.0;
};

VariantStats run_benchmark_variant(Variant v, const SyntheticSpec& data) {
  std::vector<double> accs;
  VariantStats out;
  PerturbSpec pspec = PerturbSpec::none();
  pspec.input_noise = 0.1;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double t0 = now_s();
    auto [src, tgt] = gen_synthetic_shift(Rng::mix(seed, 0xDA7A), data);
    TrainConfig cfg;
    cfg.variant = v;
    cfg.batch = 64;
    cfg.epochs = 30;
    cfg.lambda = 0.1;
    cfg.g = 4;
    cfg.dump_dir = "/tmp";
    Network net = build_mlp({8, 64, 64, 3}, 2, 4, Rng::mix(seed, 0x1217));
    TrainRecord rec = train_loop(net, cfg, src, tgt, pspec, seed);
    accs.push_back(rec.final_target_acc * 100.0);
    out.max_run_s = std::max(out.max_run_s, now_s() - t0);
  }
  for (double a : accs) out.mean += a;
  out.mean /= static_cast<double>(accs.size());
  for (double a : accs) out.sd += (a - out.mean) * (a - out.mean);
  out.sd = std::sqrt(out.sd / static_cast<double>(accs.size()));
  return out;
}

Outcome criterion_adaptation_gain() {
  const SyntheticSpec data = benchmark_data();
  const VariantStats base = run_benchmark_variant(Variant::SourceOnly, data);
  const VariantStats entropy = run_benchmark_variant(Variant::DwtEntropy, data);
  const VariantStats mec = run_benchmark_variant(Variant::DwtMec, data);

  std::ostringstream os;
  os << "a0 " << fmt(base.mean, "%.1f") << "+-" << fmt(base.sd, "%.1f") << ", entropy "
     << fmt(entropy.mean, "%.1f") << "+-" << fmt(entropy.sd, "%.1f") << ", mec "
     << fmt(mec.mean, "%.1f") << "+-" << fmt(mec.sd, "%.1f") << ", max seed time "
     << fmt(std::max({base.max_run_s, entropy.max_run_s, mec.max_run_s}), "%.1f") << "s";

  const bool ok = entropy.mean >= base.mean + 10.0 && mec.mean >= base.mean + 15.0 &&
                  base.sd < 5.0 && entropy.sd < 5.0 && mec.sd < 5.0 &&
                  base.max_run_s < 300.0 && entropy.max_run_s < 300.0 &&
                  mec.max_run_s < 300.0;
  return ok ? pass(os.str()) : fail(os.str());
}

// ---------------------------------------------------------------------------
// 7. Ablation trend on the strongly correlated task.
Outcome criterion_ablation_trend() {
  RunConfig cfg;
  cfg.train.variant = Variant::DwtMec;
  cfg.train.batch = 64;
  cfg.train.epochs = 30;
  cfg.train.g = 4;
  cfg.train.dump_dir = "/tmp";
  cfg.model_kind = "mlp";
  cfg.hidden = {64, 64};
  cfg.n_dwt = 2;
  cfg.data_kind = "synthetic";
  cfg.synthetic.n_per_domain = 2000;
  cfg.synthetic.classes = 3;
  cfg.synthetic.dim = 8;
  cfg.synthetic.noise = 1.1;
  cfg.synthetic.mean_radius = 2.0;
  cfg.synthetic.corr_strength = 0.95;
  cfg.synthetic.corr_block = 4;
  cfg.synthetic.shift_a = make_rotation_scale(8, 45.0, {2.2, 0.35});
  cfg.synthetic.shift_b = Tensor({8});
  cfg.synthetic.shift_b[0] = 1.0;
  cfg.synthetic.shift_b[1] = -0.5;
  cfg.perturb = PerturbSpec::none();
  cfg.perturb.input_noise = 0.1;

  auto cells = run_ablation(cfg, {1, 2, 4}, {2}, {1, 2, 3});

  auto mean_of = [&](std::size_t g) {
    double m = 0.0;
    int n = 0;
    for (const auto& c : cells)
      if (c.g == g && !c.skipped) {
        m += c.final_target_acc * 100.0;
        ++n;
      }
    return m / n;
  };
  auto acc_of = [&](std::size_t g, std::uint64_t seed) {
    for (const auto& c : cells)
      if (c.g == g && c.seed == seed && !c.skipped) return c.final_target_acc * 100.0;
    return 0.0;
  };

  const double m1 = mean_of(1), m2 = mean_of(2), m4 = mean_of(4);
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
    if (acc_of(4, seed) > acc_of(1, seed)) ++wins;

  std::ostringstream os;
  os << "mean acc g1 " << fmt(m1, "%.1f") << ", g2 " << fmt(m2, "%.1f") << ", g4 "
     << fmt(m4, "%.1f") << "; g4>g1 in " << wins << "/3 seeds";
  const bool ok = m2 >= m1 - 1.0 && m4 >= m1 - 1.0 && wins >= 2;
  return ok ? pass(os.str()) : fail(os.str());
}

// ---------------------------------------------------------------------------
// 8. Determinism of the train CLI.
Outcome criterion_determinism() {
  const std::string dir = "/tmp/dwt_accept";
  std::filesystem::create_directories(dir);
  const std::string config_path = dir + "/determinism.json";
  {
    std::ofstream cfg(config_path);
    cfg << R"({
      "variant": "dwt-mec",
      "seed": 7,
      "train": {"batch": 64, "epochs": 3, "g": 4},
      "model": {"kind": "mlp", "hidden": [32, 32], "n_dwt": 2},
      "data": {"kind": "synthetic", "n_per_domain": 600, "classes": 3, "dim": 8,
               "noise": 0.3, "corr_strength": 0.9, "corr_block": 4,
               "rotation_deg": 30, "scales": [2.0, 0.5], "offset": [1.0, -0.5]},
      "perturb": {"input_noise": 0.1}
    })";
  }
  auto run_once = [&](const std::string& out_dir) {
    const std::string cmd = std::string(DWT_CLI_PATH) + " train --config " + config_path +
                            " --out " + out_dir + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  if (run_once(dir + "/run_a") != 0) return fail("first train invocation failed");
  if (run_once(dir + "/run_b") != 0) return fail("second train invocation failed");

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  const std::string a = slurp(dir + "/run_a/metrics.csv");
  const std::string b = slurp(dir + "/run_b/metrics.csv");
  if (a.empty()) return fail("metrics file missing");
  if (a != b) return fail("metrics files differ between identical runs");
  return pass("two runs, " + std::to_string(a.size()) + " bytes, bitwise identical");
}

// ---------------------------------------------------------------------------
// 9. Optional IDX smoke test.
std::optional<std::string> find_mnist_dir() {
  std::vector<std::string> candidates;
  if (const char* env = std::getenv("DWT_MNIST_DIR"); env && *env) candidates.push_back(env);
  candidates.push_back("data/mnist");
  candidates.push_back("../data/mnist");
  for (const std::string& dir : candidates) {
    if (std::filesystem::exists(dir + "/train-images-idx3-ubyte") &&
        std::filesystem::exists(dir + "/train-labels-idx1-ubyte")) {
      return dir;
    }
  }
  return std::nullopt;
}

Outcome criterion_idx_smoke() {
  const auto dir = find_mnist_dir();
  if (!dir) return skip("MNIST IDX files not found (set DWT_MNIST_DIR to run)");

  const double t0 = now_s();
  LabeledSet source = load_idx(*dir + "/train-images-idx3-ubyte",
                               *dir + "/train-labels-idx1-ubyte", DomainTag::Source, 5000);

  // Pseudo-target: a fixed affine warp of every source image.
  LabeledSet target;
  target.domain = DomainTag::Target;
  target.labels = source.labels;
  target.inputs = Tensor(source.inputs.shape());
  const double th = 20.0 * 3.14159265358979323846 / 180.0;
  const double s = 1.15;
  const double warp[4] = {s * std::cos(th), -s * std::sin(th), s * std::sin(th),
                          s * std::cos(th)};
  for (std::size_t i = 0; i < source.count(); ++i) {
    Tensor img = sample_at(source.inputs, i);
    Tensor warped = warp_affine(img, warp, 2.0, 1.0);
    for (std::size_t k = 0; k < warped.size(); ++k)
      target.inputs[i * warped.size() + k] = warped[k];
  }

  auto run_variant = [&](Variant v) {
    TrainConfig cfg;
    cfg.variant = v;
    cfg.batch = 64;
    cfg.epochs = 10;
    cfg.g = 4;
    cfg.dump_dir = "/tmp";
    PerturbSpec pspec;  // stock image-perturbation ranges
    Network net = build_cnn({1, 8, 16}, 28, 28, 10, 1, 4, Rng::mix(3, 0x1217));
    TrainRecord rec = train_loop(net, cfg, source, target, pspec, 3);
    return rec.final_target_acc * 100.0;
  };
  const double base = run_variant(Variant::SourceOnly);
  const double mec = run_variant(Variant::DwtMec);
  const double elapsed = now_s() - t0;

  std::ostringstream os;
  os << "source-only " << fmt(base, "%.1f") << ", dwt-mec " << fmt(mec, "%.1f") << ", "
     << fmt(elapsed, "%.0f") << "s";
  return (mec >= base + 3.0 && elapsed < 600.0) ? pass(os.str()) : fail(os.str());
}

}  // namespace

int main() {
  struct Criterion {
    const char* label;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"1 whitening identity", criterion_whitening_identity},
      {"2 bn reduction", criterion_bn_reduction},
      {"3 gradient integrity", criterion_gradient_integrity},
      {"4 mec algebra", criterion_mec_algebra},
      {"5 uniform-prediction discrimination", criterion_uniform_discrimination},
      {"6 desk-scale adaptation gain", criterion_adaptation_gain},
      {"7 ablation trend", criterion_ablation_trend},
      {"8 determinism", criterion_determinism},
      {"9 idx smoke test", criterion_idx_smoke},
  };

  bool any_failed = false;
  for (const Criterion& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.fn();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.kind == Outcome::Kind::Pass   ? "[PASS]"
                      : outcome.kind == Outcome::Kind::Skip ? "[SKIP]"
                                                            : "[FAIL]";
    std::printf("%s criterion %s: %s\n", tag, c.label, outcome.detail.c_str());
    std::fflush(stdout);
    if (outcome.kind == Outcome::Kind::Fail) any_failed = true;
  }
  return any_failed ? 1 : 0;
}
