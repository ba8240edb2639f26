#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dwt/ablate.hpp"
#include "dwt/checkpoint.hpp"
#include "dwt/config.hpp"
#include "dwt/gradcheck_suite.hpp"
#include "dwt/metrics.hpp"
#include "dwt/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

// Precedence: --out flag, then DWT_OUT_DIR, then the config file.
std::string resolve_out_dir(const std::string& flag_value, const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("DWT_OUT_DIR"); env && *env) return env;
  return config_value;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw dwt::FormatError(path + ": cannot open for writing");
  out << text;
}

int cmd_gradcheck() {
  dwt::GradCheckReport report = dwt::run_gradcheck_suite(20);
  std::cout << dwt::format_report(report);
  return report.all_pass() ? kExitOk : kExitCheckFailed;
}

int cmd_train(const std::string& config_path, std::uint64_t seed_flag, bool seed_set,
              const std::string& out_flag) {
  dwt::RunConfig cfg = dwt::load_run_config(config_path);
  if (seed_set) cfg.seed = seed_flag;
  const std::string out_dir = resolve_out_dir(out_flag, cfg.out_dir);
  std::filesystem::create_directories(out_dir);
  cfg.train.dump_dir = out_dir;

  auto [source, target] = dwt::load_datasets(cfg);
  const std::size_t classes = dwt::count_classes(source, target);
  dwt::Network net = dwt::build_from_config(cfg, source, classes);

  // Deterministic metrics stream in one file, wall times in a sidecar; rows
  // are appended and flushed as epochs complete.
  std::ofstream metrics(out_dir + "/metrics.csv");
  std::ofstream timing(out_dir + "/timing.csv");
  if (!metrics || !timing) throw dwt::FormatError(out_dir + ": cannot open output files");
  metrics << dwt::metrics_header() << "\n";
  timing << "epoch,wall_time_s\n";
  auto on_row = [&](const dwt::MetricsRow& row) {
    metrics << dwt::metrics_line(row) << "\n";
    metrics.flush();
    timing << row.epoch << ',' << row.wall_time_s << "\n";
    timing.flush();
  };

  std::optional<dwt::Network> teacher;
  dwt::TrainRecord record;
  try {
    record = dwt::train_loop(net, cfg.train, source, target, cfg.perturb, cfg.seed, &teacher,
                             on_row);
  } catch (const dwt::NonFiniteLossError& e) {
    std::cerr << "error: " << e.what() << "\ndiagnostics: " << e.dump_path << "\n";
    return kExitCheckFailed;
  }

  // The evaluated network goes into the checkpoint (teacher for MT).
  dwt::Network& final_net = teacher ? *teacher : net;
  dwt::save_checkpoint(out_dir + "/checkpoint.dwt", final_net);

  std::printf("final target accuracy: %.2f%%\n", 100.0 * record.final_target_acc);
  std::printf("metrics: %s/metrics.csv\ncheckpoint: %s/checkpoint.dwt\n", out_dir.c_str(),
              out_dir.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_spec,
             const std::string& domain) {
  dwt::Network net = dwt::load_checkpoint(checkpoint_path);
  dwt::RunConfig cfg = dwt::load_run_config(data_spec);
  auto [source, target] = dwt::load_datasets(cfg);
  const dwt::LabeledSet& data = domain == "source" ? source : target;
  const dwt::DomainTag stats_domain =
      domain == "source" ? dwt::DomainTag::Source : dwt::DomainTag::Target;

  dwt::LogProbs lp = dwt::evaluate_log_probs(net, data.inputs, stats_domain);
  const double acc = dwt::accuracy(lp, data.labels);
  auto confusion = dwt::confusion_matrix(lp, data.labels);

  std::printf("%s accuracy: %.2f%% (%zu samples)\n", domain.c_str(), 100.0 * acc,
              data.count());
  std::printf("confusion matrix (rows = true class):\n");
  for (const auto& row : confusion) {
    for (std::size_t v : row) std::printf("%6zu", v);
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::size_t>& groups,
               const std::vector<std::size_t>& layers, std::vector<std::uint64_t> seeds,
               const std::string& out_flag) {
  dwt::RunConfig cfg = dwt::load_run_config(config_path);
  if (seeds.empty()) seeds.push_back(cfg.seed);
  const std::string out_dir = resolve_out_dir(out_flag, cfg.out_dir);
  std::filesystem::create_directories(out_dir);

  auto cells = dwt::run_ablation(cfg, groups, layers, seeds);

  for (const dwt::AblateCell& cell : cells) {
    if (cell.skipped) continue;
    std::ostringstream os;
    os << dwt::metrics_header() << "\n";
    for (const dwt::MetricsRow& row : cell.rows) os << dwt::metrics_line(row) << "\n";
    write_text(out_dir + "/cell_g" + std::to_string(cell.g) + "_l" +
                   std::to_string(cell.n_dwt) + "_s" + std::to_string(cell.seed) + ".csv",
               os.str());
  }
  const std::string summary = dwt::ablate_summary_csv(cells);
  write_text(out_dir + "/ablate_summary.csv", summary);
  std::cout << summary;
  std::printf("summary: %s/ablate_summary.csv\n", out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-specific whitening and min-entropy consensus trainer"};
  app.require_subcommand(1);

  auto* gradcheck = app.add_subcommand("gradcheck", "run the full gradient-check suite");

  std::string train_config, train_out;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", train_config, "run config (JSON)")->required();
  auto* seed_opt = train->add_option("--seed", train_seed, "seed override");
  train->add_option("--out", train_out, "output directory override");

  std::string eval_checkpoint, eval_data, eval_domain = "target";
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--data", eval_data, "config file naming the dataset")->required();
  eval->add_option("--domain", eval_domain, "source|target (default target)")
      ->check(CLI::IsMember({"source", "target"}));

  std::string ablate_config, ablate_out;
  std::vector<std::size_t> ablate_groups{1, 2, 4, 8};
  std::vector<std::size_t> ablate_layers{1, 2, 3};
  std::vector<std::uint64_t> ablate_seeds;
  auto* ablate = app.add_subcommand("ablate", "group-size x layer-count sweep");
  ablate->add_option("--config", ablate_config, "run config (JSON)")->required();
  ablate->add_option("--groups", ablate_groups, "group sizes")->delimiter(',');
  ablate->add_option("--layers", ablate_layers, "DWT layer counts")->delimiter(',');
  ablate->add_option("--seeds", ablate_seeds, "seeds per cell")->delimiter(',');
  ablate->add_option("--out", ablate_out, "output directory override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (gradcheck->parsed()) return cmd_gradcheck();
    if (train->parsed()) return cmd_train(train_config, train_seed, seed_opt->count() > 0,
                                          train_out);
    if (eval->parsed()) return cmd_eval(eval_checkpoint, eval_data, eval_domain);
    if (ablate->parsed())
      return cmd_ablate(ablate_config, ablate_groups, ablate_layers, ablate_seeds, ablate_out);
  } catch (const dwt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const dwt::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitConfigError;
}
