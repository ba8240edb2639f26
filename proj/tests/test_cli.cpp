#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

namespace {

std::string cli() { return DWT_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " > /tmp/dwt_cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string output() {
  std::ifstream in("/tmp/dwt_cli_out.txt");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_config(const std::string& path, const std::string& out_dir) {
  std::ofstream cfg(path);
  cfg << R"({
    "variant": "dwt-mec",
    "seed": 11,
    "out_dir": ")" << out_dir << R"(",
    "train": {"batch": 32, "epochs": 2, "g": 2},
    "model": {"kind": "mlp", "hidden": [16], "n_dwt": 1},
    "data": {"kind": "synthetic", "n_per_domain": 200, "classes": 3, "dim": 4,
             "rotation_deg": 20, "scales": [1.3, 0.8]},
    "perturb": {"input_noise": 0.05}
  })";
}

}  // namespace

TEST_CASE("usage errors exit with the configuration code") {
  CHECK(run("") == 2);
  CHECK(run("train") == 2);                         // missing --config
  CHECK(run("train --config /nonexistent.json") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("config errors name the offending key") {
  std::ofstream bad("/tmp/dwt_cli_bad.json");
  bad << R"({"train": {"learning_rate": 0.1}})";
  bad.close();
  CHECK(run("train --config /tmp/dwt_cli_bad.json") == 2);
  CHECK(output().find("learning_rate") != std::string::npos);
}

TEST_CASE("train writes metrics, timing, and a loadable checkpoint") {
  write_config("/tmp/dwt_cli_cfg.json", "/tmp/dwt_cli_run");
  CHECK(run("train --config /tmp/dwt_cli_cfg.json") == 0);
  CHECK(output().find("final target accuracy") != std::string::npos);

  std::ifstream metrics("/tmp/dwt_cli_run/metrics.csv");
  REQUIRE(metrics.good());
  std::string header;
  std::getline(metrics, header);
  CHECK(header ==
        "epoch,variant,g,n_dwt,loss_source,loss_target,loss_total,source_acc,target_acc");
  std::size_t rows = 0;
  for (std::string line; std::getline(metrics, line);) ++rows;
  CHECK(rows == 3);  // epoch 0 (initial) + 2 epochs

  CHECK(std::ifstream("/tmp/dwt_cli_run/timing.csv").good());
  CHECK(run("eval --checkpoint /tmp/dwt_cli_run/checkpoint.dwt "
            "--data /tmp/dwt_cli_cfg.json") == 0);
  CHECK(output().find("confusion matrix") != std::string::npos);
  CHECK(run("eval --checkpoint /tmp/dwt_cli_run/checkpoint.dwt "
            "--data /tmp/dwt_cli_cfg.json --domain source") == 0);
}

TEST_CASE("seed and out-dir overrides take effect") {
  write_config("/tmp/dwt_cli_cfg2.json", "/tmp/dwt_cli_ignored");
  CHECK(run("train --config /tmp/dwt_cli_cfg2.json --seed 5 --out /tmp/dwt_cli_over") == 0);
  CHECK(std::ifstream("/tmp/dwt_cli_over/metrics.csv").good());
}

TEST_CASE("the environment variable overrides the configured out dir") {
  write_config("/tmp/dwt_cli_cfg3.json", "/tmp/dwt_cli_ignored2");
  const std::string cmd = "DWT_OUT_DIR=/tmp/dwt_cli_env " + cli() +
                          " train --config /tmp/dwt_cli_cfg3.json > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(std::ifstream("/tmp/dwt_cli_env/metrics.csv").good());
}

TEST_CASE("ablate sweeps the grid and records skipped cells") {
  write_config("/tmp/dwt_cli_cfg4.json", "/tmp/dwt_cli_ablate");
  // hidden width 16: g=3 cannot divide it and must be recorded as skipped.
  CHECK(run("ablate --config /tmp/dwt_cli_cfg4.json --groups 1,3 --layers 1 "
            "--seeds 1,2") == 0);
  std::ifstream summary("/tmp/dwt_cli_ablate/ablate_summary.csv");
  REQUIRE(summary.good());
  std::string text((std::istreambuf_iterator<char>(summary)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("g,n_dwt,seed,status,final_target_acc") != std::string::npos);
  CHECK(text.find("3,1,1,skipped") != std::string::npos);
  CHECK(text.find("does not divide") != std::string::npos);
  CHECK(text.find("1,1,1,ok") != std::string::npos);
  CHECK(std::ifstream("/tmp/dwt_cli_ablate/cell_g1_l1_s1.csv").good());
}

TEST_CASE("gradcheck subcommand reports every family and exits cleanly") {
  CHECK(run("gradcheck") == 0);
  const std::string text = output();
  for (const char* name : {"dense", "conv2d", "relu", "maxpool", "bn", "dwt-g2", "dwt-g4",
                           "loss-mec", "train-step"}) {
    CHECK(text.find(name) != std::string::npos);
  }
  CHECK(text.find("gradcheck OK") != std::string::npos);
}
