#include "dwt/ablate.hpp"

#include <atomic>
#include <sstream>
#include <thread>

namespace dwt {

namespace {

// Width of each layer a DWT would whiten for the configured model.
std::vector<std::size_t> whitened_widths(const RunConfig& cfg, std::size_t n_dwt) {
  const auto& dims = cfg.model_kind == "mlp" ? cfg.hidden : cfg.channels;
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i < n_dwt && i < dims.size(); ++i) widths.push_back(dims[i]);
  return widths;
}

void run_cell(const RunConfig& base, AblateCell& cell) {
  RunConfig cfg = base;
  cfg.train.g = cell.g;
  cfg.n_dwt = cell.n_dwt;
  cfg.seed = cell.seed;

  const auto& dims = cfg.model_kind == "mlp" ? cfg.hidden : cfg.channels;
  if (cell.n_dwt > dims.size()) {
    cell.skipped = true;
    cell.skip_reason = "n_dwt exceeds the layer count";
    return;
  }
  for (std::size_t w : whitened_widths(cfg, cell.n_dwt)) {
    if (w % cell.g != 0) {
      cell.skipped = true;
      cell.skip_reason = "g=" + std::to_string(cell.g) + " does not divide layer width " +
                         std::to_string(w);
      return;
    }
  }

  auto [source, target] = load_datasets(cfg);
  const std::size_t classes = count_classes(source, target);
  Network net = build_from_config(cfg, source, classes);
  TrainRecord record =
      train_loop(net, cfg.train, source, target, cfg.perturb, cfg.seed);
  cell.rows = std::move(record.rows);
  cell.final_target_acc = record.final_target_acc;
  for (MetricsRow& row : cell.rows) {
    row.g = cell.g;
    row.n_dwt = cell.n_dwt;
  }
}

}  // namespace

std::vector<AblateCell> run_ablation(const RunConfig& base,
                                     const std::vector<std::size_t>& groups,
                                     const std::vector<std::size_t>& layers,
                                     const std::vector<std::uint64_t>& seeds,
                                     std::size_t workers) {
  std::vector<AblateCell> cells;
  for (std::size_t g : groups)
    for (std::size_t l : layers)
      for (std::uint64_t s : seeds) {
        AblateCell cell;
        cell.g = g;
        cell.n_dwt = l;
        cell.seed = s;
        cells.push_back(std::move(cell));
      }

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cells.size());

  // Each cell is fully isolated (own datasets, network, record); a shared
  // index hands out work, results land at fixed positions.
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      run_cell(base, cells[i]);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return cells;
}

std::string ablate_summary_csv(const std::vector<AblateCell>& cells) {
  std::ostringstream os;
  os << "g,n_dwt,seed,status,final_target_acc\n";
  for (const AblateCell& c : cells) {
    os << c.g << ',' << c.n_dwt << ',' << c.seed << ','
       << (c.skipped ? "skipped" : "ok") << ','
       << (c.skipped ? c.skip_reason : format_double(c.final_target_acc)) << "\n";
  }
  return os.str();
}

}  // namespace dwt
