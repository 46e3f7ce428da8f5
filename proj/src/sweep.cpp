#include "deco/sweep.hpp"

#include <atomic>
#include <cstdlib>
#include <limits>
#include <thread>

namespace deco {

namespace {

int thread_cap(int max_threads) {
  if (const char* env = std::getenv("DECO_SWEEP_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  if (max_threads >= 1) return max_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepConfig& cfg, int max_threads) {
  const std::size_t n = cfg.cells.size();
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      const SweepCell& cell = cfg.cells[i];
      const RunResult result = train_run(cell_run_config(cfg, cell));
      SweepRow& row = rows[i];
      row.name = cell.name;
      row.variant = variant_name(cell.variant);
      row.tau = result.initial_tau;
      row.delta = result.initial_delta;
      row.hit = time_to_target(result, cfg.target_loss);
      row.speedup = std::numeric_limits<double>::quiet_NaN();
    }
  };

  const int threads =
      std::min<int>(thread_cap(max_threads), static_cast<int>(n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const SweepRow* baseline = nullptr;
  for (const auto& row : rows)
    if (row.name == cfg.baseline) baseline = &row;
  if (baseline && baseline->hit.reached) {
    for (auto& row : rows)
      if (row.hit.reached)
        row.speedup = baseline->hit.sim_time_s / row.hit.sim_time_s;
  }
  return rows;
}

}  // namespace deco
