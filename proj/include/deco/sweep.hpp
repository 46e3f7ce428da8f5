#pragma once

#include "deco/config.hpp"
#include "deco/run_io.hpp"

namespace deco {

/// Runs every cell (in parallel, capped by DECO_SWEEP_THREADS or
/// `max_threads`), then fills speedups relative to the named baseline.
/// Row order follows the config regardless of scheduling.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg, int max_threads = 0);

}  // namespace deco
