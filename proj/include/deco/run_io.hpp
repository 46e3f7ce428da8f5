#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "deco/trainer.hpp"

namespace deco {

std::string format_double(double x);  // %.17g, round-trips binary64

/// Run CSV: `# config_hash=...`, header
/// `iter,sim_time_s,loss,grad_norm_sq,tau,delta`, one row per iteration.
/// Probe runs append an `nvs_residual` column.
void write_run_csv(const std::filesystem::path& path,
                   const std::vector<RunRecord>& records,
                   const std::string& config_hash, bool probe);

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j);

nlohmann::json run_summary(const RunResult& result, double gamma,
                           const std::string& config_hash);

struct SweepRow {
  std::string name;
  std::string variant;
  int tau = 0;
  double delta = 1.0;
  TargetHit hit;
  double speedup = 0.0;  // baseline time / cell time; NaN when undefined
};

/// Sweep CSV: `# config_hash=...`, header
/// `cell,variant,tau,delta,iterations_to_target,time_to_target_s,reached,speedup_vs_baseline`.
/// Unreached targets leave the numeric fields empty and set reached = 0.
void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows,
                     const std::string& config_hash);

}  // namespace deco
