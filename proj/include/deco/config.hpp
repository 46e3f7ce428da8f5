#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deco/trainer.hpp"

namespace deco {

/// FNV-1a 64-bit, hex encoded. Stable fingerprint for config provenance.
std::string fnv1a64_hex(std::string_view bytes);

/// A training run loaded from a config file. `canonical` carries every
/// field explicitly (defaults filled in), so its hash identifies the run.
struct ExperimentConfig {
  int schema_version = 1;
  RunConfig run;
  std::filesystem::path output_dir;
  nlohmann::json canonical;
  std::string hash;
};

ExperimentConfig experiment_config_from_json(
    const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct SweepCell {
  std::string name;
  Variant variant = Variant::kDSgd;
  int tau = 0;
  double delta = 1.0;
  std::optional<int> replan_period;
  std::optional<double> gamma;
};

struct SweepConfig {
  int schema_version = 1;
  RunConfig base;  // variant/plan fields overridden per cell
  double target_loss = 0.0;
  std::string baseline;
  std::vector<SweepCell> cells;
  std::filesystem::path output_dir;
  nlohmann::json canonical;
  std::string hash;
};

SweepConfig load_sweep_config(const std::filesystem::path& path);

RunConfig cell_run_config(const SweepConfig& sweep, const SweepCell& cell);

}  // namespace deco
