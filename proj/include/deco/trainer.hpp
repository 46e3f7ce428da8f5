#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "deco/loop.hpp"
#include "deco/network.hpp"
#include "deco/planner.hpp"
#include "deco/tasks.hpp"
#include "deco/timing.hpp"

namespace deco {

enum class Variant {
  kDSgd,          // tau = 0, delta = 1
  kDEfSgd,        // tau = 0, compressed with error feedback
  kDdSgd,         // delta = 1, delayed aggregation
  kDdEfSgd,       // delayed + compressed, fixed plan
  kDecoStatic,    // plan computed once at the first iteration
  kDecoAdaptive,  // plan refreshed every `replan_period` iterations
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct RunConfig {
  TaskSpec task;
  Variant variant = Variant::kDSgd;
  double gamma = 0.01;
  int iterations = 100;
  int fixed_tau = 0;         // fixed-plan variants
  double fixed_delta = 1.0;  // fixed-plan variants
  int replan_period = 100;   // E, adaptive variant only
  Regime regime = Regime::kStandard;
  double t_comp_s = 0.1;
  double gradient_size_bits = 1e8;
  NetworkTrace trace;
  bool probe = false;

  void validate() const;
};

struct RunRecord {
  int iter = 0;  // 1-based
  double sim_time_s = 0.0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
  int tau = 0;
  double delta = 1.0;
  double nvs_residual = 0.0;  // NaN when probe is off
};

struct RunResult {
  std::vector<RunRecord> records;
  int initial_tau = 0;
  double initial_delta = 1.0;
  double advisory_gamma = 0.0;  // tightest advisory across active plans
  double final_loss = 0.0;
  double total_sim_time_s = 0.0;
  double optimal_value = 0.0;  // NaN when the task has no closed form
};

/// Incremental event-exact clock for the compute/transmit/arrive pipeline,
/// fed per-iteration parameters. With constant parameters it reproduces
/// simulate_pipeline() bit for bit. Arrivals are FIFO: a later send never
/// overtakes an earlier one.
class PipelineClock {
 public:
  PipelineClock(double t_comp_s, double gradient_size_bits)
      : t_comp_(t_comp_s), grad_bits_(gradient_size_bits) {}

  /// Advance past compute iteration k (0-based, strictly increasing) whose
  /// send uses (delta, tau) under network (bandwidth, latency). Returns the
  /// arrival time of this iteration's communication.
  double advance(std::uint64_t k, int tau, double delta, double bandwidth_bps,
                 double latency_s);

 private:
  double t_comp_;
  double grad_bits_;
  double ts_prev_ = 0.0;
  double tm_prev_ = 0.0;
  double tc_prev_ = 0.0;
  double gate_ = 0.0;  // latest arrival among updates already applied
  std::map<std::uint64_t, double> arrival_by_apply_iter_;
};

RunResult train_run(const RunConfig& cfg);

/// First record with loss <= target, if any.
struct TargetHit {
  bool reached = false;
  int iterations = 0;
  double sim_time_s = 0.0;
};
TargetHit time_to_target(const RunResult& result, double target_loss);

}  // namespace deco
