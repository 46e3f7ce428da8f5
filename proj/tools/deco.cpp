#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "deco/config.hpp"
#include "deco/network.hpp"
#include "deco/planner.hpp"
#include "deco/run_io.hpp"
#include "deco/sweep.hpp"
#include "deco/timing.hpp"
#include "deco/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

deco::Regime parse_regime(const std::string& name) {
  if (name == "standard") return deco::Regime::kStandard;
  if (name == "high-heterogeneity") return deco::Regime::kHighHeterogeneity;
  throw CLI::ValidationError(
      "--regime must be 'standard' or 'high-heterogeneity'");
}

int cmd_plan(double sg, double a, double b, double tcomp,
             const std::string& regime_name, double delta_floor) {
  deco::TimingParams<double> p{tcomp, sg, a, b};
  const deco::Plan plan =
      deco::deco_plan(p, parse_regime(regime_name), delta_floor);
  json out;
  out["tau"] = plan.tau;
  out["delta"] = plan.delta;
  out["phi"] = plan.phi;
  out["delta_clamped"] = plan.delta_clamped;
  out["t_avg"] = deco::t_avg_closed_form(p, plan.delta, plan.tau);
  out["throughput_efficiency"] =
      deco::throughput_efficiency(p, plan.delta, plan.tau);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sim_timing(double tcomp, double sg, double a, double b, double delta,
                   int tau, int iters, const std::string& schedule_path,
                   const std::string& summary_path) {
  deco::TimingParams<double> p{tcomp, sg, a, b};
  const auto schedule = deco::simulate_pipeline(p, delta, tau, iters);
  const double closed = deco::t_avg_closed_form(p, delta, tau);
  const double tc_t = schedule.tc.back();

  json flags;
  flags["command"] = "sim-timing";
  flags["t_comp_s"] = tcomp;
  flags["gradient_size_bits"] = sg;
  flags["bandwidth_bps"] = a;
  flags["latency_s"] = b;
  flags["delta"] = delta;
  flags["tau"] = tau;
  flags["iters"] = iters;
  const std::string hash = deco::fnv1a64_hex(flags.dump());

  json summary;
  summary["config_hash"] = hash;
  summary["iters"] = iters;
  summary["t_avg_empirical"] = tc_t / iters;
  summary["t_avg_closed_form"] = closed;
  summary["abs_gap"] = std::abs(tc_t - iters * closed);
  summary["bound"] = deco::schedule_error_bound(p, delta);

  if (!schedule_path.empty()) {
    std::ofstream out(schedule_path);
    if (!out) throw std::runtime_error("cannot open " + schedule_path);
    out << "# config_hash=" << hash << "\n";
    out << "k,ts_s,tm_s,tc_s\n";
    for (std::size_t k = 0; k < schedule.ts.size(); ++k)
      out << k << ',' << deco::format_double(schedule.ts[k]) << ','
          << deco::format_double(schedule.tm[k]) << ','
          << deco::format_double(schedule.tc[k]) << "\n";
  }
  if (!summary_path.empty()) deco::write_json_file(summary_path, summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_trace_gen(std::uint64_t seed, double mean_bw, double fluctuation,
                  double latency, double duration, double interval,
                  const std::string& out_path) {
  json flags;
  flags["command"] = "trace-gen";
  flags["seed"] = seed;
  flags["mean_bandwidth_bps"] = mean_bw;
  flags["fluctuation"] = fluctuation;
  flags["latency_s"] = latency;
  flags["duration_s"] = duration;
  flags["interval_s"] = interval;
  const auto trace =
      deco::gen_trace(seed, mean_bw, fluctuation, latency, duration, interval);
  deco::save_trace(trace, out_path, deco::fnv1a64_hex(flags.dump()));
  std::cout << "wrote " << out_path << " (" << trace.samples.size()
            << " samples)\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  deco::ExperimentConfig cfg = deco::load_experiment_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (cfg.output_dir.empty())
    throw std::invalid_argument(
        "config: output_dir missing (set it in the config or pass --out-dir)");
  fs::create_directories(cfg.output_dir);

  const deco::RunResult result = deco::train_run(cfg.run);
  deco::write_run_csv(cfg.output_dir / "run.csv", result.records, cfg.hash,
                      cfg.run.probe);
  json sidecar = cfg.canonical;
  sidecar["config_hash"] = cfg.hash;
  deco::write_json_file(cfg.output_dir / "config.json", sidecar);
  deco::write_json_file(cfg.output_dir / "summary.json",
                        deco::run_summary(result, cfg.run.gamma, cfg.hash));

  std::cout << "final_loss=" << deco::format_double(result.final_loss)
            << " total_sim_time_s="
            << deco::format_double(result.total_sim_time_s) << "\n";
  if (cfg.run.gamma > result.advisory_gamma)
    std::cerr << "note: gamma " << cfg.run.gamma
              << " exceeds the advisory bound " << result.advisory_gamma
              << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, int threads) {
  const deco::SweepConfig cfg = deco::load_sweep_config(config_path);
  if (cfg.output_dir.empty())
    throw std::invalid_argument("config: output_dir missing");
  fs::create_directories(cfg.output_dir);
  const auto rows = deco::run_sweep(cfg, threads);
  const fs::path table = cfg.output_dir / "sweep.csv";
  deco::write_sweep_csv(table, rows, cfg.hash);
  std::cout << "wrote " << table.string() << "\n";
  for (const auto& row : rows) {
    std::cout << row.name << ": ";
    if (row.hit.reached)
      std::cout << "reached target in " << row.hit.iterations << " iters, "
                << deco::format_double(row.hit.sim_time_s) << " s";
    else
      std::cout << "target not reached";
    if (std::isfinite(row.speedup))
      std::cout << " (speedup " << deco::format_double(row.speedup) << ")";
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning, timing simulation and simulated training for "
               "delayed, compressed distributed SGD"};
  app.require_subcommand(1);

  auto* plan = app.add_subcommand(
      "plan", "Pick (tau, delta) minimizing the compression-noise factor");
  double sg = 0, a = 0, b = 0, tcomp = 0, dfloor = deco::kDefaultDeltaFloor;
  std::string regime = "standard";
  plan->add_option("--sg", sg, "gradient size (bits)")->required();
  plan->add_option("--a", a, "bandwidth (bits/s)")->required();
  plan->add_option("--b", b, "end-to-end latency (s)")->required();
  plan->add_option("--tcomp", tcomp, "computation time per iteration (s)")
      ->required();
  plan->add_option("--regime", regime,
                   "'standard' (phi) or 'high-heterogeneity' (phi')");
  plan->add_option("--dfloor", dfloor, "compression ratio floor (1/model dim)");

  auto* sim = app.add_subcommand(
      "sim-timing", "Unroll the pipeline recurrence and compare with the "
                    "closed-form average");
  double s_tcomp = 0, s_sg = 0, s_a = 0, s_b = 0, s_delta = 1.0;
  int s_tau = 0, s_iters = 0;
  std::string schedule_out, summary_out;
  sim->add_option("--tcomp", s_tcomp, "computation time per iteration (s)")
      ->required();
  sim->add_option("--sg", s_sg, "gradient size (bits)")->required();
  sim->add_option("--a", s_a, "bandwidth (bits/s)")->required();
  sim->add_option("--b", s_b, "end-to-end latency (s)")->required();
  sim->add_option("--delta", s_delta, "compression ratio in (0,1]");
  sim->add_option("--tau", s_tau, "staleness (iterations)")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--iters", s_iters, "iterations to simulate (>= 1)")
      ->required()
      ->check(CLI::PositiveNumber);
  sim->add_option("--schedule-out", schedule_out, "CSV of TS/TM/TC end times");
  sim->add_option("--summary-out", summary_out, "summary JSON path");

  auto* tg = app.add_subcommand("trace-gen",
                                "Generate a synthetic bandwidth/latency trace");
  std::uint64_t t_seed = 1;
  double t_mean = 0, t_fluct = 0, t_lat = 0, t_dur = 0, t_int = 1.0;
  std::string t_out;
  tg->add_option("--seed", t_seed, "PRNG seed");
  tg->add_option("--mean-bandwidth", t_mean, "mean bandwidth (bits/s)")
      ->required();
  tg->add_option("--fluctuation", t_fluct,
                 "multiplicative fluctuation fraction in [0,1)");
  tg->add_option("--latency", t_lat, "constant latency (s)")->required();
  tg->add_option("--duration", t_dur, "trace duration (s)")->required();
  tg->add_option("--interval", t_int, "sample interval (s)");
  tg->add_option("--out", t_out, "output CSV path")->required();

  auto* train = app.add_subcommand("train", "Run a simulated training config");
  std::string train_cfg, train_out;
  train->add_option("--config", train_cfg, "experiment config JSON")
      ->required();
  train->add_option("--out-dir", train_out, "override config output_dir");

  auto* sweep = app.add_subcommand(
      "sweep", "Run a grid of variants and compare time-to-target");
  std::string sweep_cfg;
  int sweep_threads = 0;
  sweep->add_option("--config", sweep_cfg, "sweep config JSON")->required();
  sweep->add_option("--threads", sweep_threads,
                    "max parallel cells (DECO_SWEEP_THREADS overrides)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (plan->parsed()) return cmd_plan(sg, a, b, tcomp, regime, dfloor);
    if (sim->parsed())
      return cmd_sim_timing(s_tcomp, s_sg, s_a, s_b, s_delta, s_tau, s_iters,
                            schedule_out, summary_out);
    if (tg->parsed())
      return cmd_trace_gen(t_seed, t_mean, t_fluct, t_lat, t_dur, t_int, t_out);
    if (train->parsed()) return cmd_train(train_cfg, train_out);
    if (sweep->parsed()) return cmd_sweep(sweep_cfg, sweep_threads);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
