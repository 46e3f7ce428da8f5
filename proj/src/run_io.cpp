#include "deco/run_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace deco {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_run_csv(const std::filesystem::path& path,
                   const std::vector<RunRecord>& records,
                   const std::string& config_hash, bool probe) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "# config_hash=" << config_hash << "\n";
  out << "iter,sim_time_s,loss,grad_norm_sq,tau,delta";
  if (probe) out << ",nvs_residual";
  out << "\n";
  for (const auto& r : records) {
    out << r.iter << ',' << format_double(r.sim_time_s) << ','
        << format_double(r.loss) << ',' << format_double(r.grad_norm_sq) << ','
        << r.tau << ',' << format_double(r.delta);
    if (probe) out << ',' << format_double(r.nvs_residual);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json run_summary(const RunResult& result, double gamma,
                           const std::string& config_hash) {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["iterations"] = result.records.size();
  j["final_loss"] = result.final_loss;
  j["total_sim_time_s"] = result.total_sim_time_s;
  j["initial_tau"] = result.initial_tau;
  j["initial_delta"] = result.initial_delta;
  j["advisory_gamma"] = result.advisory_gamma;
  j["gamma"] = gamma;
  j["gamma_within_advisory"] = gamma <= result.advisory_gamma;
  if (std::isfinite(result.optimal_value))
    j["optimal_value"] = result.optimal_value;
  return j;
}

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRow>& rows,
                     const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "# config_hash=" << config_hash << "\n";
  out << "cell,variant,tau,delta,iterations_to_target,time_to_target_s,"
         "reached,speedup_vs_baseline\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.variant << ',' << r.tau << ','
        << format_double(r.delta) << ',';
    if (r.hit.reached) out << r.hit.iterations;
    out << ',';
    if (r.hit.reached) out << format_double(r.hit.sim_time_s);
    out << ',' << (r.hit.reached ? 1 : 0) << ',';
    if (std::isfinite(r.speedup)) out << format_double(r.speedup);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace deco
