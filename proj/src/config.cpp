#include "deco/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace deco {

using nlohmann::json;

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
  if (!j.is_object()) fail(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      fail("unknown key '" + it.key() + "' in " + where);
}

double get_num(const json& j, const std::string& key, double dflt,
               bool required = false) {
  if (!j.contains(key)) {
    if (required) fail("missing required field '" + key + "'");
    return dflt;
  }
  if (!j.at(key).is_number()) fail("field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

TaskSpec parse_task(const json& j) {
  require_keys(j, {"kind", "dim", "workers", "zeta", "sigma", "seed", "mu",
                   "smoothness", "samples_per_worker", "ridge"},
               "task");
  TaskSpec t;
  const std::string kind = j.value("kind", "quadratic");
  if (kind == "quadratic")
    t.kind = TaskKind::kQuadratic;
  else if (kind == "logistic")
    t.kind = TaskKind::kLogistic;
  else
    fail("task kind must be 'quadratic' or 'logistic'");
  t.dim = static_cast<int>(get_num(j, "dim", 20));
  t.workers = static_cast<int>(get_num(j, "workers", 4));
  t.zeta_knob = get_num(j, "zeta", 0.5);
  t.sigma = get_num(j, "sigma", 0.0);
  t.seed = static_cast<std::uint64_t>(get_num(j, "seed", 1));
  t.mu = get_num(j, "mu", 1.0);
  t.smoothness = get_num(j, "smoothness", 10.0);
  t.samples_per_worker = static_cast<int>(get_num(j, "samples_per_worker", 64));
  t.ridge = get_num(j, "ridge", 1e-3);
  return t;
}

json task_to_json(const TaskSpec& t) {
  json j;
  j["kind"] = t.kind == TaskKind::kQuadratic ? "quadratic" : "logistic";
  j["dim"] = t.dim;
  j["workers"] = t.workers;
  j["zeta"] = t.zeta_knob;
  j["sigma"] = t.sigma;
  j["seed"] = t.seed;
  j["mu"] = t.mu;
  j["smoothness"] = t.smoothness;
  j["samples_per_worker"] = t.samples_per_worker;
  j["ridge"] = t.ridge;
  return j;
}

NetworkTrace parse_network(const json& j, const std::filesystem::path& base,
                           json& canonical) {
  require_keys(j, {"trace_file", "constant", "generate"}, "network");
  const int sources = static_cast<int>(j.contains("trace_file")) +
                      static_cast<int>(j.contains("constant")) +
                      static_cast<int>(j.contains("generate"));
  if (sources != 1)
    fail("network needs exactly one of trace_file / constant / generate");
  if (j.contains("trace_file")) {
    std::filesystem::path p = j.at("trace_file").get<std::string>();
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p))
      fail("trace file does not exist: " + p.string());
    canonical["trace_file"] = j.at("trace_file").get<std::string>();
    return load_trace(p);
  }
  if (j.contains("constant")) {
    const json& c = j.at("constant");
    require_keys(c, {"bandwidth_bps", "latency_s"}, "network.constant");
    const double bw = get_num(c, "bandwidth_bps", 0.0, true);
    const double lat = get_num(c, "latency_s", 0.0, true);
    canonical["constant"] = {{"bandwidth_bps", bw}, {"latency_s", lat}};
    return constant_trace(bw, lat);
  }
  const json& g = j.at("generate");
  require_keys(g,
               {"seed", "mean_bandwidth_bps", "fluctuation", "latency_s",
                "duration_s", "interval_s"},
               "network.generate");
  const auto seed = static_cast<std::uint64_t>(get_num(g, "seed", 1));
  const double mean = get_num(g, "mean_bandwidth_bps", 0.0, true);
  const double fluct = get_num(g, "fluctuation", 0.0);
  const double lat = get_num(g, "latency_s", 0.0, true);
  const double dur = get_num(g, "duration_s", 0.0, true);
  const double interval = get_num(g, "interval_s", 1.0);
  canonical["generate"] = {{"seed", seed},
                           {"mean_bandwidth_bps", mean},
                           {"fluctuation", fluct},
                           {"latency_s", lat},
                           {"duration_s", dur},
                           {"interval_s", interval}};
  return gen_trace(seed, mean, fluct, lat, dur, interval);
}

json plan_to_json(int tau, double delta) {
  return json{{"tau", tau}, {"delta", delta}};
}

struct ParsedRun {
  RunConfig run;
  json canonical;
};

ParsedRun parse_run(const json& j, const std::filesystem::path& base,
                    bool allow_variant) {
  std::set<std::string> keys = {"schema_version", "seed",    "task",
                                "gamma",          "iterations", "plan",
                                "replan_period",  "regime",  "timing",
                                "network",        "probe",   "output_dir"};
  if (allow_variant) keys.insert("variant");
  require_keys(j, keys, "config");

  ParsedRun out;
  RunConfig& r = out.run;
  if (!j.contains("task")) fail("missing required field 'task'");
  r.task = parse_task(j.at("task"));
  if (j.contains("seed"))
    r.task.seed = static_cast<std::uint64_t>(get_num(j, "seed", 1));
  if (allow_variant) {
    if (!j.contains("variant")) fail("missing required field 'variant'");
    r.variant = variant_from_name(j.at("variant").get<std::string>());
  }
  r.gamma = get_num(j, "gamma", 0.0, true);
  r.iterations = static_cast<int>(get_num(j, "iterations", 0.0, true));
  if (j.contains("plan")) {
    require_keys(j.at("plan"), {"tau", "delta"}, "plan");
    r.fixed_tau = static_cast<int>(get_num(j.at("plan"), "tau", 0));
    r.fixed_delta = get_num(j.at("plan"), "delta", 1.0);
  }
  r.replan_period = static_cast<int>(get_num(j, "replan_period", 100));
  const std::string regime = j.value("regime", "standard");
  if (regime == "standard")
    r.regime = Regime::kStandard;
  else if (regime == "high-heterogeneity")
    r.regime = Regime::kHighHeterogeneity;
  else
    fail("regime must be 'standard' or 'high-heterogeneity'");
  if (!j.contains("timing")) fail("missing required field 'timing'");
  require_keys(j.at("timing"), {"t_comp_s", "gradient_size_bits"}, "timing");
  r.t_comp_s = get_num(j.at("timing"), "t_comp_s", 0.0, true);
  r.gradient_size_bits = get_num(j.at("timing"), "gradient_size_bits", 0.0, true);
  if (!j.contains("network")) fail("missing required field 'network'");
  json net_canonical;
  r.trace = parse_network(j.at("network"), base, net_canonical);
  r.probe = j.value("probe", false);

  json& c = out.canonical;
  c["schema_version"] = 1;
  c["task"] = task_to_json(r.task);
  if (allow_variant) c["variant"] = variant_name(r.variant);
  c["gamma"] = r.gamma;
  c["iterations"] = r.iterations;
  c["plan"] = plan_to_json(r.fixed_tau, r.fixed_delta);
  c["replan_period"] = r.replan_period;
  c["regime"] = regime;
  c["timing"] = {{"t_comp_s", r.t_comp_s},
                 {"gradient_size_bits", r.gradient_size_bits}};
  c["network"] = net_canonical;
  c["probe"] = r.probe;
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: invalid JSON in " + path.string() +
                                ": " + e.what());
  }
  return j;
}

int checked_schema_version(const json& j) {
  if (!j.contains("schema_version"))
    fail("missing required field 'schema_version'");
  const int v = j.at("schema_version").get<int>();
  if (v != 1) fail("unsupported schema_version (expected 1)");
  return v;
}

}  // namespace

ExperimentConfig experiment_config_from_json(
    const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.schema_version = checked_schema_version(j);
  ParsedRun parsed = parse_run(j, base_dir, /*allow_variant=*/true);
  cfg.run = std::move(parsed.run);
  cfg.canonical = std::move(parsed.canonical);
  if (j.contains("output_dir")) {
    std::filesystem::path p = j.at("output_dir").get<std::string>();
    cfg.output_dir = p.is_relative() ? base_dir / p : p;
    cfg.canonical["output_dir"] = j.at("output_dir").get<std::string>();
  }
  cfg.run.validate();
  cfg.hash = fnv1a64_hex(cfg.canonical.dump());
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_file(path),
                                     path.parent_path());
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  require_keys(j,
               {"schema_version", "base", "target_loss", "baseline", "cells",
                "output_dir"},
               "sweep config");
  SweepConfig s;
  s.schema_version = checked_schema_version(j);
  if (!j.contains("base")) fail("missing required field 'base'");
  ParsedRun base = parse_run(j.at("base"), path.parent_path(),
                             /*allow_variant=*/false);
  s.base = std::move(base.run);
  s.target_loss = get_num(j, "target_loss", 0.0, true);
  if (!j.contains("cells") || !j.at("cells").is_array() ||
      j.at("cells").empty())
    fail("'cells' must be a non-empty array");
  json cells_canonical = json::array();
  for (const json& cj : j.at("cells")) {
    require_keys(cj, {"name", "variant", "plan", "replan_period", "gamma"},
                 "cell");
    SweepCell cell;
    if (!cj.contains("name")) fail("every cell needs a name");
    cell.name = cj.at("name").get<std::string>();
    if (!cj.contains("variant")) fail("every cell needs a variant");
    cell.variant = variant_from_name(cj.at("variant").get<std::string>());
    if (cj.contains("plan")) {
      require_keys(cj.at("plan"), {"tau", "delta"}, "cell plan");
      cell.tau = static_cast<int>(get_num(cj.at("plan"), "tau", 0));
      cell.delta = get_num(cj.at("plan"), "delta", 1.0);
    }
    if (cj.contains("replan_period"))
      cell.replan_period = static_cast<int>(get_num(cj, "replan_period", 100));
    if (cj.contains("gamma")) cell.gamma = get_num(cj, "gamma", 0.0, true);
    for (const auto& existing : s.cells)
      if (existing.name == cell.name) fail("duplicate cell name " + cell.name);
    s.cells.push_back(cell);
    json cc;
    cc["name"] = cell.name;
    cc["variant"] = variant_name(cell.variant);
    cc["plan"] = plan_to_json(cell.tau, cell.delta);
    if (cell.replan_period) cc["replan_period"] = *cell.replan_period;
    if (cell.gamma) cc["gamma"] = *cell.gamma;
    cells_canonical.push_back(cc);
  }
  s.baseline = j.value("baseline", s.cells.front().name);
  bool found = false;
  for (const auto& c : s.cells) found = found || c.name == s.baseline;
  if (!found) fail("baseline '" + s.baseline + "' is not a cell name");
  if (j.contains("output_dir")) {
    std::filesystem::path p = j.at("output_dir").get<std::string>();
    s.output_dir = p.is_relative() ? path.parent_path() / p : p;
  }
  s.canonical = base.canonical;
  s.canonical["target_loss"] = s.target_loss;
  s.canonical["baseline"] = s.baseline;
  s.canonical["cells"] = cells_canonical;
  if (j.contains("output_dir"))
    s.canonical["output_dir"] = j.at("output_dir").get<std::string>();
  // validate every cell before any run starts
  for (const auto& cell : s.cells) cell_run_config(s, cell).validate();
  s.hash = fnv1a64_hex(s.canonical.dump());
  return s;
}

RunConfig cell_run_config(const SweepConfig& sweep, const SweepCell& cell) {
  RunConfig r = sweep.base;
  r.variant = cell.variant;
  r.fixed_tau = cell.tau;
  r.fixed_delta = cell.delta;
  if (cell.replan_period) r.replan_period = *cell.replan_period;
  if (cell.gamma) r.gamma = *cell.gamma;
  r.probe = false;
  return r;
}

}  // namespace deco
