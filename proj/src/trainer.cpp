#include "deco/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace deco {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kDSgd: return "d-sgd";
    case Variant::kDEfSgd: return "d-ef-sgd";
    case Variant::kDdSgd: return "dd-sgd";
    case Variant::kDdEfSgd: return "dd-ef-sgd";
    case Variant::kDecoStatic: return "deco-static";
    case Variant::kDecoAdaptive: return "deco-adaptive";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::kDSgd, Variant::kDEfSgd, Variant::kDdSgd,
                    Variant::kDdEfSgd, Variant::kDecoStatic,
                    Variant::kDecoAdaptive})
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown variant: " + name);
}

namespace {

bool uses_delay(Variant v) {
  return v == Variant::kDdSgd || v == Variant::kDdEfSgd ||
         v == Variant::kDecoStatic || v == Variant::kDecoAdaptive;
}

bool uses_compression(Variant v) {
  return v == Variant::kDEfSgd || v == Variant::kDdEfSgd ||
         v == Variant::kDecoStatic || v == Variant::kDecoAdaptive;
}

bool is_deco(Variant v) {
  return v == Variant::kDecoStatic || v == Variant::kDecoAdaptive;
}

}  // namespace

void RunConfig::validate() const {
  task.validate();
  trace.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(t_comp_s > 0.0)) throw std::invalid_argument("t_comp must be > 0");
  if (gradient_size_bits < 0.0)
    throw std::invalid_argument("gradient size must be >= 0");
  if (fixed_tau < 0) throw std::invalid_argument("tau must be >= 0");
  validate_delta(fixed_delta);
  switch (variant) {
    case Variant::kDSgd:
      if (fixed_tau != 0 || fixed_delta != 1.0)
        throw std::invalid_argument("d-sgd requires tau = 0 and delta = 1");
      break;
    case Variant::kDEfSgd:
      if (fixed_tau != 0)
        throw std::invalid_argument("d-ef-sgd requires tau = 0");
      break;
    case Variant::kDdSgd:
      if (fixed_delta != 1.0)
        throw std::invalid_argument("dd-sgd requires delta = 1");
      break;
    case Variant::kDdEfSgd:
      break;
    case Variant::kDecoStatic:
      break;
    case Variant::kDecoAdaptive:
      if (replan_period < 1)
        throw std::invalid_argument("adaptive runs need replan period >= 1");
      if (probe)
        throw std::invalid_argument(
            "probe mode requires a plan that stays fixed over the run");
      break;
  }
}

double PipelineClock::advance(std::uint64_t k, int tau, double delta,
                              double bandwidth_bps, double latency_s) {
  // Fold in every update applied at iterations < k: computation k may not
  // start before the parameters it reads are complete.
  while (!arrival_by_apply_iter_.empty() &&
         arrival_by_apply_iter_.begin()->first < k) {
    gate_ = std::max(gate_, arrival_by_apply_iter_.begin()->second);
    arrival_by_apply_iter_.erase(arrival_by_apply_iter_.begin());
  }
  const double transmit = delta * grad_bits_ / bandwidth_bps;
  const double ts = t_comp_ + std::max(gate_, ts_prev_);
  const double tm = transmit + std::max(tm_prev_, ts);
  const double tc = std::max(tc_prev_, tm + latency_s);
  ts_prev_ = ts;
  tm_prev_ = tm;
  tc_prev_ = tc;
  auto [it, inserted] =
      arrival_by_apply_iter_.try_emplace(k + static_cast<std::uint64_t>(tau), tc);
  if (!inserted) it->second = std::max(it->second, tc);
  return tc;
}

RunResult train_run(const RunConfig& cfg) {
  cfg.validate();
  auto task = make_task(cfg.task);
  const int dim = task->dim();

  LoopOptions<double> opts;
  opts.workers = task->workers();
  opts.dim = dim;
  opts.gamma = cfg.gamma;
  opts.use_compression = uses_compression(cfg.variant);
  opts.use_delay = uses_delay(cfg.variant);
  opts.probe = cfg.probe;
  TrainingLoop<double> loop(opts, Eigen::VectorXd::Zero(dim));
  if (!is_deco(cfg.variant)) loop.set_plan(cfg.fixed_tau, cfg.fixed_delta);

  const auto gradient = [&task](int worker, std::uint64_t iteration,
                                const Eigen::VectorXd& x) {
    return task->stochastic_gradient(worker, iteration, x);
  };

  const double delta_floor = 1.0 / dim;
  const double smoothness = task->smoothness_bound();
  PipelineClock clock(cfg.t_comp_s, cfg.gradient_size_bits);

  RunResult result;
  result.records.reserve(static_cast<std::size_t>(cfg.iterations));
  result.advisory_gamma = std::numeric_limits<double>::infinity();
  result.optimal_value = task->optimal_value();

  double now = 0.0;
  for (int t = 1; t <= cfg.iterations; ++t) {
    const NetworkSample& net = sample_at(cfg.trace, now);
    const bool replan =
        is_deco(cfg.variant) &&
        (t == 1 || (cfg.variant == Variant::kDecoAdaptive &&
                    (cfg.replan_period == 1 || t % cfg.replan_period == 1)));
    if (replan) {
      TimingParams<double> p{cfg.t_comp_s, cfg.gradient_size_bits,
                             net.bandwidth_bps, net.latency_s};
      const Plan plan = deco_plan(p, cfg.regime, delta_floor);
      loop.set_plan(plan.tau, plan.delta);
    }
    if (t == 1) {
      result.initial_tau = loop.active_tau();
      result.initial_delta = loop.active_delta();
    }
    result.advisory_gamma =
        std::min(result.advisory_gamma,
                 advisory_gamma(smoothness, loop.active_delta(),
                                loop.active_tau()));

    loop.step(gradient);
    now = clock.advance(static_cast<std::uint64_t>(t - 1), loop.active_tau(),
                        loop.active_delta(), net.bandwidth_bps, net.latency_s);

    RunRecord rec;
    rec.iter = t;
    rec.sim_time_s = now;
    rec.loss = task->loss(loop.parameters());
    rec.grad_norm_sq = task->global_grad(loop.parameters()).squaredNorm();
    rec.tau = loop.active_tau();
    rec.delta = loop.active_delta();
    rec.nvs_residual = cfg.probe
                           ? loop.nvs_residual(static_cast<std::uint64_t>(t - 1))
                           : std::numeric_limits<double>::quiet_NaN();
    result.records.push_back(rec);
  }
  result.final_loss = result.records.back().loss;
  result.total_sim_time_s = result.records.back().sim_time_s;
  return result;
}

TargetHit time_to_target(const RunResult& result, double target_loss) {
  for (const auto& rec : result.records)
    if (rec.loss <= target_loss)
      return TargetHit{true, rec.iter, rec.sim_time_s};
  return TargetHit{};
}

}  // namespace deco
