#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "deco/compressor.hpp"

namespace deco {

template <class Scalar>
struct LoopOptions {
  int workers = 1;
  Eigen::Index dim = 1;
  Scalar gamma{};
  bool use_compression = false;  // error-feedback Top-k on worker updates
  bool use_delay = false;        // apply updates tau iterations after compute
  bool probe = false;            // retain histories for virtual-sequence checks
};

/// One global iteration of the distributed loop: every worker evaluates its
/// gradient at the current parameters, the (optionally compressed) updates
/// are aggregated in fixed worker order, and the aggregate lands either
/// immediately or `tau` iterations later. Compression happens at send time
/// with the plan active at that iteration; updates already in flight keep
/// their original arrival slot when the plan changes.
template <class Scalar>
class TrainingLoop {
 public:
  using Vec = VectorX<Scalar>;
  using GradientFn =
      std::function<Vec(int worker, std::uint64_t iteration, const Vec& x)>;

  TrainingLoop(const LoopOptions<Scalar>& opts, Vec x0)
      : opts_(opts), x_(std::move(x0)) {
    if (opts_.workers < 1) throw std::invalid_argument("need >= 1 worker");
    if (x_.size() != opts_.dim)
      throw std::invalid_argument("initial point has wrong dimension");
    errors_.assign(static_cast<std::size_t>(opts_.workers),
                   ErrorState<Scalar>(opts_.dim));
    if (opts_.probe) {
      x_hist_.push_back(x_);
      e_sum_hist_.push_back(Vec::Zero(opts_.dim));
    }
  }

  void set_plan(int tau, double delta) {
    if (tau < 0) throw std::invalid_argument("tau must be >= 0");
    validate_delta(delta);
    tau_ = tau;
    delta_ = delta;
  }

  int active_tau() const { return tau_; }
  double active_delta() const { return delta_; }
  const Vec& parameters() const { return x_; }
  std::uint64_t iterations() const { return iter_; }
  const Vec& error_residual(int worker) const {
    return errors_[static_cast<std::size_t>(worker)].residual;
  }
  std::size_t in_flight() const { return pending_.size(); }

  void step(const GradientFn& gradient) {
    const int n = opts_.workers;
    const Scalar scale = opts_.gamma / Scalar(n);

    std::vector<Vec> grads;
    grads.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      grads.push_back(gradient(i, iter_, x_));
      if (grads.back().size() != opts_.dim)
        throw std::invalid_argument("gradient has wrong dimension");
      if (!all_finite(grads.back()))
        throw std::domain_error("non-finite gradient");
    }
    if (opts_.probe) {
      Vec sum = Vec::Zero(opts_.dim);
      for (const auto& g : grads) sum += g;
      g_sum_hist_.push_back(std::move(sum));
    }

    Vec aggregate = Vec::Zero(opts_.dim);
    if (opts_.use_compression) {
      for (int i = 0; i < n; ++i) {
        auto res = ef_compress(grads[static_cast<std::size_t>(i)],
                               errors_[static_cast<std::size_t>(i)], delta_);
        errors_[static_cast<std::size_t>(i)] = std::move(res.next);
        aggregate += res.update;
      }
    } else {
      for (int i = 0; i < n; ++i) aggregate += grads[static_cast<std::size_t>(i)];
    }

    const std::uint64_t arrival =
        opts_.use_delay ? iter_ + static_cast<std::uint64_t>(tau_) : iter_;
    auto [slot, inserted] = pending_.try_emplace(arrival, std::move(aggregate));
    if (!inserted) slot->second += aggregate;

    if (auto due = pending_.find(iter_); due != pending_.end()) {
      x_ -= scale * due->second;
      pending_.erase(due);
    }
    ++iter_;

    if (opts_.probe) {
      x_hist_.push_back(x_);
      Vec esum = Vec::Zero(opts_.dim);
      for (const auto& e : errors_) esum += e.residual;
      e_sum_hist_.push_back(std::move(esum));
    }
  }

  /// Delay-noise term B_t = (gamma/n) * sum_i e^i_{t-tau}.
  Vec probe_noise_b(std::uint64_t t) const {
    require_probe(t);
    const Scalar scale = opts_.gamma / Scalar(opts_.workers);
    const std::int64_t idx =
        static_cast<std::int64_t>(t) - (opts_.use_delay ? tau_ : 0);
    if (!opts_.use_compression || idx < 0) return Vec::Zero(opts_.dim);
    return scale * e_sum_hist_[static_cast<std::size_t>(idx)];
  }

  /// In-flight-gradient term Btilde_t = (gamma/n) * sum_i sum_{j=1..tau} g^i_{t-j}.
  Vec probe_noise_b_tilde(std::uint64_t t) const {
    require_probe(t);
    const Scalar scale = opts_.gamma / Scalar(opts_.workers);
    Vec acc = Vec::Zero(opts_.dim);
    if (!opts_.use_delay) return acc;
    for (int j = 1; j <= tau_; ++j) {
      const std::int64_t idx = static_cast<std::int64_t>(t) - j;
      if (idx >= 0) acc += g_sum_hist_[static_cast<std::size_t>(idx)];
    }
    return scale * acc;
  }

  /// Decoupled iterate xhat_t = x_t - B_t - Btilde_t. Stripping both noise
  /// terms must leave a plain averaged-gradient sequence.
  Vec virtual_iterate(std::uint64_t t) const {
    require_probe(t);
    return x_hist_[static_cast<std::size_t>(t)] - probe_noise_b(t) -
           probe_noise_b_tilde(t);
  }

  /// xhat_{t+1} - (xhat_t - (gamma/n) sum_i g^i_t); exactly zero when the
  /// arithmetic is exact. Valid for t < iterations() - ... the step at t
  /// must already have run.
  Vec nvs_deviation(std::uint64_t t) const {
    require_probe(t + 1);
    const Scalar scale = opts_.gamma / Scalar(opts_.workers);
    return virtual_iterate(t + 1) -
           (virtual_iterate(t) - scale * g_sum_hist_[static_cast<std::size_t>(t)]);
  }

  /// Relative deviation norm, for floating-point runs.
  double nvs_residual(std::uint64_t t) const {
    static_assert(std::is_floating_point_v<Scalar>,
                  "residual norm requires a floating-point scalar");
    const double dev = nvs_deviation(t).norm();
    const double ref = virtual_iterate(t).norm();
    return dev / std::max(1.0, ref);
  }

 private:
  void require_probe(std::uint64_t t) const {
    if (!opts_.probe)
      throw std::logic_error("probe mode not enabled for this run");
    if (t >= x_hist_.size())
      throw std::out_of_range("probe index beyond recorded history");
  }

  LoopOptions<Scalar> opts_;
  Vec x_;
  std::vector<ErrorState<Scalar>> errors_;
  std::map<std::uint64_t, Vec> pending_;  // arrival iteration -> update sum
  int tau_ = 0;
  double delta_ = 1.0;
  std::uint64_t iter_ = 0;

  // probe mode: x_hist_[t] = x_t, e_sum_hist_[t] = sum_i e^i_t,
  // g_sum_hist_[t] = sum_i g^i_t
  std::vector<Vec> x_hist_;
  std::vector<Vec> e_sum_hist_;
  std::vector<Vec> g_sum_hist_;
};

}  // namespace deco
