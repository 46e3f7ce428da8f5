#pragma once

#include <stdexcept>
#include <vector>

#include "deco/compressor.hpp"

namespace deco {

/// The four scalars driving the compute/transmit/arrive pipeline:
/// computation time per iteration, gradient size, bandwidth, latency.
/// `grad_size_bits == 0` models the communication-free limit.
template <class Scalar = double>
struct TimingParams {
  Scalar t_comp{};           // seconds per computation, > 0
  Scalar grad_size_bits{};   // S_g, >= 0
  Scalar bandwidth_bps{};    // a, > 0
  Scalar latency_s{};        // b, >= 0

  void validate() const {
    if (!(Scalar(0) < t_comp)) throw std::invalid_argument("t_comp must be > 0");
    if (grad_size_bits < Scalar(0))
      throw std::invalid_argument("gradient size must be >= 0");
    if (!(Scalar(0) < bandwidth_bps))
      throw std::invalid_argument("bandwidth must be > 0");
    if (latency_s < Scalar(0))
      throw std::invalid_argument("latency must be >= 0");
    if (!detail::entry_is_finite(t_comp) ||
        !detail::entry_is_finite(grad_size_bits) ||
        !detail::entry_is_finite(bandwidth_bps) ||
        !detail::entry_is_finite(latency_s))
      throw std::invalid_argument("timing parameters must be finite");
  }

  /// Transmission time of one compressed gradient: delta * S_g / a.
  Scalar transmit_time(Scalar delta) const {
    return delta * grad_size_bits / bandwidth_bps;
  }
};

/// End times of the k-th computation (ts), transmission (tm) and
/// communication (tc), k = 0..t. Entry 0 is the initial state.
template <class Scalar = double>
struct PipelineSchedule {
  std::vector<Scalar> ts, tm, tc;
};

/// Event-exact unroll of the pipeline recurrence
///   tc[k]   = tm[k] + b
///   ts[k+1] = t_comp + max(tc[k - tau], ts[k])
///   tm[k+1] = delta * S_g / a + max(tm[k], ts[k+1])
/// with ts[0] = tm[0] = 0 and tc[k] = 0 for k <= 0.
template <class Scalar>
PipelineSchedule<Scalar> simulate_pipeline(const TimingParams<Scalar>& p,
                                           Scalar delta, int tau, int iters) {
  p.validate();
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  if (iters < 1) throw std::invalid_argument("iteration count must be >= 1");

  const Scalar transmit = p.transmit_time(delta);
  PipelineSchedule<Scalar> s;
  s.ts.assign(static_cast<std::size_t>(iters) + 1, Scalar(0));
  s.tm.assign(static_cast<std::size_t>(iters) + 1, Scalar(0));
  s.tc.assign(static_cast<std::size_t>(iters) + 1, Scalar(0));
  using std::max;
  for (int k = 0; k < iters; ++k) {
    const int j = k - tau;
    const Scalar arrived = j >= 1 ? s.tc[static_cast<std::size_t>(j)] : Scalar(0);
    s.ts[static_cast<std::size_t>(k) + 1] =
        p.t_comp + max(arrived, s.ts[static_cast<std::size_t>(k)]);
    s.tm[static_cast<std::size_t>(k) + 1] =
        transmit + max(s.tm[static_cast<std::size_t>(k)],
                       s.ts[static_cast<std::size_t>(k) + 1]);
    s.tc[static_cast<std::size_t>(k) + 1] =
        s.tm[static_cast<std::size_t>(k) + 1] + p.latency_s;
  }
  return s;
}

/// Asymptotic average iteration time:
///   max{ (t_comp + b + delta*S_g/a) / (tau + 1), delta*S_g/a, t_comp }.
template <class Scalar>
Scalar t_avg_closed_form(const TimingParams<Scalar>& p, Scalar delta,
                         int tau) {
  using std::max;
  const Scalar transmit = p.transmit_time(delta);
  const Scalar pipelined =
      (p.t_comp + p.latency_s + transmit) / Scalar(tau + 1);
  return max(pipelined, max(transmit, p.t_comp));
}

/// |tc[t] - t * t_avg_closed_form| never exceeds this, for any t.
template <class Scalar>
Scalar schedule_error_bound(const TimingParams<Scalar>& p, Scalar delta) {
  using std::min;
  return p.latency_s + min(p.t_comp, p.transmit_time(delta));
}

/// Staleness beyond which extra delay buys no iteration time:
///   min{ (delta*S_g/a + b)/t_comp, (t_comp + b)/(delta*S_g/a) },
/// the second term omitted when the transmission time is zero.
template <class Scalar>
Scalar tau_threshold(const TimingParams<Scalar>& p, Scalar delta) {
  using std::min;
  const Scalar transmit = p.transmit_time(delta);
  const Scalar fill = (transmit + p.latency_s) / p.t_comp;
  if (transmit == Scalar(0)) return fill;
  return min(fill, (p.t_comp + p.latency_s) / transmit);
}

/// Largest compression ratio whose transmission stays hidden behind
/// computation at staleness tau:
///   min{ (tau*t_comp - b) * a/S_g, t_comp * a/S_g, 1 },
/// clamped below by `delta_floor` (at least one coordinate must go out).
template <class Scalar>
Scalar delta_star(const TimingParams<Scalar>& p, int tau, Scalar delta_floor) {
  using std::max;
  using std::min;
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  if (p.grad_size_bits == Scalar(0)) return Scalar(1);
  const Scalar per_bit = p.bandwidth_bps / p.grad_size_bits;
  const Scalar hidden = (Scalar(tau) * p.t_comp - p.latency_s) * per_bit;
  const Scalar compute_budget = p.t_comp * per_bit;
  const Scalar raw = min(hidden, min(compute_budget, Scalar(1)));
  return max(raw, delta_floor);
}

inline constexpr double kDefaultDeltaFloor = 1e-6;  // one coordinate of d = 1e6

inline double delta_star(const TimingParams<double>& p, int tau) {
  return delta_star(p, tau, kDefaultDeltaFloor);
}

/// t_comp / t_avg: fraction of the wall clock spent computing.
template <class Scalar>
Scalar throughput_efficiency(const TimingParams<Scalar>& p, Scalar delta,
                             int tau) {
  return p.t_comp / t_avg_closed_form(p, delta, tau);
}

}  // namespace deco
