#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "deco/timing.hpp"

namespace deco {

/// Compression-noise amplification factor (1 - delta) / (delta * (1 - delta/2)^tau).
/// Zero when delta == 1 (no compression); grows without bound as delta -> 0
/// and exponentially in tau.
inline double phi(double delta, int tau) {
  validate_delta(delta);
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  if (delta == 1.0) return 0.0;
  return (1.0 - delta) / (delta * std::pow(1.0 - delta / 2.0, tau));
}

/// High-heterogeneity analog with delta^2 in the denominator.
inline double phi_prime(double delta, int tau) {
  return phi(delta, tau) / delta;
}

/// log(phi), safe for staleness values where (1 - delta/2)^tau underflows.
/// Returns -inf for delta == 1; ordering matches phi exactly.
inline double log_phi(double delta, int tau) {
  validate_delta(delta);
  if (tau < 0) throw std::invalid_argument("tau must be >= 0");
  if (delta == 1.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(-delta) - std::log(delta) -
         static_cast<double>(tau) * std::log1p(-delta / 2.0);
}

inline double log_phi_prime(double delta, int tau) {
  return log_phi(delta, tau) - std::log(delta);
}

enum class Regime {
  kStandard,           // phi drives convergence (low heterogeneity, noisy gradients)
  kHighHeterogeneity,  // phi' drives convergence (federated / small models)
};

struct Plan {
  int tau = 0;
  double delta = 1.0;
  double phi = 0.0;           // always the standard factor for (tau, delta)
  bool delta_clamped = false; // raw delta*(tau) fell at or below the floor
};

namespace detail {

inline int ceil_snapped(double x) {
  // ceil with a small backoff so binary representation error of exact
  // integer ratios does not push the bound up by one.
  return static_cast<int>(std::ceil(x - 1e-9));
}

inline double plan_score(double delta, int tau, Regime regime, bool log_space) {
  if (regime == Regime::kStandard)
    return log_space ? log_phi(delta, tau) : phi(delta, tau);
  return log_space ? log_phi_prime(delta, tau) : phi_prime(delta, tau);
}

}  // namespace detail

/// DeCo search: traverse tau over [ceil(b/t_comp), ceil((b + S_g/a)/t_comp)],
/// pair each tau with delta_star(tau), and return the pair minimizing the
/// regime's factor. Ties break toward the smaller tau. Candidates whose
/// delta clamped to the floor stay in the set; their factor is enormous and
/// wins only if every candidate clamps.
inline Plan deco_plan(const TimingParams<double>& p, Regime regime,
                      double delta_floor = kDefaultDeltaFloor) {
  p.validate();
  if (!(delta_floor > 0.0) || delta_floor > 1.0)
    throw std::invalid_argument("delta floor must lie in (0, 1]");

  const double full_transmit = p.grad_size_bits / p.bandwidth_bps;
  const double range_end = (p.latency_s + full_transmit) / p.t_comp;
  if (range_end > 1e6)
    throw std::invalid_argument(
        "staleness search range exceeds 1e6 iterations; check parameter units");
  const int tau_lo = std::max(0, detail::ceil_snapped(p.latency_s / p.t_comp));
  const int tau_hi = std::max(tau_lo, detail::ceil_snapped(range_end));
  const bool log_space = tau_hi > 64;

  Plan best;
  double best_score = std::numeric_limits<double>::infinity();
  bool have = false;
  for (int tau = tau_lo; tau <= tau_hi; ++tau) {
    const double raw = delta_star(p, tau, 0.0);
    const bool clamped = raw <= delta_floor;
    const double delta = clamped ? delta_floor : raw;
    const double score = detail::plan_score(delta, tau, regime, log_space);
    if (!have || score < best_score) {
      have = true;
      best_score = score;
      best = Plan{tau, delta, phi(delta, tau), clamped};
    }
  }
  return best;
}

/// Exhaustive verification oracle: evaluate every (tau, delta) on the given
/// grid subject to t_avg <= t_comp * (1 + tol) and return the factor-minimal
/// feasible pair (smaller tau, then larger delta, on exact ties).
/// Empty feasible set -> nullopt.
inline std::optional<Plan> brute_force_plan(const TimingParams<double>& p,
                                            int tau_max,
                                            std::vector<double> delta_grid,
                                            Regime regime = Regime::kStandard,
                                            double tol = 1e-9) {
  p.validate();
  if (tau_max < 0) throw std::invalid_argument("tau_max must be >= 0");
  std::sort(delta_grid.begin(), delta_grid.end(), std::greater<double>());
  delta_grid.erase(std::unique(delta_grid.begin(), delta_grid.end()),
                   delta_grid.end());
  const bool log_space = tau_max > 64;
  const double budget = p.t_comp * (1.0 + tol);

  std::optional<Plan> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int tau = 0; tau <= tau_max; ++tau) {
    for (double delta : delta_grid) {
      validate_delta(delta);
      if (t_avg_closed_form(p, delta, tau) > budget) continue;
      const double score = detail::plan_score(delta, tau, regime, log_space);
      if (!best || score < best_score) {
        best_score = score;
        best = Plan{tau, delta, phi(delta, tau), false};
      }
    }
  }
  return best;
}

/// Largest stepsize consistent with the convergence analysis:
///   min{ 1/(4L), 1/(4L*sqrt(tau)), 1/(4L*sqrt(phi/delta)) }.
/// Advisory only; runs are free to use any stepsize.
inline double advisory_gamma(double smoothness, double delta, int tau) {
  if (!(smoothness > 0.0))
    throw std::invalid_argument("smoothness must be > 0");
  double g = 1.0 / (4.0 * smoothness);
  if (tau > 0)
    g = std::min(g, 1.0 / (4.0 * smoothness * std::sqrt(static_cast<double>(tau))));
  const double factor = phi(delta, tau);
  if (factor > 0.0)
    g = std::min(g, 1.0 / (4.0 * smoothness * std::sqrt(factor / delta)));
  return g;
}

}  // namespace deco
