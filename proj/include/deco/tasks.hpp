#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "deco/rng.hpp"

namespace deco {

enum class TaskKind { kQuadratic, kLogistic };

/// Synthetic optimization task shared by n workers. The heterogeneity knob
/// spreads the per-worker objectives apart; sigma scales the stochastic
/// gradient noise (isotropic Gaussian, variance sigma^2/d per coordinate).
struct TaskSpec {
  TaskKind kind = TaskKind::kQuadratic;
  int dim = 20;
  int workers = 4;
  double zeta_knob = 0.5;
  double sigma = 0.0;
  std::uint64_t seed = 1;

  // quadratic: per-worker Hessian eigenvalues span [mu, smoothness]
  double mu = 1.0;
  double smoothness = 10.0;

  // logistic
  int samples_per_worker = 64;
  double ridge = 1e-3;

  void validate() const;
};

class SyntheticTask {
 public:
  virtual ~SyntheticTask() = default;

  const TaskSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int workers() const { return spec_.workers; }

  /// Noiseless local gradient of worker i at x.
  virtual Eigen::VectorXd worker_grad(int worker,
                                      const Eigen::VectorXd& x) const = 0;
  /// Global objective f(x) = mean of worker objectives.
  virtual double loss(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd global_grad(const Eigen::VectorXd& x) const = 0;
  /// Minimum of f; NaN when no closed form exists.
  virtual double optimal_value() const = 0;
  /// Upper bound on the global smoothness constant.
  virtual double smoothness_bound() const = 0;

  /// Stochastic oracle: worker_grad plus seeded Gaussian noise. The noise
  /// stream depends only on (task seed, worker, iteration).
  Eigen::VectorXd stochastic_gradient(int worker, std::uint64_t iteration,
                                      const Eigen::VectorXd& x) const;

 protected:
  explicit SyntheticTask(const TaskSpec& spec) : spec_(spec) {}
  TaskSpec spec_;
};

std::unique_ptr<SyntheticTask> make_task(const TaskSpec& spec);

}  // namespace deco
