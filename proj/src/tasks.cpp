#include "deco/tasks.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace deco {

void TaskSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("task dim must be >= 1");
  if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
  if (zeta_knob < 0.0) throw std::invalid_argument("zeta knob must be >= 0");
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (!(mu > 0.0) || smoothness < mu)
    throw std::invalid_argument("need 0 < mu <= smoothness");
  if (samples_per_worker < 1)
    throw std::invalid_argument("samples per worker must be >= 1");
  if (ridge < 0.0) throw std::invalid_argument("ridge must be >= 0");
}

namespace {

Eigen::VectorXd gaussian_vector(SplitMix64& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.next_gaussian();
  return v;
}

Eigen::MatrixXd random_orthogonal(SplitMix64& rng, int d) {
  Eigen::MatrixXd g(d, d);
  for (int c = 0; c < d; ++c) g.col(c) = gaussian_vector(rng, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

constexpr std::uint64_t kHessianLabel = 0x100;
constexpr std::uint64_t kCenterLabel = 0x200;
constexpr std::uint64_t kDataLabel = 0x300;
constexpr std::uint64_t kMeanLabel = 0x400;

class QuadraticTask final : public SyntheticTask {
 public:
  explicit QuadraticTask(const TaskSpec& spec) : SyntheticTask(spec) {
    const int d = spec.dim;
    const int n = spec.workers;
    hessians_.reserve(n);
    centers_.reserve(n);
    Eigen::VectorXd eigs(d);
    for (int j = 0; j < d; ++j)
      eigs(j) = spec.mu + (spec.smoothness - spec.mu) *
                              (d > 1 ? static_cast<double>(j) / (d - 1) : 0.0);
    mean_hessian_ = Eigen::MatrixXd::Zero(d, d);
    mean_rhs_ = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) {
      auto hrng = labeled_stream(spec.seed, kHessianLabel + i);
      Eigen::MatrixXd q = random_orthogonal(hrng, d);
      Eigen::MatrixXd a = q * eigs.asDiagonal() * q.transpose();
      a = 0.5 * (a + a.transpose());  // kill asymmetry from rounding
      auto crng = labeled_stream(spec.seed, kCenterLabel + i);
      Eigen::VectorXd c = gaussian_vector(crng, d);
      const double norm = c.norm();
      if (norm > 0.0) c *= spec.zeta_knob / norm;
      hessians_.push_back(a);
      centers_.push_back(c);
      mean_hessian_ += a;
      mean_rhs_ += a * c;
    }
    mean_hessian_ /= n;
    mean_rhs_ /= n;
    minimizer_ = mean_hessian_.llt().solve(mean_rhs_);
    optimal_ = loss_raw(minimizer_);
  }

  Eigen::VectorXd worker_grad(int worker,
                              const Eigen::VectorXd& x) const override {
    return hessians_[worker] * (x - centers_[worker]);
  }

  double loss(const Eigen::VectorXd& x) const override { return loss_raw(x); }

  Eigen::VectorXd global_grad(const Eigen::VectorXd& x) const override {
    return mean_hessian_ * x - mean_rhs_;
  }

  double optimal_value() const override { return optimal_; }
  double smoothness_bound() const override { return spec_.smoothness; }

 private:
  double loss_raw(const Eigen::VectorXd& x) const {
    double sum = 0.0;
    for (int i = 0; i < spec_.workers; ++i) {
      Eigen::VectorXd r = x - centers_[i];
      sum += 0.5 * r.dot(hessians_[i] * r);
    }
    return sum / spec_.workers;
  }

  std::vector<Eigen::MatrixXd> hessians_;
  std::vector<Eigen::VectorXd> centers_;
  Eigen::MatrixXd mean_hessian_;
  Eigen::VectorXd mean_rhs_;
  Eigen::VectorXd minimizer_;
  double optimal_ = 0.0;
};

class LogisticTask final : public SyntheticTask {
 public:
  explicit LogisticTask(const TaskSpec& spec) : SyntheticTask(spec) {
    const int d = spec.dim;
    const int n = spec.workers;
    const int m = spec.samples_per_worker;
    auto mrng = labeled_stream(spec.seed, kMeanLabel);
    Eigen::VectorXd base = gaussian_vector(mrng, d).normalized();
    features_.resize(n);
    labels_.resize(n);
    for (int i = 0; i < n; ++i) {
      auto rng = labeled_stream(spec.seed, kDataLabel + i);
      Eigen::VectorXd shift = gaussian_vector(rng, d).normalized();
      Eigen::VectorXd mean = base + spec.zeta_knob * shift;
      features_[i].resize(m, d);
      labels_[i].resize(m);
      for (int s = 0; s < m; ++s) {
        const double y = (s % 2 == 0) ? 1.0 : -1.0;
        features_[i].row(s) =
            (y * mean + 0.5 * gaussian_vector(rng, d)).transpose();
        labels_[i](s) = y;
      }
    }
  }

  Eigen::VectorXd worker_grad(int worker,
                              const Eigen::VectorXd& x) const override {
    const auto& z = features_[worker];
    const auto& y = labels_[worker];
    const int m = static_cast<int>(y.size());
    Eigen::VectorXd margins = (z * x).cwiseProduct(y);
    Eigen::VectorXd g = spec_.ridge * x;
    for (int s = 0; s < m; ++s) {
      const double p = 1.0 / (1.0 + std::exp(margins(s)));
      g -= (p * y(s) / m) * z.row(s).transpose();
    }
    return g;
  }

  double loss(const Eigen::VectorXd& x) const override {
    double sum = 0.0;
    for (int i = 0; i < spec_.workers; ++i) {
      const auto& z = features_[i];
      const auto& y = labels_[i];
      const int m = static_cast<int>(y.size());
      Eigen::VectorXd margins = (z * x).cwiseProduct(y);
      double local = 0.0;
      for (int s = 0; s < m; ++s) {
        const double t = -margins(s);
        // log(1 + e^t) without overflow
        local += t > 0.0 ? t + std::log1p(std::exp(-t))
                         : std::log1p(std::exp(t));
      }
      sum += local / m + 0.5 * spec_.ridge * x.squaredNorm();
    }
    return sum / spec_.workers;
  }

  Eigen::VectorXd global_grad(const Eigen::VectorXd& x) const override {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(spec_.dim);
    for (int i = 0; i < spec_.workers; ++i) g += worker_grad(i, x);
    return g / spec_.workers;
  }

  double optimal_value() const override {
    return std::numeric_limits<double>::quiet_NaN();
  }

  double smoothness_bound() const override {
    double bound = 0.0;
    for (int i = 0; i < spec_.workers; ++i) {
      const int m = static_cast<int>(labels_[i].size());
      bound = std::max(bound, features_[i].squaredNorm() / (4.0 * m));
    }
    return bound + spec_.ridge;
  }

 private:
  std::vector<Eigen::MatrixXd> features_;
  std::vector<Eigen::VectorXd> labels_;
};

}  // namespace

Eigen::VectorXd SyntheticTask::stochastic_gradient(
    int worker, std::uint64_t iteration, const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = worker_grad(worker, x);
  if (spec_.sigma > 0.0) {
    auto rng = worker_stream(spec_.seed, static_cast<std::uint64_t>(worker),
                             iteration);
    const double scale = spec_.sigma / std::sqrt(static_cast<double>(dim()));
    for (int j = 0; j < dim(); ++j) g(j) += scale * rng.next_gaussian();
  }
  return g;
}

std::unique_ptr<SyntheticTask> make_task(const TaskSpec& spec) {
  spec.validate();
  if (spec.kind == TaskKind::kQuadratic)
    return std::make_unique<QuadraticTask>(spec);
  return std::make_unique<LogisticTask>(spec);
}

}  // namespace deco
